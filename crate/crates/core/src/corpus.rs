//! Article bundles: raw text, a token/coreference XML layer and a standoff
//! attribution-span file, consolidated into one immutable value per article.
//!
//! All offsets are UTF-8 byte offsets into the raw text. Token ids are
//! document-global and 0-based. Mention ranges are half-open token-id ranges.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: file is not valid UTF-8")]
    Encoding { path: PathBuf },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("token {token}: surface {surface:?} does not match raw text slice {slice:?}")]
    OffsetMismatch {
        token: usize,
        surface: String,
        slice: String,
    },
    #[error("chain {chain_id}: expected exactly one representative mention, found {count}")]
    Chain { chain_id: i64, count: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: attribution {attr_id} declares the same {role} span twice")]
    DuplicateSpan {
        line: usize,
        attr_id: usize,
        role: Role,
    },
    #[error("attribution {attr_id}: no {role} span")]
    MissingField { attr_id: usize, role: Role },
    #[error("attribution {attr_id}: span {start}..{end} outside text of {len} bytes")]
    Bounds {
        attr_id: usize,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("attribution {attr_id}: {message}")]
    Validation { attr_id: usize, message: String },
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArticleKey {
    pub publisher_name: String,
    pub article_name: String,
}

impl ArticleKey {
    pub fn new(publisher_name: impl Into<String>, article_name: impl Into<String>) -> Self {
        ArticleKey {
            publisher_name: publisher_name.into(),
            article_name: article_name.into(),
        }
    }
}

impl fmt::Display for ArticleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.publisher_name, self.article_name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AttributionKey {
    pub publisher_name: String,
    pub article_name: String,
    pub attr_id: usize,
}

impl AttributionKey {
    pub fn new(article: &ArticleKey, attr_id: usize) -> Self {
        AttributionKey {
            publisher_name: article.publisher_name.clone(),
            article_name: article.article_name.clone(),
            attr_id,
        }
    }

    pub fn article_key(&self) -> ArticleKey {
        ArticleKey::new(&self.publisher_name, &self.article_name)
    }
}

impl fmt::Display for AttributionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}#{}",
            self.publisher_name, self.article_name, self.attr_id
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    pub sentence_id: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub surface: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mention {
    pub chain_id: i64,
    pub token_start: usize,
    pub token_end: usize,
    pub is_representative: bool,
}

impl Mention {
    pub fn tokens(&self) -> Range<usize> {
        self.token_start..self.token_end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorefChain {
    pub chain_id: i64,
    pub mentions: Vec<Mention>,
}

impl CorefChain {
    pub fn representative(&self) -> &Mention {
        self.mentions
            .iter()
            .find(|m| m.is_representative)
            .expect("chain validated with exactly one representative")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Cue,
    Content,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Source, Role::Cue, Role::Content];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Source => "source",
            Role::Cue => "cue",
            Role::Content => "content",
        }
    }

    fn parse(s: &str) -> Option<Role> {
        match s {
            "source" => Some(Role::Source),
            "cue" => Some(Role::Cue),
            "content" => Some(Role::Content),
            _ => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Half-open byte range into the raw text.
pub type Span = (usize, usize);

/// One attribution as a (source, cue, content) triple of span lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpanTriple {
    pub attr_id: usize,
    pub source_spans: Vec<Span>,
    pub cue_spans: Vec<Span>,
    pub content_spans: Vec<Span>,
}

impl SpanTriple {
    pub fn spans(&self, role: Role) -> &[Span] {
        match role {
            Role::Source => &self.source_spans,
            Role::Cue => &self.cue_spans,
            Role::Content => &self.content_spans,
        }
    }

    fn spans_mut(&mut self, role: Role) -> &mut Vec<Span> {
        match role {
            Role::Source => &mut self.source_spans,
            Role::Cue => &mut self.cue_spans,
            Role::Content => &mut self.content_spans,
        }
    }
}

/// Reads a raw-text file byte for byte. No newline normalization.
pub fn parse_raw_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    String::from_utf8(bytes).map_err(|_| CorpusError::Encoding {
        path: path.to_path_buf(),
    })
}

fn read_utf8(path: &Path) -> Result<String> {
    parse_raw_text(path)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct XmlOptions {
    /// Skip unknown elements (and their subtrees) instead of failing.
    pub lenient: bool,
}

pub fn parse_token_xml(
    path: &Path,
    raw_text: &str,
    opts: XmlOptions,
) -> Result<(Vec<Token>, Vec<CorefChain>)> {
    let xml = read_utf8(path)?;
    parse_token_xml_str(&xml, raw_text, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum XmlState {
    Start,
    Document,
    Sentences,
    Sentence,
    Token,
    Coreference,
    Chain,
    Done,
}

fn attr_value(e: &BytesStart<'_>, name: &str) -> Result<String> {
    for a in e.attributes() {
        let a = a.map_err(|err| CorpusError::Schema(format!("bad attribute: {err}")))?;
        if a.key.as_ref() == name.as_bytes() {
            let v = a
                .unescape_value()
                .map_err(|err| CorpusError::Schema(format!("bad attribute value: {err}")))?;
            return Ok(v.into_owned());
        }
    }
    Err(CorpusError::Schema(format!(
        "<{}> missing attribute `{name}`",
        String::from_utf8_lossy(e.name().as_ref())
    )))
}

fn attr_num<T: std::str::FromStr>(e: &BytesStart<'_>, name: &str) -> Result<T> {
    let v = attr_value(e, name)?;
    v.trim().parse().map_err(|_| {
        CorpusError::Schema(format!(
            "<{}> attribute `{name}` is not a number: {v:?}",
            String::from_utf8_lossy(e.name().as_ref())
        ))
    })
}

/// Parses the token/coreference XML subset from a string.
pub fn parse_token_xml_str(
    xml: &str,
    raw_text: &str,
    opts: XmlOptions,
) -> Result<(Vec<Token>, Vec<CorefChain>)> {
    let mut reader = Reader::from_str(xml);
    let mut state = XmlState::Start;
    let mut tokens: Vec<Token> = Vec::new();
    let mut chains: Vec<CorefChain> = Vec::new();
    let mut sentence_id = 0usize;
    let mut pending: Option<(usize, usize, usize)> = None;
    let mut surface = String::new();
    let mut skip_depth = 0usize;

    loop {
        let event = reader
            .read_event()
            .map_err(|e| CorpusError::Schema(format!("malformed XML: {e}")))?;
        if skip_depth > 0 {
            match event {
                Event::Start(_) => skip_depth += 1,
                Event::End(_) => skip_depth -= 1,
                Event::Eof => return Err(CorpusError::Schema("unexpected end of XML".into())),
                _ => {}
            }
            continue;
        }
        match event {
            Event::Decl(_) | Event::Comment(_) | Event::PI(_) | Event::DocType(_) => {}
            Event::Start(ref e) => {
                let name = e.name().as_ref().to_vec();
                match (state, name.as_slice()) {
                    (XmlState::Start, b"document") => state = XmlState::Document,
                    (XmlState::Document, b"sentences") => state = XmlState::Sentences,
                    (XmlState::Document, b"coreference") => state = XmlState::Coreference,
                    (XmlState::Sentences, b"sentence") => {
                        sentence_id = attr_num(e, "id")?;
                        state = XmlState::Sentence;
                    }
                    (XmlState::Sentence, b"token") => {
                        let id: usize = attr_num(e, "id")?;
                        let start: usize = attr_num(e, "start")?;
                        let end: usize = attr_num(e, "end")?;
                        pending = Some((id, start, end));
                        surface.clear();
                        state = XmlState::Token;
                    }
                    (XmlState::Coreference, b"chain") => {
                        chains.push(CorefChain {
                            chain_id: attr_num(e, "id")?,
                            mentions: Vec::new(),
                        });
                        state = XmlState::Chain;
                    }
                    (XmlState::Chain, b"mention") => {
                        push_mention(e, &mut chains)?;
                        skip_depth = 1;
                    }
                    _ => unknown_element(&name, opts, &mut skip_depth)?,
                }
            }
            Event::Empty(ref e) => {
                let name = e.name().as_ref().to_vec();
                match (state, name.as_slice()) {
                    (XmlState::Chain, b"mention") => push_mention(e, &mut chains)?,
                    (XmlState::Document, b"sentences") | (XmlState::Document, b"coreference") => {}
                    (XmlState::Sentences, b"sentence") => {}
                    (XmlState::Coreference, b"chain") => chains.push(CorefChain {
                        chain_id: attr_num(e, "id")?,
                        mentions: Vec::new(),
                    }),
                    (XmlState::Start, b"document") => state = XmlState::Done,
                    _ => {
                        let mut depth = 0;
                        unknown_element(&name, opts, &mut depth)?;
                    }
                }
            }
            Event::Text(t) => {
                let text = t
                    .xml_content()
                    .map_err(|e| CorpusError::Schema(format!("bad text: {e}")))?;
                if state == XmlState::Token {
                    surface.push_str(&text);
                } else if !text.trim().is_empty() {
                    return Err(CorpusError::Schema(format!(
                        "unexpected text {:?}",
                        text.trim()
                    )));
                }
            }
            Event::GeneralRef(r) => {
                if state != XmlState::Token {
                    return Err(CorpusError::Schema("unexpected entity reference".into()));
                }
                let name = String::from_utf8_lossy(r.as_ref()).into_owned();
                surface.push_str(&resolve_entity(&name)?);
            }
            Event::CData(c) => {
                if state != XmlState::Token {
                    return Err(CorpusError::Schema("unexpected CDATA".into()));
                }
                surface.push_str(&String::from_utf8_lossy(c.as_ref()));
            }
            Event::End(_) => {
                state = match state {
                    XmlState::Token => {
                        let (id, start, end) = pending.take().expect("token start recorded");
                        tokens.push(Token {
                            id,
                            sentence_id,
                            char_start: start,
                            char_end: end,
                            surface: std::mem::take(&mut surface),
                        });
                        XmlState::Sentence
                    }
                    XmlState::Sentence => XmlState::Sentences,
                    XmlState::Sentences | XmlState::Coreference => XmlState::Document,
                    XmlState::Chain => XmlState::Coreference,
                    XmlState::Document => XmlState::Done,
                    s => s,
                };
            }
            Event::Eof => break,
        }
    }
    if state != XmlState::Done {
        return Err(CorpusError::Schema("missing <document> root".into()));
    }

    validate_tokens(&tokens, raw_text)?;
    for chain in &chains {
        let count = chain.mentions.iter().filter(|m| m.is_representative).count();
        if count != 1 {
            return Err(CorpusError::Chain {
                chain_id: chain.chain_id,
                count,
            });
        }
        for m in &chain.mentions {
            if m.token_start >= m.token_end || m.token_end > tokens.len() {
                return Err(CorpusError::Schema(format!(
                    "chain {}: mention {}..{} outside {} tokens",
                    chain.chain_id,
                    m.token_start,
                    m.token_end,
                    tokens.len()
                )));
            }
        }
    }
    chains.sort_by_key(|c| c.chain_id);
    if chains.windows(2).any(|w| w[0].chain_id == w[1].chain_id) {
        return Err(CorpusError::Schema("duplicate chain id".into()));
    }
    Ok((tokens, chains))
}

fn resolve_entity(name: &str) -> Result<String> {
    let s = match name {
        "amp" => "&".to_string(),
        "lt" => "<".to_string(),
        "gt" => ">".to_string(),
        "quot" => "\"".to_string(),
        "apos" => "'".to_string(),
        _ => {
            let code = if let Some(hex) = name.strip_prefix("#x") {
                u32::from_str_radix(hex, 16).ok()
            } else if let Some(dec) = name.strip_prefix('#') {
                dec.parse().ok()
            } else {
                None
            };
            match code.and_then(char::from_u32) {
                Some(c) => c.to_string(),
                None => return Err(CorpusError::Schema(format!("unknown entity &{name};"))),
            }
        }
    };
    Ok(s)
}

fn unknown_element(name: &[u8], opts: XmlOptions, skip_depth: &mut usize) -> Result<()> {
    if opts.lenient {
        *skip_depth = 1;
        Ok(())
    } else {
        Err(CorpusError::Schema(format!(
            "unexpected element <{}>",
            String::from_utf8_lossy(name)
        )))
    }
}

fn push_mention(e: &BytesStart<'_>, chains: &mut [CorefChain]) -> Result<()> {
    let chain = chains.last_mut().expect("inside a chain");
    let rep = attr_value(e, "representative")?;
    let is_representative = match rep.as_str() {
        "true" => true,
        "false" => false,
        other => {
            return Err(CorpusError::Schema(format!(
                "representative must be true|false, got {other:?}"
            )))
        }
    };
    chain.mentions.push(Mention {
        chain_id: chain.chain_id,
        token_start: attr_num(e, "start")?,
        token_end: attr_num(e, "end")?,
        is_representative,
    });
    Ok(())
}

fn validate_tokens(tokens: &[Token], raw_text: &str) -> Result<()> {
    let mut prev_end = 0usize;
    for (i, t) in tokens.iter().enumerate() {
        if t.id != i {
            return Err(CorpusError::Schema(format!(
                "token ids must be dense and increasing from 0; found {} at position {i}",
                t.id
            )));
        }
        if t.char_start >= t.char_end {
            return Err(CorpusError::Schema(format!(
                "token {}: empty or inverted span {}..{}",
                t.id, t.char_start, t.char_end
            )));
        }
        if t.char_start < prev_end {
            return Err(CorpusError::Schema(format!(
                "token {} overlaps its predecessor",
                t.id
            )));
        }
        prev_end = t.char_end;
        let slice = raw_text.get(t.char_start..t.char_end);
        if slice != Some(t.surface.as_str()) {
            return Err(CorpusError::OffsetMismatch {
                token: t.id,
                surface: t.surface.clone(),
                slice: slice
                    .map(str::to_string)
                    .unwrap_or_else(|| "<out of bounds>".into()),
            });
        }
        if i > 0 && t.sentence_id < tokens[i - 1].sentence_id {
            return Err(CorpusError::Schema(format!(
                "token {}: sentence ids must not decrease",
                t.id
            )));
        }
    }
    Ok(())
}

pub fn parse_attribution_file(path: &Path) -> Result<Vec<SpanTriple>> {
    parse_attribution_str(&read_utf8(path)?)
}

/// Parses the tab-separated standoff grammar
/// `attr_id<TAB>role<TAB>char_start<TAB>char_end`.
pub fn parse_attribution_str(text: &str) -> Result<Vec<SpanTriple>> {
    let mut by_id: BTreeMap<usize, (usize, SpanTriple)> = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        let parse_err = |message: String| CorpusError::Parse {
            line: line_no,
            message,
        };
        if fields.len() != 4 {
            return Err(parse_err(format!(
                "expected 4 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let attr_id: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("bad attr_id {:?}", fields[0])))?;
        let role = Role::parse(fields[1])
            .ok_or_else(|| parse_err(format!("unknown role {:?}", fields[1])))?;
        let start: usize = fields[2]
            .parse()
            .map_err(|_| parse_err(format!("bad char_start {:?}", fields[2])))?;
        let end: usize = fields[3]
            .parse()
            .map_err(|_| parse_err(format!("bad char_end {:?}", fields[3])))?;
        if start >= end {
            return Err(parse_err(format!("empty or inverted span {start}..{end}")));
        }
        let (_, triple) = by_id.entry(attr_id).or_insert_with(|| {
            (
                line_no,
                SpanTriple {
                    attr_id,
                    ..SpanTriple::default()
                },
            )
        });
        let spans = triple.spans_mut(role);
        if spans.contains(&(start, end)) {
            return Err(CorpusError::DuplicateSpan {
                line: line_no,
                attr_id,
                role,
            });
        }
        spans.push((start, end));
    }

    let mut out = Vec::with_capacity(by_id.len());
    for (expected, (attr_id, (first_line, mut triple))) in by_id.into_iter().enumerate() {
        if attr_id != expected {
            return Err(CorpusError::Parse {
                line: first_line,
                message: format!("attr_ids must be dense from 0; expected {expected}, found {attr_id}"),
            });
        }
        for role in Role::ALL {
            let spans = triple.spans_mut(role);
            spans.sort_unstable();
            if spans.windows(2).any(|w| w[1].0 < w[0].1) {
                return Err(CorpusError::Parse {
                    line: first_line,
                    message: format!("attribution {attr_id}: overlapping {role} spans"),
                });
            }
        }
        if triple.source_spans.is_empty() {
            return Err(CorpusError::MissingField {
                attr_id,
                role: Role::Source,
            });
        }
        if triple.content_spans.is_empty() {
            return Err(CorpusError::MissingField {
                attr_id,
                role: Role::Content,
            });
        }
        out.push(triple);
    }
    Ok(out)
}

/// Serializes span triples in canonical order (by attr_id, then role, then span).
pub fn write_attribution_str(triples: &[SpanTriple]) -> String {
    let mut out = String::new();
    let mut sorted: Vec<&SpanTriple> = triples.iter().collect();
    sorted.sort_by_key(|t| t.attr_id);
    for t in sorted {
        for role in Role::ALL {
            let mut spans = t.spans(role).to_vec();
            spans.sort_unstable();
            for (s, e) in spans {
                out.push_str(&format!("{}\t{}\t{}\t{}\n", t.attr_id, role, s, e));
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ConsolidatedArticle {
    pub key: ArticleKey,
    pub raw_text: String,
    pub tokens: Vec<Token>,
    pub coref_chains: Vec<CorefChain>,
    pub attributions: Vec<SpanTriple>,
}

/// Checks every cross-layer invariant and assembles the article.
pub fn consolidate(
    key: ArticleKey,
    raw_text: String,
    tokens: Vec<Token>,
    chains: Vec<CorefChain>,
    span_triples: Vec<SpanTriple>,
) -> Result<ConsolidatedArticle> {
    if key.publisher_name.is_empty() || key.article_name.is_empty() {
        return Err(CorpusError::Schema("article key fields must be nonempty".into()));
    }
    validate_tokens(&tokens, &raw_text)?;
    for chain in &chains {
        for m in &chain.mentions {
            if m.token_start >= m.token_end || m.token_end > tokens.len() {
                return Err(CorpusError::Schema(format!(
                    "chain {}: mention {}..{} refers to missing tokens",
                    chain.chain_id, m.token_start, m.token_end
                )));
            }
        }
    }
    let len = raw_text.len();
    for (i, t) in span_triples.iter().enumerate() {
        if t.attr_id != i {
            return Err(CorpusError::Validation {
                attr_id: t.attr_id,
                message: format!("attr_id out of order; expected {i}"),
            });
        }
        if t.source_spans.is_empty() || t.content_spans.is_empty() {
            return Err(CorpusError::Validation {
                attr_id: t.attr_id,
                message: "source and content spans are required".into(),
            });
        }
        for role in Role::ALL {
            let spans = t.spans(role);
            for &(s, e) in spans {
                if s >= e || e > len {
                    return Err(CorpusError::Bounds {
                        attr_id: t.attr_id,
                        start: s,
                        end: e,
                        len,
                    });
                }
                if !raw_text.is_char_boundary(s) || !raw_text.is_char_boundary(e) {
                    return Err(CorpusError::Validation {
                        attr_id: t.attr_id,
                        message: format!("{role} span {s}..{e} splits a UTF-8 character"),
                    });
                }
            }
            if spans.windows(2).any(|w| w[1].0 < w[0].1) {
                return Err(CorpusError::Validation {
                    attr_id: t.attr_id,
                    message: format!("{role} spans unsorted or overlapping"),
                });
            }
        }
    }
    Ok(ConsolidatedArticle {
        key,
        raw_text,
        tokens,
        coref_chains: chains,
        attributions: span_triples,
    })
}

impl ConsolidatedArticle {
    /// Token ids whose character extent intersects `start..end`.
    pub fn tokens_covering(&self, start: usize, end: usize) -> Range<usize> {
        if start >= end {
            return 0..0;
        }
        let lo = self.tokens.partition_point(|t| t.char_end <= start);
        let hi = self.tokens.partition_point(|t| t.char_start < end);
        lo..hi.max(lo)
    }

    /// Sorted, de-duplicated token ids covered by all spans of one role.
    pub fn role_tokens(&self, triple: &SpanTriple, role: Role) -> Vec<usize> {
        let mut ids = BTreeSet::new();
        for &(s, e) in triple.spans(role) {
            ids.extend(self.tokens_covering(s, e));
        }
        ids.into_iter().collect()
    }

    /// Text of one role; discontiguous spans are joined with a single space.
    pub fn role_text(&self, triple: &SpanTriple, role: Role) -> String {
        triple
            .spans(role)
            .iter()
            .map(|&(s, e)| &self.raw_text[s..e])
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Raw text from the first to the last token of a mention.
    pub fn mention_text(&self, m: &Mention) -> &str {
        let s = self.tokens[m.token_start].char_start;
        let e = self.tokens[m.token_end - 1].char_end;
        &self.raw_text[s..e]
    }

    pub fn attribution(&self, attr_id: usize) -> Option<&SpanTriple> {
        self.attributions.get(attr_id)
    }
}

/// A set of consolidated articles keyed by [`ArticleKey`].
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub articles: BTreeMap<ArticleKey, ConsolidatedArticle>,
}

#[derive(Debug)]
pub struct IngestFailure {
    pub key: ArticleKey,
    pub error: CorpusError,
}

impl fmt::Display for IngestFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.error)
    }
}

impl Corpus {
    pub fn insert(&mut self, article: ConsolidatedArticle) {
        self.articles.insert(article.key.clone(), article);
    }

    pub fn get(&self, key: &ArticleKey) -> Option<&ConsolidatedArticle> {
        self.articles.get(key)
    }

    pub fn resolve(&self, key: &AttributionKey) -> Option<(&ConsolidatedArticle, &SpanTriple)> {
        let article = self.articles.get(&key.article_key())?;
        let triple = article.attribution(key.attr_id)?;
        Some((article, triple))
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    /// Loads `<dir>/<publisher>/<article>.{txt,xml,attr}`. Articles that fail
    /// to parse are reported and skipped; the rest are returned.
    pub fn load_dir(dir: &Path, opts: XmlOptions) -> Result<(Corpus, Vec<IngestFailure>)> {
        let io_err = |path: &Path, source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut publishers: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| io_err(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        publishers.sort();

        let mut corpus = Corpus::default();
        let mut failures = Vec::new();
        for pub_dir in publishers {
            let publisher = file_name(&pub_dir);
            let mut names = BTreeSet::new();
            for entry in fs::read_dir(&pub_dir).map_err(|e| io_err(&pub_dir, e))? {
                let path = entry.map_err(|e| io_err(&pub_dir, e))?.path();
                let is_layer = matches!(
                    path.extension().and_then(|e| e.to_str()),
                    Some("txt" | "xml" | "attr")
                );
                if path.is_file() && is_layer {
                    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                        names.insert(stem.to_string());
                    }
                }
            }
            for name in names {
                let key = ArticleKey::new(&publisher, &name);
                match load_article(&pub_dir, key.clone(), opts) {
                    Ok(article) => corpus.insert(article),
                    Err(error) => failures.push(IngestFailure { key, error }),
                }
            }
        }
        Ok((corpus, failures))
    }
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn load_article(
    publisher_dir: &Path,
    key: ArticleKey,
    opts: XmlOptions,
) -> Result<ConsolidatedArticle> {
    let base = publisher_dir.join(&key.article_name);
    let raw = parse_raw_text(&base.with_extension("txt"))?;
    let (tokens, chains) = parse_token_xml(&base.with_extension("xml"), &raw, opts)?;
    let triples = parse_attribution_file(&base.with_extension("attr"))?;
    consolidate(key, raw, tokens, chains, triples)
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Serializes the token and coreference layers in the XML subset read by
/// [`parse_token_xml`].
pub fn write_token_xml(tokens: &[Token], chains: &[CorefChain]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<document>\n  <sentences>\n");
    let mut current: Option<usize> = None;
    for t in tokens {
        if current != Some(t.sentence_id) {
            if current.is_some() {
                out.push_str("    </sentence>\n");
            }
            out.push_str(&format!("    <sentence id=\"{}\">\n", t.sentence_id));
            current = Some(t.sentence_id);
        }
        out.push_str(&format!(
            "      <token id=\"{}\" start=\"{}\" end=\"{}\">{}</token>\n",
            t.id,
            t.char_start,
            t.char_end,
            xml_escape(&t.surface)
        ));
    }
    if current.is_some() {
        out.push_str("    </sentence>\n");
    }
    out.push_str("  </sentences>\n  <coreference>\n");
    for c in chains {
        out.push_str(&format!("    <chain id=\"{}\">\n", c.chain_id));
        for m in &c.mentions {
            out.push_str(&format!(
                "      <mention start=\"{}\" end=\"{}\" representative=\"{}\"/>\n",
                m.token_start, m.token_end, m.is_representative
            ));
        }
        out.push_str("    </chain>\n");
    }
    out.push_str("  </coreference>\n</document>\n");
    out
}

/// Incrementally assembles an article: text is appended piece by piece and
/// tokenized on the fly (word runs and single punctuation marks), so chains
/// and attributions can be declared by character span.
#[derive(Debug, Clone)]
pub struct ArticleBuilder {
    key: ArticleKey,
    text: String,
    tokens: Vec<Token>,
    sentence: usize,
    sentence_open: bool,
    chains: Vec<CorefChain>,
    triples: Vec<SpanTriple>,
}

impl ArticleBuilder {
    pub fn new(key: ArticleKey) -> Self {
        ArticleBuilder {
            key,
            text: String::new(),
            tokens: Vec::new(),
            sentence: 0,
            sentence_open: false,
            chains: Vec::new(),
            triples: Vec::new(),
        }
    }

    /// Appends `piece` and returns its byte span.
    pub fn append(&mut self, piece: &str) -> Span {
        let start = self.text.len();
        self.text.push_str(piece);
        let is_word = |c: char| c.is_alphanumeric() || c == '\'';
        let mut bounds = Vec::new();
        let mut word_start: Option<usize> = None;
        for (off, c) in piece.char_indices() {
            let pos = start + off;
            if is_word(c) {
                word_start.get_or_insert(pos);
                continue;
            }
            if let Some(ws) = word_start.take() {
                bounds.push((ws, pos));
            }
            if !c.is_whitespace() {
                bounds.push((pos, pos + c.len_utf8()));
            }
        }
        if let Some(ws) = word_start {
            bounds.push((ws, self.text.len()));
        }
        for (s, e) in bounds {
            self.tokens.push(Token {
                id: self.tokens.len(),
                sentence_id: self.sentence,
                char_start: s,
                char_end: e,
                surface: self.text[s..e].to_string(),
            });
            self.sentence_open = true;
        }
        (start, self.text.len())
    }

    /// Closes the current sentence; the next token starts a new one.
    pub fn end_sentence(&mut self) {
        if self.sentence_open {
            self.sentence += 1;
            self.sentence_open = false;
        }
    }

    fn token_range(&self, (s, e): Span) -> (usize, usize) {
        let lo = self.tokens.partition_point(|t| t.char_end <= s);
        let hi = self.tokens.partition_point(|t| t.char_start < e);
        (lo, hi)
    }

    /// Adds a chain whose representative mention covers `rep` and whose other
    /// mentions cover `others`. Returns the chain id.
    pub fn add_chain(&mut self, rep: Span, others: &[Span]) -> i64 {
        let chain_id = self.chains.len() as i64;
        let mut mentions = Vec::with_capacity(others.len() + 1);
        for (span, is_representative) in std::iter::once((rep, true))
            .chain(others.iter().map(|&s| (s, false)))
        {
            let (token_start, token_end) = self.token_range(span);
            mentions.push(Mention {
                chain_id,
                token_start,
                token_end,
                is_representative,
            });
        }
        mentions.sort_by_key(|m| (m.token_start, m.token_end));
        self.chains.push(CorefChain { chain_id, mentions });
        chain_id
    }

    pub fn add_attribution(&mut self, source: Vec<Span>, cue: Vec<Span>, content: Vec<Span>) -> usize {
        let attr_id = self.triples.len();
        self.triples.push(SpanTriple {
            attr_id,
            source_spans: source,
            cue_spans: cue,
            content_spans: content,
        });
        attr_id
    }

    pub fn build(self) -> Result<ConsolidatedArticle> {
        consolidate(self.key, self.text, self.tokens, self.chains, self.triples)
    }
}
