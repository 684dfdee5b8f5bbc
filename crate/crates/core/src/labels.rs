//! Label taxonomies, the labeled-attributions CSV and the assembled dataset.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AttributionKey, Corpus, Role};

/// Declares a closed label set with canonical lowercase names.
macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl FromStr for $name {
            type Err = ();

            fn from_str(s: &str) -> Result<Self, ()> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(()),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

label_enum!(
    /// Gold source identity assigned by annotators.
    SourceLabel {
        Trump => "trump",
        Clinton => "clinton",
        Sanders => "sanders",
        Cruz => "cruz",
        OtherPerson => "other_person",
        Organization => "organization",
        Unknown => "unknown",
    }
);

label_enum!(Valence {
    Positive => "positive",
    Negative => "negative",
    Neutral => "neutral",
});

label_enum!(AttrType {
    Headline => "headline",
    PoliticalPlatform => "political_platform",
    PersonalStance => "personal_stance",
    SpeechSnippet => "speech_snippet",
    TrumpCallout => "trump_callout",
    ClintonCallout => "clinton_callout",
    SandersCallout => "sanders_callout",
    CruzCallout => "cruz_callout",
    GroupCallout => "group_callout",
    OtherCallout => "other_callout",
});

label_enum!(StanceType {
    FavoursTrump => "favours_trump",
    FavoursClinton => "favours_clinton",
    FavoursOther => "favours_other",
    AgainstTrump => "against_trump",
    AgainstClinton => "against_clinton",
    AgainstOther => "against_other",
    FavoursBoth => "favours_both",
    AgainstBoth => "against_both",
    NeutralBoth => "neutral_both",
});

/// Recommended medium tags. Other values are accepted with a warning.
pub const KNOWN_MEDIA: &[&str] = &[
    "tweet",
    "formal_speech",
    "interview",
    "press_release",
    "debate",
    "rally",
    "statement",
    "unknown",
];

pub const CSV_HEADER: [&str; 11] = [
    "publisher_name",
    "article_name",
    "attr_id",
    "source_label",
    "honorific_text",
    "source_valence",
    "cue_valence",
    "attr_type",
    "stance_type",
    "medium",
    "is_direct_quote",
];

/// Optional trailing annotator-note column.
pub const NOTE_COLUMN: &str = "note";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledAttribution {
    pub key: AttributionKey,
    pub source_label: SourceLabel,
    pub honorific_text: Option<String>,
    pub source_valence: Valence,
    pub cue_valence: Valence,
    pub attr_type: AttrType,
    pub stance_type: StanceType,
    pub medium: String,
    pub is_direct_quote: bool,
    pub note: Option<String>,
}

impl LabeledAttribution {
    pub fn is_marked_ambiguous(&self) -> bool {
        self.note
            .as_deref()
            .is_some_and(|n| n.to_ascii_lowercase().contains("ambiguous"))
    }
}

#[derive(Error, Debug)]
pub enum LabelError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    HeaderMismatch { expected: String, found: String },
    #[error("row {row}, column {column}: invalid value {value:?}")]
    EnumParse {
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("row {row}: expected {expected} fields, found {found}")]
    FieldCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: duplicate key {key}")]
    DuplicateKey { row: usize, key: AttributionKey },
    #[error("label sets cover different keys ({only_a} only in first, {only_b} only in second)")]
    KeyMismatch { only_a: usize, only_b: usize },
    #[error("no rows to compare")]
    Empty,
}

/// The labeled-attributions dataset: rows plus a key index.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    rows: Vec<LabeledAttribution>,
    index: HashMap<AttributionKey, usize>,
    has_note_column: bool,
}

impl Dataset {
    pub fn from_rows(rows: Vec<LabeledAttribution>) -> Result<Self, LabelError> {
        let mut index = HashMap::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if index.insert(r.key.clone(), i).is_some() {
                return Err(LabelError::DuplicateKey {
                    row: i + 1,
                    key: r.key.clone(),
                });
            }
        }
        let has_note_column = rows.iter().any(|r| r.note.is_some());
        Ok(Dataset {
            rows,
            index,
            has_note_column,
        })
    }

    pub fn rows(&self) -> &[LabeledAttribution] {
        &self.rows
    }

    pub fn get(&self, key: &AttributionKey) -> Option<&LabeledAttribution> {
        self.index.get(key).map(|&i| &self.rows[i])
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has_note_column(&self) -> bool {
        self.has_note_column
    }
}

pub fn read_labels_csv(path: &Path) -> Result<Dataset, LabelError> {
    read_labels(std::fs::File::open(path)?)
}

pub fn read_labels<R: Read>(reader: R) -> Result<Dataset, LabelError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h?,
        None => {
            return Err(LabelError::HeaderMismatch {
                expected: CSV_HEADER.join(","),
                found: String::new(),
            })
        }
    };
    let found: Vec<&str> = header.iter().collect();
    let has_note = found.len() == CSV_HEADER.len() + 1 && found[CSV_HEADER.len()] == NOTE_COLUMN;
    if found[..found.len().min(CSV_HEADER.len())] != CSV_HEADER[..]
        || !(found.len() == CSV_HEADER.len() || has_note)
    {
        return Err(LabelError::HeaderMismatch {
            expected: CSV_HEADER.join(","),
            found: found.join(","),
        });
    }
    let width = found.len();

    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        let row = i + 1;
        if rec.len() != width {
            return Err(LabelError::FieldCount {
                row,
                expected: width,
                found: rec.len(),
            });
        }
        rows.push(parse_row(&rec, row, has_note)?);
    }
    let mut ds = Dataset::from_rows(rows)?;
    ds.has_note_column = has_note;
    Ok(ds)
}

fn parse_enum<T: FromStr>(value: &str, row: usize, column: &'static str) -> Result<T, LabelError> {
    value.parse().map_err(|_| LabelError::EnumParse {
        row,
        column,
        value: value.to_string(),
    })
}

fn parse_row(rec: &csv::StringRecord, row: usize, has_note: bool) -> Result<LabeledAttribution, LabelError> {
    let field = |i: usize| rec.get(i).unwrap_or_default();
    let nonempty = |i: usize, column: &'static str| -> Result<String, LabelError> {
        let v = field(i);
        if v.is_empty() {
            Err(LabelError::EnumParse {
                row,
                column,
                value: String::new(),
            })
        } else {
            Ok(v.to_string())
        }
    };
    let attr_id = field(2).parse().map_err(|_| LabelError::EnumParse {
        row,
        column: "attr_id",
        value: field(2).to_string(),
    })?;
    let is_direct_quote = match field(10) {
        "true" => true,
        "false" => false,
        other => {
            return Err(LabelError::EnumParse {
                row,
                column: "is_direct_quote",
                value: other.to_string(),
            })
        }
    };
    let optional = |s: &str| (!s.is_empty()).then(|| s.to_string());
    Ok(LabeledAttribution {
        key: AttributionKey {
            publisher_name: nonempty(0, "publisher_name")?,
            article_name: nonempty(1, "article_name")?,
            attr_id,
        },
        source_label: parse_enum(field(3), row, "source_label")?,
        honorific_text: optional(field(4)),
        source_valence: parse_enum(field(5), row, "source_valence")?,
        cue_valence: parse_enum(field(6), row, "cue_valence")?,
        attr_type: parse_enum(field(7), row, "attr_type")?,
        stance_type: parse_enum(field(8), row, "stance_type")?,
        medium: nonempty(9, "medium")?,
        is_direct_quote,
        note: if has_note { optional(field(11)) } else { None },
    })
}

/// Writes rows sorted by key. The note column is emitted only when the
/// dataset was read with one or carries notes.
pub fn write_labels<W: Write>(dataset: &Dataset, writer: W) -> Result<(), LabelError> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let with_note = dataset.has_note_column;
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    if with_note {
        header.push(NOTE_COLUMN);
    }
    wtr.write_record(&header)?;
    let mut rows: Vec<&LabeledAttribution> = dataset.rows.iter().collect();
    rows.sort_by(|a, b| a.key.cmp(&b.key));
    for r in rows {
        let attr_id = r.key.attr_id.to_string();
        let mut rec = vec![
            r.key.publisher_name.as_str(),
            r.key.article_name.as_str(),
            attr_id.as_str(),
            r.source_label.as_str(),
            r.honorific_text.as_deref().unwrap_or(""),
            r.source_valence.as_str(),
            r.cue_valence.as_str(),
            r.attr_type.as_str(),
            r.stance_type.as_str(),
            r.medium.as_str(),
            if r.is_direct_quote { "true" } else { "false" },
        ];
        if with_note {
            rec.push(r.note.as_deref().unwrap_or(""));
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_labels_csv(dataset: &Dataset, path: &Path) -> Result<(), LabelError> {
    let f = std::fs::File::create(path)?;
    write_labels(dataset, std::io::BufWriter::new(f))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    UnresolvableKey {
        key: AttributionKey,
    },
    HonorificNotInSource {
        key: AttributionKey,
        honorific: String,
        source_text: String,
    },
    UnknownMedium {
        key: AttributionKey,
        medium: String,
    },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::UnresolvableKey { key } => write!(f, "{key}: no such attribution in the corpus"),
            Finding::HonorificNotInSource { key, honorific, source_text } => {
                write!(f, "{key}: honorific {honorific:?} not found in source text {source_text:?}")
            }
            Finding::UnknownMedium { key, medium } => write!(f, "{key}: unrecognised medium {medium:?}"),
        }
    }
}

impl Finding {
    /// Unknown media are advisory; everything else is an error.
    pub fn is_error(&self) -> bool {
        !matches!(self, Finding::UnknownMedium { .. })
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn error_count(&self) -> usize {
        self.findings.iter().filter(|f| f.is_error()).count()
    }
}

pub fn validate_against_corpus(dataset: &Dataset, corpus: &Corpus) -> ValidationReport {
    let mut findings = Vec::new();
    for row in &dataset.rows {
        let Some((article, triple)) = corpus.resolve(&row.key) else {
            findings.push(Finding::UnresolvableKey {
                key: row.key.clone(),
            });
            continue;
        };
        if let Some(h) = &row.honorific_text {
            let source_text = article.role_text(triple, Role::Source);
            if !source_text.contains(h.as_str()) {
                findings.push(Finding::HonorificNotInSource {
                    key: row.key.clone(),
                    honorific: h.clone(),
                    source_text,
                });
            }
        }
        if !KNOWN_MEDIA.contains(&row.medium.as_str()) {
            findings.push(Finding::UnknownMedium {
                key: row.key.clone(),
                medium: row.medium.clone(),
            });
        }
    }
    ValidationReport { findings }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BreakdownRow {
    pub publisher: String,
    pub articles: usize,
    pub trump: usize,
    pub clinton: usize,
    pub other: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Breakdown {
    pub rows: Vec<BreakdownRow>,
    pub totals: BreakdownRow,
}

/// Per-publisher article and source counts, sorted by publisher name.
pub fn breakdown_table(dataset: &Dataset) -> Breakdown {
    let mut per: BTreeMap<&str, (BTreeSet<&str>, BreakdownRow)> = BTreeMap::new();
    for r in &dataset.rows {
        let (articles, row) = per.entry(r.key.publisher_name.as_str()).or_default();
        articles.insert(r.key.article_name.as_str());
        match r.source_label {
            SourceLabel::Trump => row.trump += 1,
            SourceLabel::Clinton => row.clinton += 1,
            _ => row.other += 1,
        }
    }
    let mut totals = BreakdownRow {
        publisher: "totals".into(),
        ..Default::default()
    };
    let rows = per
        .into_iter()
        .map(|(publisher, (articles, mut row))| {
            row.publisher = publisher.to_string();
            row.articles = articles.len();
            totals.articles += row.articles;
            totals.trump += row.trump;
            totals.clinton += row.clinton;
            totals.other += row.other;
            row
        })
        .collect();
    Breakdown { rows, totals }
}

/// Categorical column compared by [`inter_annotator_agreement`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelColumn {
    SourceLabel,
    HonorificText,
    SourceValence,
    CueValence,
    AttrType,
    StanceType,
    Medium,
    IsDirectQuote,
}

impl LabelColumn {
    pub fn value(self, r: &LabeledAttribution) -> String {
        match self {
            LabelColumn::SourceLabel => r.source_label.to_string(),
            LabelColumn::HonorificText => r.honorific_text.clone().unwrap_or_default(),
            LabelColumn::SourceValence => r.source_valence.to_string(),
            LabelColumn::CueValence => r.cue_valence.to_string(),
            LabelColumn::AttrType => r.attr_type.to_string(),
            LabelColumn::StanceType => r.stance_type.to_string(),
            LabelColumn::Medium => r.medium.clone(),
            LabelColumn::IsDirectQuote => r.is_direct_quote.to_string(),
        }
    }
}

impl FromStr for LabelColumn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "source_label" => LabelColumn::SourceLabel,
            "honorific_text" => LabelColumn::HonorificText,
            "source_valence" => LabelColumn::SourceValence,
            "cue_valence" => LabelColumn::CueValence,
            "attr_type" => LabelColumn::AttrType,
            "stance_type" => LabelColumn::StanceType,
            "medium" => LabelColumn::Medium,
            "is_direct_quote" => LabelColumn::IsDirectQuote,
            _ => return Err(format!("unknown label column {s:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Agreement {
    pub percent_agreement: f64,
    pub kappa: f64,
}

/// Percent agreement and Cohen's kappa between two annotators on one column.
pub fn inter_annotator_agreement(
    labels_a: &Dataset,
    labels_b: &Dataset,
    column: LabelColumn,
) -> Result<Agreement, LabelError> {
    let only_a = labels_a
        .rows
        .iter()
        .filter(|r| labels_b.get(&r.key).is_none())
        .count();
    let only_b = labels_b
        .rows
        .iter()
        .filter(|r| labels_a.get(&r.key).is_none())
        .count();
    if only_a > 0 || only_b > 0 {
        return Err(LabelError::KeyMismatch { only_a, only_b });
    }
    let n = labels_a.len();
    if n == 0 {
        return Err(LabelError::Empty);
    }
    let mut agree = 0usize;
    let mut marg_a: BTreeMap<String, usize> = BTreeMap::new();
    let mut marg_b: BTreeMap<String, usize> = BTreeMap::new();
    for ra in &labels_a.rows {
        let rb = labels_b.get(&ra.key).expect("key sets checked");
        let (va, vb) = (column.value(ra), column.value(rb));
        if va == vb {
            agree += 1;
        }
        *marg_a.entry(va).or_default() += 1;
        *marg_b.entry(vb).or_default() += 1;
    }
    let nf = n as f64;
    let p_o = agree as f64 / nf;
    let p_e: f64 = marg_a
        .iter()
        .map(|(label, &ca)| {
            let cb = marg_b.get(label).copied().unwrap_or(0);
            (ca as f64 / nf) * (cb as f64 / nf)
        })
        .sum();
    let kappa = if agree == n {
        1.0
    } else {
        ((p_o - p_e) / (1.0 - p_e)).clamp(-1.0, 1.0)
    };
    Ok(Agreement {
        percent_agreement: p_o,
        kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "publisher_name,article_name,attr_id,source_label,honorific_text,source_valence,cue_valence,attr_type,stance_type,medium,is_direct_quote\n";

    fn row(publisher: &str, article: &str, id: usize, source: SourceLabel) -> LabeledAttribution {
        LabeledAttribution {
            key: AttributionKey {
                publisher_name: publisher.into(),
                article_name: article.into(),
                attr_id: id,
            },
            source_label: source,
            honorific_text: None,
            source_valence: Valence::Neutral,
            cue_valence: Valence::Neutral,
            attr_type: AttrType::PersonalStance,
            stance_type: StanceType::NeutralBoth,
            medium: "unknown".into(),
            is_direct_quote: false,
            note: None,
        }
    }

    #[test]
    fn closed_sets_have_documented_sizes() {
        assert_eq!(AttrType::ALL.len(), 10);
        assert_eq!(StanceType::ALL.len(), 9);
        assert_eq!(SourceLabel::ALL.len(), 7);
        assert_eq!(Valence::ALL.len(), 3);
    }

    #[test]
    fn parses_stance() {
        let csv = format!("{HEADER}nyt,a1,0,trump,Mr.,neutral,positive,headline,favours_clinton,tweet,true\n");
        let ds = read_labels(csv.as_bytes()).unwrap();
        assert_eq!(ds.rows()[0].stance_type, StanceType::FavoursClinton);
        assert_eq!(ds.rows()[0].honorific_text.as_deref(), Some("Mr."));
        assert!(ds.rows()[0].is_direct_quote);
    }

    #[test]
    fn rejects_unknown_stance() {
        let csv = format!("{HEADER}nyt,a1,0,trump,,neutral,positive,headline,likes_clinton,tweet,true\n");
        match read_labels(csv.as_bytes()) {
            Err(LabelError::EnumParse { row, column, value }) => {
                assert_eq!((row, column, value.as_str()), (1, "stance_type", "likes_clinton"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty_dataset() {
        let ds = read_labels(HEADER.as_bytes()).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn header_mismatch_and_duplicates() {
        let bad = HEADER.replace("medium", "channel");
        assert!(matches!(
            read_labels(bad.as_bytes()),
            Err(LabelError::HeaderMismatch { .. })
        ));
        let line = "nyt,a1,0,trump,,neutral,positive,headline,favours_clinton,tweet,true\n";
        let dup = format!("{HEADER}{line}{line}");
        assert!(matches!(
            read_labels(dup.as_bytes()),
            Err(LabelError::DuplicateKey { row: 2, .. })
        ));
        let boolean = format!("{HEADER}nyt,a1,0,trump,,neutral,positive,headline,favours_clinton,tweet,yes\n");
        assert!(matches!(
            read_labels(boolean.as_bytes()),
            Err(LabelError::EnumParse { column: "is_direct_quote", .. })
        ));
    }

    #[test]
    fn note_column_is_optional() {
        let csv = format!(
            "{},note\nnyt,a1,0,other_person,,neutral,neutral,headline,neutral_both,tweet,false,ambiguous: campaign staffer\n",
            HEADER.trim_end()
        );
        let ds = read_labels(csv.as_bytes()).unwrap();
        assert!(ds.rows()[0].is_marked_ambiguous());
        let mut out = Vec::new();
        write_labels(&ds, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), csv);
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let csv = format!(
            "{HEADER}huffpost,b,0,clinton,Mrs.,positive,neutral,political_platform,favours_clinton,formal_speech,true\n\
             huffpost,b,1,organization,,neutral,negative,group_callout,against_trump,statement,false\n\
             nyt,a,10,trump,\"The Right Honorable, Sir\",negative,neutral,trump_callout,against_other,tweet,false\n"
        );
        let ds = read_labels(csv.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_labels(&ds, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), csv);
    }

    #[test]
    fn breakdown_counts() {
        let ds = Dataset::from_rows(vec![
            row("politico", "a", 0, SourceLabel::Trump),
            row("politico", "a", 1, SourceLabel::Clinton),
            row("politico", "b", 0, SourceLabel::Sanders),
            row("nyt", "c", 0, SourceLabel::Organization),
        ])
        .unwrap();
        let b = breakdown_table(&ds);
        assert_eq!(b.rows.len(), 2);
        assert_eq!(b.rows[0].publisher, "nyt");
        assert_eq!(
            (b.rows[1].articles, b.rows[1].trump, b.rows[1].clinton, b.rows[1].other),
            (2, 1, 1, 1)
        );
        assert_eq!((b.totals.articles, b.totals.other), (3, 2));
        let empty = breakdown_table(&Dataset::default());
        assert!(empty.rows.is_empty());
        assert_eq!(
            (empty.totals.articles, empty.totals.trump, empty.totals.clinton, empty.totals.other),
            (0, 0, 0, 0)
        );
    }

    #[test]
    fn agreement_identical_and_fixed_annotator() {
        let a: Vec<_> = (0..99)
            .map(|i| {
                let mut r = row("p", "a", i, SourceLabel::Trump);
                r.stance_type = [StanceType::FavoursTrump, StanceType::AgainstTrump, StanceType::NeutralBoth][i % 3];
                r
            })
            .collect();
        let da = Dataset::from_rows(a.clone()).unwrap();
        let same = inter_annotator_agreement(&da, &da, LabelColumn::StanceType).unwrap();
        assert_eq!((same.percent_agreement, same.kappa), (1.0, 1.0));

        let b: Vec<_> = a
            .iter()
            .map(|r| LabeledAttribution {
                stance_type: StanceType::FavoursTrump,
                ..r.clone()
            })
            .collect();
        let db = Dataset::from_rows(b).unwrap();
        let ag = inter_annotator_agreement(&da, &db, LabelColumn::StanceType).unwrap();
        // p_o = 33/99, p_e = (1/3)(1) + 0 + 0 = 1/3
        assert!((ag.percent_agreement - 1.0 / 3.0).abs() < 1e-12);
        assert!(ag.kappa.abs() < 1e-12);
    }

    #[test]
    fn agreement_key_mismatch() {
        let da = Dataset::from_rows(vec![row("p", "a", 0, SourceLabel::Trump)]).unwrap();
        let db = Dataset::from_rows(vec![row("p", "a", 1, SourceLabel::Trump)]).unwrap();
        assert!(matches!(
            inter_annotator_agreement(&da, &db, LabelColumn::SourceLabel),
            Err(LabelError::KeyMismatch { only_a: 1, only_b: 1 })
        ));
    }

    proptest! {
        #[test]
        fn breakdown_partitions_dataset(spec in prop::collection::vec((0usize..4, 0usize..5, 0usize..7), 0..80)) {
            let publishers = ["breitbart", "huffpost", "nyt", "politico"];
            let mut seen = BTreeSet::new();
            let rows: Vec<_> = spec
                .into_iter()
                .enumerate()
                .filter_map(|(i, (p, a, s))| {
                    seen.insert((p, a, i)).then(|| row(publishers[p], &format!("a{a}"), i, SourceLabel::ALL[s]))
                })
                .collect();
            let n = rows.len();
            let b = breakdown_table(&Dataset::from_rows(rows).unwrap());
            let sum: usize = b.rows.iter().map(|r| r.trump + r.clinton + r.other).sum();
            prop_assert_eq!(sum, n);
            prop_assert_eq!(b.totals.trump + b.totals.clinton + b.totals.other, n);
        }

        #[test]
        fn kappa_in_range(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..60)) {
            let mk = |idx: &dyn Fn(&(usize, usize)) -> usize| {
                Dataset::from_rows(pairs.iter().enumerate().map(|(i, p)| {
                    let mut r = row("p", "a", i, SourceLabel::Trump);
                    r.source_valence = Valence::ALL[idx(p)];
                    r
                }).collect()).unwrap()
            };
            let da = mk(&|p| p.0);
            let db = mk(&|p| p.1);
            let ag = inter_annotator_agreement(&da, &db, LabelColumn::SourceValence).unwrap();
            prop_assert!((-1.0..=1.0).contains(&ag.kappa));
            prop_assert!((0.0..=1.0).contains(&ag.percent_agreement));
            let identical = pairs.iter().all(|p| p.0 == p.1);
            prop_assert_eq!(ag.kappa == 1.0, identical);
        }
    }
}
