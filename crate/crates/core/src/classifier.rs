//! Rule-based attribution source classification over {trump, clinton, other}.
//!
//! The pipeline for one attribution:
//!
//! 1. resolve the source span to the representative mention of the best
//!    overlapping coreference chain, falling back to the raw source text;
//! 2. keep only the first five tokens (words and punctuation marks);
//! 3. any exclusion pattern match labels the source `other`;
//! 4. otherwise the first matching candidate pattern decides;
//! 5. otherwise `other`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ArticleKey, AttributionKey, ConsolidatedArticle, Corpus, Role, SpanTriple};
use crate::labels::{Dataset, SourceLabel};

/// Number of tokens the matchers ever look at.
pub const MATCH_WINDOW_TOKENS: usize = 5;

pub const DEFAULT_RULES: &str = include_str!("../rules/default.rules");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateLabel {
    Trump,
    Clinton,
    Other,
}

impl CandidateLabel {
    pub const ALL: [CandidateLabel; 3] = [
        CandidateLabel::Trump,
        CandidateLabel::Clinton,
        CandidateLabel::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CandidateLabel::Trump => "trump",
            CandidateLabel::Clinton => "clinton",
            CandidateLabel::Other => "other",
        }
    }

    /// Collapses an annotator source label onto the classifier's label set.
    pub fn from_gold(label: SourceLabel) -> Self {
        match label {
            SourceLabel::Trump => CandidateLabel::Trump,
            SourceLabel::Clinton => CandidateLabel::Clinton,
            _ => CandidateLabel::Other,
        }
    }
}

impl fmt::Display for CandidateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CandidateLabel {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trump" => Ok(CandidateLabel::Trump),
            "clinton" => Ok(CandidateLabel::Clinton),
            "other" => Ok(CandidateLabel::Other),
            _ => Err(ClassifierError::UnknownTarget(s.to_string())),
        }
    }
}

#[derive(Error, Debug)]
pub enum ClassifierError {
    #[error("rules line {line}: {message}")]
    RuleSyntax { line: usize, message: String },
    #[error("rules line {line}: bad pattern: {source}")]
    Pattern {
        line: usize,
        #[source]
        source: regex::Error,
    },
    #[error("rule set has no {0} patterns")]
    EmptyRuleClass(&'static str),
    #[error("reading rules: {0}")]
    Io(#[from] std::io::Error),
    #[error("key {0} does not resolve in the corpus")]
    UnresolvedKey(AttributionKey),
    #[error("unsupported target {0:?}")]
    UnknownTarget(String),
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub pattern: Regex,
    pub note: String,
}

/// Exclusion and candidate patterns. Exclusions always run first; candidate
/// patterns keep their file order across both candidates.
#[derive(Debug, Clone)]
pub struct MatchRuleSet {
    exclusions: Vec<Rule>,
    candidates: Vec<(CandidateLabel, Rule)>,
}

impl MatchRuleSet {
    pub fn parse(text: &str) -> Result<Self, ClassifierError> {
        let mut exclusions = Vec::new();
        let mut candidates = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(ClassifierError::RuleSyntax {
                    line: line_no,
                    message: format!("expected class<TAB>pattern<TAB>note, got {} fields", fields.len()),
                });
            }
            let pattern = Regex::new(fields[1]).map_err(|source| ClassifierError::Pattern {
                line: line_no,
                source,
            })?;
            let note = fields.get(2).map_or(fields[1], |n| n).to_string();
            let rule = Rule { pattern, note };
            match fields[0] {
                "exclude" => exclusions.push(rule),
                "trump" => candidates.push((CandidateLabel::Trump, rule)),
                "clinton" => candidates.push((CandidateLabel::Clinton, rule)),
                other => {
                    return Err(ClassifierError::RuleSyntax {
                        line: line_no,
                        message: format!("unknown rule class {other:?}"),
                    })
                }
            }
        }
        let set = MatchRuleSet {
            exclusions,
            candidates,
        };
        if set.exclusions.is_empty() {
            return Err(ClassifierError::EmptyRuleClass("exclude"));
        }
        if set.candidate_patterns(CandidateLabel::Trump).next().is_none() {
            return Err(ClassifierError::EmptyRuleClass("trump"));
        }
        if set.candidate_patterns(CandidateLabel::Clinton).next().is_none() {
            return Err(ClassifierError::EmptyRuleClass("clinton"));
        }
        Ok(set)
    }

    pub fn from_file(path: &Path) -> Result<Self, ClassifierError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn exclusion_patterns(&self) -> &[Rule] {
        &self.exclusions
    }

    pub fn candidate_patterns(&self, label: CandidateLabel) -> impl Iterator<Item = &Rule> {
        self.candidates
            .iter()
            .filter(move |(l, _)| *l == label)
            .map(|(_, r)| r)
    }

    /// Applies exclusions then candidates to already-truncated text.
    pub fn match_text(&self, text: &str) -> (CandidateLabel, Option<&str>) {
        if let Some(r) = self.exclusions.iter().find(|r| r.pattern.is_match(text)) {
            return (CandidateLabel::Other, Some(&r.note));
        }
        match self.candidates.iter().find(|(_, r)| r.pattern.is_match(text)) {
            Some((label, r)) => (*label, Some(&r.note)),
            None => (CandidateLabel::Other, None),
        }
    }
}

impl Default for MatchRuleSet {
    fn default() -> Self {
        MatchRuleSet::parse(DEFAULT_RULES).expect("bundled rules are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationTrace {
    pub key: AttributionKey,
    pub used_representative_mention: bool,
    pub matched_text: String,
    pub fired_rule: Option<String>,
    pub label: CandidateLabel,
}

/// Byte spans of the tokens in `text`: runs of alphanumerics (with inner
/// apostrophes and hyphens) and single punctuation marks.
pub fn match_tokens(text: &str) -> Vec<(usize, usize)> {
    let is_word = |c: char| c.is_alphanumeric() || matches!(c, '\'' | '\u{2019}' | '-');
    let mut out = Vec::new();
    let mut word_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if is_word(c) {
            word_start.get_or_insert(i);
            continue;
        }
        if let Some(s) = word_start.take() {
            out.push((s, i));
        }
        if !c.is_whitespace() {
            out.push((i, i + c.len_utf8()));
        }
    }
    if let Some(s) = word_start {
        out.push((s, text.len()));
    }
    out
}

/// First `n` tokens of `text` (see [`match_tokens`]) with whitespace runs
/// collapsed to single spaces.
pub fn truncate_tokens(text: &str, n: usize) -> String {
    let toks = match_tokens(text);
    if n == 0 || toks.is_empty() {
        return String::new();
    }
    let end = toks[n.min(toks.len()) - 1].1;
    text[..end].split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Surface text of the representative mention of the chain whose mention
/// overlaps the source tokens most. Ties go to the lower chain id.
pub fn representative_source_text(
    article: &ConsolidatedArticle,
    attribution: &SpanTriple,
) -> Option<String> {
    let source = article.role_tokens(attribution, Role::Source);
    if source.is_empty() {
        return None;
    }
    let mut best: Option<(usize, i64, usize)> = None;
    for (ci, chain) in article.coref_chains.iter().enumerate() {
        for m in &chain.mentions {
            let overlap = source.iter().filter(|&&t| m.tokens().contains(&t)).count();
            if overlap == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((o, id, _)) => overlap > o || (overlap == o && chain.chain_id < id),
            };
            if better {
                best = Some((overlap, chain.chain_id, ci));
            }
        }
    }
    best.map(|(_, _, ci)| {
        let chain = &article.coref_chains[ci];
        article.mention_text(chain.representative()).to_string()
    })
}

pub fn classify_source(
    article: &ConsolidatedArticle,
    attribution: &SpanTriple,
    rules: &MatchRuleSet,
) -> ClassificationTrace {
    let representative = representative_source_text(article, attribution);
    let used_representative_mention = representative.is_some();
    let text = representative.unwrap_or_else(|| article.role_text(attribution, Role::Source));
    let matched_text = truncate_tokens(&text, MATCH_WINDOW_TOKENS);
    let (label, fired) = rules.match_text(&matched_text);
    ClassificationTrace {
        key: AttributionKey::new(&article.key, attribution.attr_id),
        used_representative_mention,
        fired_rule: fired.map(str::to_string),
        matched_text,
        label,
    }
}

pub fn classify_article(article: &ConsolidatedArticle, rules: &MatchRuleSet) -> Vec<ClassificationTrace> {
    article
        .attributions
        .iter()
        .map(|a| classify_source(article, a, rules))
        .collect()
}

/// Traces for every attribution in the corpus, in key order.
pub fn classify_corpus(corpus: &Corpus, rules: &MatchRuleSet) -> Vec<ClassificationTrace> {
    corpus
        .articles
        .values()
        .flat_map(|a| classify_article(a, rules))
        .collect()
}

/// Traces for every dataset row, in dataset order.
pub fn classify_dataset(
    dataset: &Dataset,
    corpus: &Corpus,
    rules: &MatchRuleSet,
) -> Result<Vec<ClassificationTrace>, ClassifierError> {
    dataset
        .rows()
        .iter()
        .map(|row| {
            let (article, triple) = corpus
                .resolve(&row.key)
                .ok_or_else(|| ClassifierError::UnresolvedKey(row.key.clone()))?;
            Ok(classify_source(article, triple, rules))
        })
        .collect()
}

/// One-vs-rest confusion counts for one candidate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct BinaryConfusion {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
    pub precision: f64,
    pub recall: f64,
}

impl BinaryConfusion {
    fn finish(mut self) -> Self {
        let predicted = self.true_positive + self.false_positive;
        let actual = self.true_positive + self.false_negative;
        // no positive predictions (or no positives) counts as perfect
        self.precision = if predicted == 0 {
            1.0
        } else {
            self.true_positive as f64 / predicted as f64
        };
        self.recall = if actual == 0 {
            1.0
        } else {
            self.true_positive as f64 / actual as f64
        };
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorBin {
    CorefFailure,
    AmbiguousSource,
    TrickyNonTarget,
    InadequateCoref,
    Logistical,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ErrorBins {
    pub coref_failure: usize,
    pub ambiguous_source: usize,
    pub tricky_non_target: usize,
    pub inadequate_coref: usize,
    pub logistical: usize,
}

impl ErrorBins {
    pub fn add(&mut self, bin: ErrorBin) {
        match bin {
            ErrorBin::CorefFailure => self.coref_failure += 1,
            ErrorBin::AmbiguousSource => self.ambiguous_source += 1,
            ErrorBin::TrickyNonTarget => self.tricky_non_target += 1,
            ErrorBin::InadequateCoref => self.inadequate_coref += 1,
            ErrorBin::Logistical => self.logistical += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.coref_failure
            + self.ambiguous_source
            + self.tricky_non_target
            + self.inadequate_coref
            + self.logistical
    }
}

/// Sources that are neither candidate but often mention one by name.
fn is_non_target_actor(label: SourceLabel) -> bool {
    matches!(label, SourceLabel::Organization | SourceLabel::OtherPerson)
}

/// Bin for one misclassified row. Checked in order: annotator-flagged
/// ambiguity, non-target actor mistaken for a candidate, missing
/// representative mention, representative mention matching nothing, and
/// everything else.
pub fn error_bin(trace: &ClassificationTrace, gold: SourceLabel, ambiguous: bool) -> ErrorBin {
    if ambiguous {
        ErrorBin::AmbiguousSource
    } else if is_non_target_actor(gold) && trace.label != CandidateLabel::Other {
        ErrorBin::TrickyNonTarget
    } else if !trace.used_representative_mention {
        ErrorBin::CorefFailure
    } else if trace.fired_rule.is_none() {
        ErrorBin::InadequateCoref
    } else {
        ErrorBin::Logistical
    }
}

pub fn bin_errors(traces: &[ClassificationTrace], dataset: &Dataset) -> ErrorBins {
    let mut bins = ErrorBins::default();
    for t in traces {
        let Some(row) = dataset.get(&t.key) else {
            continue;
        };
        if CandidateLabel::from_gold(row.source_label) != t.label {
            bins.add(error_bin(t, row.source_label, row.is_marked_ambiguous()));
        }
    }
    bins
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    /// `confusion[gold][predicted]` over trump, clinton, other.
    pub confusion: [[usize; 3]; 3],
    pub per_candidate: BTreeMap<CandidateLabel, BinaryConfusion>,
    pub error_bins: ErrorBins,
}

fn label_index(l: CandidateLabel) -> usize {
    CandidateLabel::ALL.iter().position(|&x| x == l).unwrap()
}

/// Builds the report from traces aligned with dataset rows.
pub fn report_from_traces(traces: &[ClassificationTrace], dataset: &Dataset) -> EvalReport {
    let mut confusion = [[0usize; 3]; 3];
    for t in traces {
        if let Some(row) = dataset.get(&t.key) {
            let gold = CandidateLabel::from_gold(row.source_label);
            confusion[label_index(gold)][label_index(t.label)] += 1;
        }
    }
    let n: usize = confusion.iter().flatten().sum();
    let correct: usize = (0..3).map(|i| confusion[i][i]).sum();
    let accuracy = if n == 0 { 1.0 } else { correct as f64 / n as f64 };
    let per_candidate = [CandidateLabel::Trump, CandidateLabel::Clinton]
        .into_iter()
        .map(|c| {
            let k = label_index(c);
            let tp = confusion[k][k];
            let fp: usize = (0..3).filter(|&g| g != k).map(|g| confusion[g][k]).sum();
            let fnc: usize = (0..3).filter(|&p| p != k).map(|p| confusion[k][p]).sum();
            let bc = BinaryConfusion {
                true_positive: tp,
                false_positive: fp,
                false_negative: fnc,
                true_negative: n - tp - fp - fnc,
                ..Default::default()
            };
            (c, bc.finish())
        })
        .collect();
    EvalReport {
        n,
        accuracy,
        confusion,
        per_candidate,
        error_bins: bin_errors(traces, dataset),
    }
}

pub fn evaluate(
    dataset: &Dataset,
    corpus: &Corpus,
    rules: &MatchRuleSet,
) -> Result<EvalReport, ClassifierError> {
    let traces = classify_dataset(dataset, corpus, rules)?;
    Ok(report_from_traces(&traces, dataset))
}

/// Articles with at least `min_count` attributions classified as `target`,
/// by descending count then article key. `min_count` below 1 is read as 1.
pub fn find_high_yield_articles(
    corpus: &Corpus,
    rules: &MatchRuleSet,
    target: CandidateLabel,
    min_count: usize,
) -> Vec<(ArticleKey, usize)> {
    let min_count = min_count.max(1);
    let mut hits: Vec<(ArticleKey, usize)> = corpus
        .articles
        .values()
        .map(|a| {
            let count = a
                .attributions
                .iter()
                .filter(|t| classify_source(a, t, rules).label == target)
                .count();
            (a.key.clone(), count)
        })
        .filter(|(_, c)| *c >= min_count)
        .collect();
    hits.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ArticleBuilder;

    fn single(source: &str) -> (ConsolidatedArticle, SpanTriple) {
        let mut b = ArticleBuilder::new(ArticleKey::new("p", "a"));
        let s = b.append(source);
        b.append(" said ");
        let c = b.append("\"it\"");
        b.append(".");
        b.add_attribution(vec![s], vec![], vec![c]);
        let a = b.build().unwrap();
        let t = a.attributions[0].clone();
        (a, t)
    }

    fn label_of(source: &str) -> CandidateLabel {
        let (a, t) = single(source);
        classify_source(&a, &t, &MatchRuleSet::default()).label
    }

    #[test]
    fn default_rules_examples() {
        assert_eq!(label_of("Bill Clinton"), CandidateLabel::Other);
        assert_eq!(label_of("Donald Trump Jr."), CandidateLabel::Other);
        assert_eq!(label_of("The Clinton Campaign"), CandidateLabel::Clinton);
        assert_eq!(label_of("The Clinton Administration"), CandidateLabel::Other);
        assert_eq!(label_of("Trump"), CandidateLabel::Trump);
        assert_eq!(label_of("Donald J. Trump"), CandidateLabel::Trump);
        assert_eq!(label_of("the trump card"), CandidateLabel::Other);
    }

    #[test]
    fn long_mention_is_truncated_before_exclusions() {
        let (a, t) = single("Hillary Clinton, wife of former president Bill Clinton");
        let trace = classify_source(&a, &t, &MatchRuleSet::default());
        assert_eq!(trace.matched_text, "Hillary Clinton, wife of");
        assert_eq!(trace.label, CandidateLabel::Clinton);
        assert!(!trace.used_representative_mention);
        assert_eq!(trace.fired_rule.as_deref(), Some("clinton"));
    }

    #[test]
    fn pronoun_resolves_through_chain() {
        let mut b = ArticleBuilder::new(ArticleKey::new("time", "mexico"));
        let rep = b.append("Donald Trump");
        b.append(" visited Mexico.");
        b.end_sentence();
        b.append(" \"");
        let content = b.append("They are not our friend,");
        b.append("\" ");
        let he = b.append("he");
        let cue = b.append(" said");
        b.append(".");
        b.add_chain(rep, &[he]);
        b.add_attribution(vec![he], vec![(cue.0 + 1, cue.1)], vec![content]);
        let a = b.build().unwrap();
        assert_eq!(
            representative_source_text(&a, &a.attributions[0]).as_deref(),
            Some("Donald Trump")
        );
        let trace = classify_source(&a, &a.attributions[0], &MatchRuleSet::default());
        assert!(trace.used_representative_mention);
        assert_eq!(trace.label, CandidateLabel::Trump);
    }

    #[test]
    fn truncation_counts_punctuation() {
        assert_eq!(
            truncate_tokens("Hillary Clinton, wife of former president", 5),
            "Hillary Clinton, wife of"
        );
        assert_eq!(truncate_tokens("  Donald   Trump ", 5), "Donald Trump");
        assert_eq!(truncate_tokens("", 5), "");
        assert_eq!(truncate_tokens("a b c", 0), "");
        assert_eq!(match_tokens("Trump's pick: Mike Pence").len(), 5);
    }

    #[test]
    fn no_chain_means_no_representative() {
        let (a, t) = single("officials");
        assert_eq!(representative_source_text(&a, &t), None);
    }

    #[test]
    fn overlap_ties_and_maxima() {
        // source "Hillary Clinton aides" overlaps chain 0 on one token
        // ("aides") and chain 1 on two tokens ("Hillary Clinton").
        let mut b = ArticleBuilder::new(ArticleKey::new("p", "a"));
        let rep0 = b.append("the staff");
        b.append(" and ");
        let rep1 = b.append("Mrs. Clinton");
        b.append(" met. ");
        let src = b.append("Hillary Clinton aides");
        b.append(" said ");
        let c = b.append("no");
        b.append(".");
        b.add_chain(rep0, &[(src.1 - 5, src.1)]);
        b.add_chain(rep1, &[(src.0, src.0 + 15)]);
        b.add_attribution(vec![src], vec![], vec![c]);
        let a = b.build().unwrap();
        assert_eq!(
            representative_source_text(&a, &a.attributions[0]).as_deref(),
            Some("Mrs. Clinton")
        );

        // equal overlap on one token each: lower chain id wins
        let mut b = ArticleBuilder::new(ArticleKey::new("p", "b"));
        let rep0 = b.append("Donald Trump");
        b.append(" and ");
        let rep1 = b.append("Hillary Clinton");
        b.append(" debated. ");
        let src = b.append("both candidates");
        b.append(" said ");
        let c = b.append("no");
        b.append(".");
        b.add_chain(rep1, &[(src.0 + 5, src.1)]);
        b.add_chain(rep0, &[(src.0, src.0 + 4)]);
        b.add_attribution(vec![src], vec![], vec![c]);
        let a = b.build().unwrap();
        assert_eq!(
            representative_source_text(&a, &a.attributions[0]).as_deref(),
            Some("Hillary Clinton")
        );
    }

    #[test]
    fn rule_file_errors() {
        assert!(matches!(
            MatchRuleSet::parse("exclude\t\\bX\\b\nclinton\tC\n"),
            Err(ClassifierError::EmptyRuleClass("trump"))
        ));
        assert!(matches!(
            MatchRuleSet::parse("president\tX\tnote\n"),
            Err(ClassifierError::RuleSyntax { line: 1, .. })
        ));
        assert!(matches!(
            MatchRuleSet::parse("exclude\t(\tbad\n"),
            Err(ClassifierError::Pattern { line: 1, .. })
        ));
        let rules = MatchRuleSet::default();
        assert_eq!(rules.exclusion_patterns().len(), 6);
        assert_eq!(rules.candidate_patterns(CandidateLabel::Trump).count(), 3);
    }

    #[test]
    fn bins_follow_rule_order() {
        let trace = |used: bool, fired: Option<&str>, label| ClassificationTrace {
            key: AttributionKey::new(&ArticleKey::new("p", "a"), 0),
            used_representative_mention: used,
            matched_text: String::new(),
            fired_rule: fired.map(str::to_string),
            label,
        };
        use CandidateLabel::*;
        assert_eq!(error_bin(&trace(false, None, Other), SourceLabel::Trump, false), ErrorBin::CorefFailure);
        assert_eq!(error_bin(&trace(true, None, Other), SourceLabel::Trump, false), ErrorBin::InadequateCoref);
        assert_eq!(
            error_bin(&trace(false, Some("clinton"), Clinton), SourceLabel::OtherPerson, false),
            ErrorBin::TrickyNonTarget
        );
        assert_eq!(
            error_bin(&trace(true, Some("trump"), Trump), SourceLabel::OtherPerson, true),
            ErrorBin::AmbiguousSource
        );
        assert_eq!(
            error_bin(&trace(true, Some("bill_clinton"), Other), SourceLabel::Clinton, false),
            ErrorBin::Logistical
        );
    }
}
