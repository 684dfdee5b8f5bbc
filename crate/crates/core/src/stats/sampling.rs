//! Contrast populations and the equal-size sampling rule.
//!
//! Population names take three shapes: a source selector (`trump`,
//! `non_clinton`), a publisher (`breitbart`, `usa-today`), or a composite
//! `<selector>-<publisher>` such as `clinton-huffpost`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{Result, StatsError};
use crate::labels::{LabeledAttribution, SourceLabel};

/// Per-side cap for source-vs-source contrasts.
pub const SOURCE_SAMPLE_CAP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceSelector {
    Label(SourceLabel),
    NonTrump,
    NonClinton,
    NonTrumpOrClinton,
}

impl SourceSelector {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "non_trump" => Some(SourceSelector::NonTrump),
            "non_clinton" => Some(SourceSelector::NonClinton),
            "non_trump_or_clinton" => Some(SourceSelector::NonTrumpOrClinton),
            _ => s.parse::<SourceLabel>().ok().map(SourceSelector::Label),
        }
    }

    pub fn matches(self, label: SourceLabel) -> bool {
        match self {
            SourceSelector::Label(l) => l == label,
            SourceSelector::NonTrump => label != SourceLabel::Trump,
            SourceSelector::NonClinton => label != SourceLabel::Clinton,
            SourceSelector::NonTrumpOrClinton => {
                label != SourceLabel::Trump && label != SourceLabel::Clinton
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopulationSpec {
    pub name: String,
    pub source: Option<SourceSelector>,
    pub publisher: Option<String>,
}

impl PopulationSpec {
    pub fn parse(name: &str) -> Result<Self> {
        let name = name.trim();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(StatsError::BadPopulation(name.to_string()));
        }
        let spec = |source, publisher: Option<&str>| PopulationSpec {
            name: name.to_string(),
            source,
            publisher: publisher.map(str::to_string),
        };
        if let Some(sel) = SourceSelector::parse(name) {
            return Ok(spec(Some(sel), None));
        }
        if let Some((head, rest)) = name.split_once('-') {
            if let Some(sel) = SourceSelector::parse(head) {
                if rest.is_empty() {
                    return Err(StatsError::BadPopulation(name.to_string()));
                }
                return Ok(spec(Some(sel), Some(rest)));
            }
        }
        Ok(spec(None, Some(name)))
    }

    /// Publisher-involving contrasts use the 75% rule instead of the fixed cap.
    pub fn involves_publisher(&self) -> bool {
        self.publisher.is_some()
    }

    pub fn matches(&self, row: &LabeledAttribution) -> bool {
        self.source.is_none_or(|s| s.matches(row.source_label))
            && self.publisher.as_ref().is_none_or(|p| *p == row.key.publisher_name)
    }

    /// Matching rows in key order.
    pub fn select<'a>(&self, rows: &'a [LabeledAttribution]) -> Vec<&'a LabeledAttribution> {
        let mut out: Vec<_> = rows.iter().filter(|r| self.matches(r)).collect();
        out.sort_by(|a, b| a.key.cmp(&b.key));
        out
    }
}

impl fmt::Display for PopulationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Per-side sample size for a contrast between populations of these sizes.
pub fn sample_size(a: &PopulationSpec, b: &PopulationSpec, size_a: usize, size_b: usize) -> usize {
    let m = size_a.min(size_b);
    if a.involves_publisher() || b.involves_publisher() {
        m * 3 / 4
    } else {
        m.min(SOURCE_SAMPLE_CAP)
    }
}

/// Draw `k` of `n` indices without replacement (partial Fisher–Yates), sorted.
pub fn sample_indices<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// Equal-size random samples of two populations. Population A is drawn first,
/// then B, from one ChaCha20 stream.
pub fn sample_populations<'a>(
    rows: &'a [LabeledAttribution],
    a: &PopulationSpec,
    b: &PopulationSpec,
    seed: u64,
    stream: u64,
) -> Result<(Vec<&'a LabeledAttribution>, Vec<&'a LabeledAttribution>)> {
    let pa = a.select(rows);
    let pb = b.select(rows);
    if pa.is_empty() {
        return Err(StatsError::EmptyPopulation(a.name.clone()));
    }
    if pb.is_empty() {
        return Err(StatsError::EmptyPopulation(b.name.clone()));
    }
    let k = sample_size(a, b, pa.len(), pb.len());
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let sa = sample_indices(&mut rng, pa.len(), k).into_iter().map(|i| pa[i]).collect();
    let sb = sample_indices(&mut rng, pb.len(), k).into_iter().map(|i| pb[i]).collect();
    Ok((sa, sb))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_shapes() {
        let p = PopulationSpec::parse("trump").unwrap();
        assert_eq!(p.source, Some(SourceSelector::Label(SourceLabel::Trump)));
        assert!(!p.involves_publisher());

        let p = PopulationSpec::parse("clinton-usa-today").unwrap();
        assert_eq!(p.source, Some(SourceSelector::Label(SourceLabel::Clinton)));
        assert_eq!(p.publisher.as_deref(), Some("usa-today"));

        let p = PopulationSpec::parse("wash-post").unwrap();
        assert_eq!(p.source, None);
        assert_eq!(p.publisher.as_deref(), Some("wash-post"));

        let p = PopulationSpec::parse("non_trump_or_clinton").unwrap();
        assert_eq!(p.source, Some(SourceSelector::NonTrumpOrClinton));

        assert!(PopulationSpec::parse("").is_err());
        assert!(PopulationSpec::parse("trump-").is_err());
    }

    #[test]
    fn selectors() {
        assert!(SourceSelector::NonTrump.matches(SourceLabel::Clinton));
        assert!(!SourceSelector::NonTrumpOrClinton.matches(SourceLabel::Clinton));
        assert!(SourceSelector::NonTrumpOrClinton.matches(SourceLabel::Organization));
    }

    #[test]
    fn size_rule() {
        let b = PopulationSpec::parse("breitbart").unwrap();
        let h = PopulationSpec::parse("huffpost").unwrap();
        assert_eq!(sample_size(&b, &h, 50, 40), 30);
        let t = PopulationSpec::parse("trump").unwrap();
        let c = PopulationSpec::parse("clinton").unwrap();
        assert_eq!(sample_size(&t, &c, 121, 100), 100);
        assert_eq!(sample_size(&t, &c, 60, 80), 60);
        let tc = PopulationSpec::parse("trump-breitbart").unwrap();
        assert_eq!(sample_size(&tc, &c, 11, 100), 8);
    }

    #[test]
    fn index_sampling_is_a_sorted_subset() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let s = sample_indices(&mut rng, 50, 30);
        assert_eq!(s.len(), 30);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.iter().all(|&i| i < 50));
    }
}
