//! The full battery: one test per (contrast, feature) plus configured
//! feature-interaction tests per contrast.

use serde::{Deserialize, Serialize};

use super::chisq::{chi_square_test, ChiSquareMode};
use super::fisher::{fisher_exact, FisherConfig};
use super::glm::{interaction_test, CrossTable, Design, Term};
use super::sampling::{sample_populations, PopulationSpec};
use super::selection::{test_selection, Recommendation};
use super::table::{build_table, ContingencyTable, Feature};
use super::{Result, StatsError, TestResult, ALPHA};
use crate::labels::{Dataset, LabeledAttribution};

/// `test_type` value of entries that could not be tested.
pub const SKIPPED: &str = "skipped";

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub contrasts: Vec<(String, String)>,
    pub features: Vec<Feature>,
    pub interactions: Vec<(Feature, Feature)>,
    pub seed: u64,
    pub max_tables: u64,
    pub n_sim: u64,
}

impl SuiteConfig {
    pub fn new(contrasts: Vec<(String, String)>, features: Vec<Feature>, interactions: Vec<(Feature, Feature)>, seed: u64) -> Self {
        let d = FisherConfig::default();
        SuiteConfig { contrasts, features, interactions, seed, max_tables: d.max_tables, n_sim: d.n_sim }
    }
}

/// Parse `F1xF2`; feature names may themselves contain `x`.
pub fn parse_interaction(s: &str) -> Result<(Feature, Feature)> {
    for (i, _) in s.match_indices('x') {
        if let (Ok(a), Ok(b)) = (s[..i].parse::<Feature>(), s[i + 1..].parse::<Feature>()) {
            if a != b {
                return Ok((a, b));
            }
        }
    }
    Err(StatsError::UnknownFeature(s.to_string()))
}

/// Factor name used for an interaction, e.g. `stance-cue-val_interaction`.
pub fn interaction_factor(a: Feature, b: Feature) -> String {
    format!("{}-{}_interaction", a.short_name(), b.short_name())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub target_population_label: String,
    pub contrast_population_label: String,
    pub test_type: String,
    pub test_factor: String,
    pub statistic: Option<f64>,
    pub df: Option<u32>,
    pub p_value: Option<f64>,
    pub significant_at_0_05: bool,
    pub method_note: String,
    pub seed: Option<u64>,
    /// Table behind a two-population feature test, kept for plotting.
    #[serde(skip)]
    pub table: Option<ContingencyTable>,
}

impl SuiteEntry {
    pub fn is_skipped(&self) -> bool {
        self.test_type == SKIPPED
    }

    fn tested(a: &str, b: &str, factor: String, r: TestResult, table: Option<ContingencyTable>) -> Self {
        SuiteEntry {
            target_population_label: a.to_string(),
            contrast_population_label: b.to_string(),
            test_type: r.test.as_str().to_string(),
            test_factor: factor,
            statistic: r.statistic,
            df: r.df,
            p_value: Some(r.p_value),
            significant_at_0_05: r.p_value < ALPHA,
            method_note: r.method_note,
            seed: r.seed,
            table,
        }
    }

    fn skipped(a: &str, b: &str, factor: String, reason: String) -> Self {
        SuiteEntry {
            target_population_label: a.to_string(),
            contrast_population_label: b.to_string(),
            test_type: SKIPPED.to_string(),
            test_factor: factor,
            statistic: None,
            df: None,
            p_value: None,
            significant_at_0_05: false,
            method_note: reason,
            seed: None,
            table: None,
        }
    }
}

fn stream_id(contrast: usize, slot: usize) -> u64 {
    ((contrast as u64) << 32) | slot as u64
}

/// Run every configured test. Only malformed population names are fatal;
/// empty populations and degenerate tables become skipped entries.
pub fn run_analysis_suite(dataset: &Dataset, config: &SuiteConfig) -> Result<Vec<SuiteEntry>> {
    let rows = dataset.rows();
    let mut out = Vec::new();
    for (ci, (na, nb)) in config.contrasts.iter().enumerate() {
        let pa = PopulationSpec::parse(na)?;
        let pb = PopulationSpec::parse(nb)?;
        match sample_populations(rows, &pa, &pb, config.seed, stream_id(ci, 0)) {
            Err(e) => {
                for f in &config.features {
                    out.push(SuiteEntry::skipped(na, nb, f.as_str().to_string(), e.to_string()));
                }
            }
            Ok((sa, sb)) => {
                for (fi, &f) in config.features.iter().enumerate() {
                    let fisher = FisherConfig {
                        max_tables: config.max_tables,
                        n_sim: config.n_sim,
                        seed: config.seed,
                        stream: stream_id(ci, fi + 1),
                    };
                    out.push(feature_test(na, nb, &sa, &sb, f, &fisher, config.seed));
                }
            }
        }
        for &(f1, f2) in &config.interactions {
            out.push(interaction_entry(rows, &pa, &pb, f1, f2));
        }
    }
    Ok(out)
}

fn feature_test(
    na: &str,
    nb: &str,
    sa: &[&LabeledAttribution],
    sb: &[&LabeledAttribution],
    f: Feature,
    fisher: &FisherConfig,
    seed: u64,
) -> SuiteEntry {
    let factor = f.as_str().to_string();
    let table = match build_table([na, nb], sa, sb, f) {
        Ok(t) => t,
        Err(e) => return SuiteEntry::skipped(na, nb, factor, e.to_string()),
    };
    let sel = test_selection(&table);
    let result = match sel.recommendation {
        Recommendation::Fisher => Ok(fisher_exact(&table, fisher)),
        Recommendation::ChiSquare => chi_square_test(&table, ChiSquareMode::Standard),
    };
    match result {
        Ok(mut r) => {
            r.method_note = format!("{}; {}; sampled {} per population", sel.note, r.method_note, sa.len());
            if !table.dropped_cols.is_empty() {
                r.method_note.push_str(&format!("; dropped empty labels: {}", table.dropped_cols.join(",")));
            }
            // the samples themselves depend on the seed
            r.seed = Some(seed);
            SuiteEntry::tested(na, nb, factor, r, Some(table))
        }
        Err(e) => SuiteEntry::skipped(na, nb, factor, e.to_string()),
    }
}

/// Population × F1 × F2 counts over the unsampled populations.
pub fn interaction_table(
    rows: &[LabeledAttribution],
    pa: &PopulationSpec,
    pb: &PopulationSpec,
    f1: Feature,
    f2: Feature,
) -> CrossTable {
    let ra = pa.select(rows);
    let rb = pb.select(rows);
    let both = || ra.iter().chain(&rb).copied();
    let l1 = f1.levels(both());
    let l2 = f2.levels(both());
    let mut counts = vec![0.0; 2 * l1.len() * l2.len()];
    for (p, pop) in [&ra, &rb].into_iter().enumerate() {
        for r in pop {
            let i = l1.iter().position(|l| *l == f1.value(r)).unwrap();
            let j = l2.iter().position(|l| *l == f2.value(r)).unwrap();
            counts[(p * l1.len() + i) * l2.len() + j] += 1.0;
        }
    }
    let factors = vec![
        ("population".to_string(), vec![pa.name.clone(), pb.name.clone()]),
        (f1.as_str().to_string(), l1),
        (f2.as_str().to_string(), l2),
    ];
    CrossTable::new(factors, counts)
}

fn interaction_entry(
    rows: &[LabeledAttribution],
    pa: &PopulationSpec,
    pb: &PopulationSpec,
    f1: Feature,
    f2: Feature,
) -> SuiteEntry {
    let factor = interaction_factor(f1, f2);
    let (na, nb) = (pa.name.as_str(), pb.name.as_str());
    let table = interaction_table(rows, pa, pb, f1, f2).drop_empty_levels();
    if let Some((name, levels)) = table.factors.iter().find(|(_, l)| l.len() < 2) {
        let reason = if levels.is_empty() {
            "both populations are empty".to_string()
        } else {
            format!("factor {name} has a single non-empty level")
        };
        return SuiteEntry::skipped(na, nb, factor, reason);
    }
    let mains = [Term::Intercept, Term::Main(0), Term::Main(1), Term::Main(2)];
    let mut full_terms = mains.to_vec();
    full_terms.push(Term::Interaction(vec![1, 2]));
    let full = Design::from_terms(&table, &full_terms);
    let reduced = Design::from_terms(&table, &mains);
    match interaction_test(&table.counts, &full, &reduced) {
        Ok(mut r) => {
            r.method_note.push_str(&format!(
                "; full populations ({} cells), main effects + {}:{} vs main effects",
                table.n_cells(),
                f1,
                f2
            ));
            SuiteEntry::tested(na, nb, factor, r, None)
        }
        Err(e) => SuiteEntry::skipped(na, nb, factor, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interaction_names() {
        assert_eq!(
            parse_interaction("stance_typexcue_valence").unwrap(),
            (Feature::StanceType, Feature::CueValence)
        );
        assert_eq!(
            parse_interaction("honorific_textxattr_type").unwrap(),
            (Feature::HonorificText, Feature::AttrType)
        );
        assert!(parse_interaction("stance_type").is_err());
        assert!(parse_interaction("stance_typexstance_type").is_err());
        assert_eq!(interaction_factor(Feature::StanceType, Feature::CueValence), "stance-cue-val_interaction");
        assert_eq!(interaction_factor(Feature::StanceType, Feature::AttrType), "stance-attr-type_interaction");
    }
}
