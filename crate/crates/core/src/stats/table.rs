//! Two-population contingency tables over one attribution feature.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Result, StatsError};
use crate::labels::{AttrType, LabeledAttribution, StanceType, Valence, KNOWN_MEDIA};

/// Column used when an attribution carries no honorific.
pub const HONORIFIC_ABSENT: &str = "absent";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    HonorificText,
    SourceValence,
    CueValence,
    AttrType,
    StanceType,
    Medium,
    IsDirectQuote,
}

impl Feature {
    pub const ALL: [Feature; 7] = [
        Feature::HonorificText,
        Feature::SourceValence,
        Feature::CueValence,
        Feature::AttrType,
        Feature::StanceType,
        Feature::Medium,
        Feature::IsDirectQuote,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::HonorificText => "honorific_text",
            Feature::SourceValence => "source_valence",
            Feature::CueValence => "cue_valence",
            Feature::AttrType => "attr_type",
            Feature::StanceType => "stance_type",
            Feature::Medium => "medium",
            Feature::IsDirectQuote => "is_direct_quote",
        }
    }

    /// Abbreviation used when naming interaction factors, e.g. `stance-cue-val_interaction`.
    pub fn short_name(self) -> &'static str {
        match self {
            Feature::HonorificText => "honorific",
            Feature::SourceValence => "source-val",
            Feature::CueValence => "cue-val",
            Feature::AttrType => "attr-type",
            Feature::StanceType => "stance",
            Feature::Medium => "medium",
            Feature::IsDirectQuote => "direct-quote",
        }
    }

    /// Column label for one attribution.
    pub fn value(self, row: &LabeledAttribution) -> String {
        match self {
            Feature::HonorificText => normalize_honorific(row.honorific_text.as_deref()),
            Feature::SourceValence => row.source_valence.as_str().to_string(),
            Feature::CueValence => row.cue_valence.as_str().to_string(),
            Feature::AttrType => row.attr_type.as_str().to_string(),
            Feature::StanceType => row.stance_type.as_str().to_string(),
            Feature::Medium => row.medium.clone(),
            Feature::IsDirectQuote => row.is_direct_quote.to_string(),
        }
    }

    /// Ordered candidate columns for the given rows: closed label sets in
    /// declaration order, open sets with their fixed members first and any
    /// other observed value after them in sorted order.
    pub fn levels<'a, I>(self, rows: I) -> Vec<String>
    where
        I: IntoIterator<Item = &'a LabeledAttribution>,
    {
        let fixed: Vec<String> = match self {
            Feature::HonorificText => vec![HONORIFIC_ABSENT.to_string()],
            Feature::SourceValence | Feature::CueValence => {
                Valence::ALL.iter().map(|v| v.as_str().to_string()).collect()
            }
            Feature::AttrType => AttrType::ALL.iter().map(|v| v.as_str().to_string()).collect(),
            Feature::StanceType => StanceType::ALL.iter().map(|v| v.as_str().to_string()).collect(),
            Feature::Medium => KNOWN_MEDIA.iter().map(|m| m.to_string()).collect(),
            Feature::IsDirectQuote => vec!["false".to_string(), "true".to_string()],
        };
        let extra: BTreeSet<String> = rows
            .into_iter()
            .map(|r| self.value(r))
            .filter(|v| !fixed.contains(v))
            .collect();
        fixed.into_iter().chain(extra).collect()
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Feature {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| StatsError::UnknownFeature(s.to_string()))
    }
}

/// Lowercased, whitespace-trimmed honorific, or `absent`.
pub fn normalize_honorific(h: Option<&str>) -> String {
    match h.map(str::trim) {
        Some(s) if !s.is_empty() => s.to_lowercase(),
        _ => HONORIFIC_ABSENT.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_names: [String; 2],
    pub col_names: Vec<String>,
    pub counts: [Vec<u64>; 2],
    pub dropped_cols: Vec<String>,
}

impl ContingencyTable {
    /// Build a table, dropping every column whose two cells are both zero.
    pub fn new(row_names: [String; 2], col_names: Vec<String>, counts: [Vec<u64>; 2]) -> Result<Self> {
        assert_eq!(col_names.len(), counts[0].len());
        assert_eq!(col_names.len(), counts[1].len());
        let mut kept_names = Vec::new();
        let mut kept = [Vec::new(), Vec::new()];
        let mut dropped_cols = Vec::new();
        for (j, name) in col_names.into_iter().enumerate() {
            if counts[0][j] == 0 && counts[1][j] == 0 {
                dropped_cols.push(name);
            } else {
                kept_names.push(name);
                kept[0].push(counts[0][j]);
                kept[1].push(counts[1][j]);
            }
        }
        if kept_names.len() < 2 {
            return Err(StatsError::DegenerateTable { retained: kept_names.len() });
        }
        Ok(ContingencyTable { row_names, col_names: kept_names, counts: kept, dropped_cols })
    }

    /// Unnamed table from raw rows, for tests and ad-hoc use.
    pub fn from_rows(a: &[u64], b: &[u64]) -> Result<Self> {
        let names = (0..a.len()).map(|j| format!("c{j}")).collect();
        Self::new(["a".into(), "b".into()], names, [a.to_vec(), b.to_vec()])
    }

    pub fn n_cols(&self) -> usize {
        self.col_names.len()
    }

    pub fn row_totals(&self) -> [u64; 2] {
        [self.counts[0].iter().sum(), self.counts[1].iter().sum()]
    }

    pub fn col_totals(&self) -> Vec<u64> {
        self.counts[0].iter().zip(&self.counts[1]).map(|(a, b)| a + b).collect()
    }

    pub fn total(&self) -> u64 {
        let [a, b] = self.row_totals();
        a + b
    }

    /// Expected counts under independence, row·col/n.
    pub fn expected(&self) -> [Vec<f64>; 2] {
        let rows = self.row_totals();
        let cols = self.col_totals();
        let n = self.total() as f64;
        let e = |i: usize| cols.iter().map(|&c| rows[i] as f64 * c as f64 / n).collect();
        [e(0), e(1)]
    }

    /// Same table with the two rows exchanged.
    pub fn swapped(&self) -> Self {
        ContingencyTable {
            row_names: [self.row_names[1].clone(), self.row_names[0].clone()],
            col_names: self.col_names.clone(),
            counts: [self.counts[1].clone(), self.counts[0].clone()],
            dropped_cols: self.dropped_cols.clone(),
        }
    }
}

/// Cross-tabulate two populations over one feature.
pub fn build_table(
    names: [&str; 2],
    rows_a: &[&LabeledAttribution],
    rows_b: &[&LabeledAttribution],
    feature: Feature,
) -> Result<ContingencyTable> {
    let levels = feature.levels(rows_a.iter().chain(rows_b).copied());
    let count = |rows: &[&LabeledAttribution]| {
        let mut c = vec![0u64; levels.len()];
        for r in rows {
            let v = feature.value(r);
            let j = levels.iter().position(|l| *l == v).expect("level list covers every value");
            c[j] += 1;
        }
        c
    };
    let counts = [count(rows_a), count(rows_b)];
    ContingencyTable::new([names[0].to_string(), names[1].to_string()], levels, counts)
}
