//! Choosing between the χ² approximation and Fisher's exact test.

use super::table::ContingencyTable;

/// Smallest expected count for which the χ² approximation is trusted.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recommendation {
    ChiSquare,
    Fisher,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub recommendation: Recommendation,
    pub min_expected: f64,
    pub note: String,
}

/// Cochran's rule: Fisher whenever any expected count falls below 5.
pub fn test_selection(table: &ContingencyTable) -> Selection {
    let min_expected = table
        .expected()
        .iter()
        .flatten()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_expected < MIN_EXPECTED {
        Selection {
            recommendation: Recommendation::Fisher,
            min_expected,
            note: format!("fisher selected: min expected count {min_expected:.4} < 5"),
        }
    } else {
        Selection {
            recommendation: Recommendation::ChiSquare,
            min_expected,
            note: format!("chi-square selected: min expected count {min_expected:.4} >= 5"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(a: &[u64], b: &[u64]) -> Selection {
        test_selection(&ContingencyTable::from_rows(a, b).unwrap())
    }

    #[test]
    fn cochran_rule() {
        let s = rec(&[2, 3], &[3, 2]);
        assert_eq!(s.recommendation, Recommendation::Fisher);
        assert!((s.min_expected - 2.5).abs() < 1e-12);
        assert_eq!(rec(&[50, 50], &[50, 50]).recommendation, Recommendation::ChiSquare);
        let s = rec(&[5, 100], &[100, 5]);
        assert_eq!(s.recommendation, Recommendation::ChiSquare);
        assert!((s.min_expected - 52.5).abs() < 1e-12);
        assert!(s.note.contains("chi-square"));
    }
}
