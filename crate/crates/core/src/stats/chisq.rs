//! Pearson χ² test of independence on 2×L tables.

use super::special::chi2_sf;
use super::table::ContingencyTable;
use super::{Result, StatsError, TestKind, TestResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChiSquareMode {
    /// Yates-corrected for 2×2 tables, plain Pearson otherwise.
    #[default]
    Standard,
    /// Plain Pearson regardless of shape.
    Plain,
}

pub fn chi_square_test(table: &ContingencyTable, mode: ChiSquareMode) -> Result<TestResult> {
    let expected = table.expected();
    for (i, row) in expected.iter().enumerate() {
        if let Some(j) = row.iter().position(|&e| e <= 0.0) {
            return Err(StatsError::ZeroExpected { row: i, col: j });
        }
    }
    let l = table.n_cols();
    let yates = mode == ChiSquareMode::Standard && l == 2;
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..l {
            let o = table.counts[i][j] as f64;
            let e = expected[i][j];
            let d = if yates { ((o - e).abs() - 0.5).max(0.0) } else { o - e };
            stat += d * d / e;
        }
    }
    let df = (l - 1) as u32;
    let (test, method_note) = if yates {
        (TestKind::ChiSqYates, "pearson chi-square with Yates continuity correction (2x2)".to_string())
    } else if l == 2 {
        (TestKind::ChiSqPlain, "pearson chi-square without continuity correction".to_string())
    } else {
        (
            TestKind::ChiSqPlain,
            format!("pearson chi-square, no continuity correction (Yates undefined for 2x{l})"),
        )
    };
    Ok(TestResult {
        test,
        statistic: Some(stat),
        df: Some(df),
        p_value: chi2_sf(stat, df).clamp(0.0, 1.0),
        method_note,
        seed: None,
    })
}
