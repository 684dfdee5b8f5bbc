//! Pearson residuals (O − E)/√E.

use super::table::ContingencyTable;
use super::{Result, StatsError};

/// Residuals of a 2×L table against its independence expectation.
pub fn pearson_residuals(table: &ContingencyTable) -> Result<[Vec<f64>; 2]> {
    let expected = table.expected();
    let mut out = [Vec::new(), Vec::new()];
    for i in 0..2 {
        for (j, &e) in expected[i].iter().enumerate() {
            if e <= 0.0 {
                return Err(StatsError::ZeroExpected { row: i, col: j });
            }
            out[i].push((table.counts[i][j] as f64 - e) / e.sqrt());
        }
    }
    Ok(out)
}

/// Residuals of observed cells against fitted counts from a model.
pub fn pearson_residuals_from_fit(observed: &[f64], fitted: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(observed.len(), fitted.len());
    observed
        .iter()
        .zip(fitted)
        .enumerate()
        .map(|(k, (&o, &e))| {
            if e <= 0.0 {
                Err(StatsError::ZeroExpected { row: k, col: 0 })
            } else {
                Ok((o - e) / e.sqrt())
            }
        })
        .collect()
}
