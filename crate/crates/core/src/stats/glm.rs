//! Poisson log-linear models on cross-classified counts, fitted by IRLS.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::special::chi2_sf;
use super::{Result, StatsError, TestKind, TestResult};

pub const MAX_ITERATIONS: usize = 100;
pub const DEVIANCE_TOL: f64 = 1e-10;
pub const BETA_REL_TOL: f64 = 1e-8;

/// Counts over the full cross-classification of several factors, stored
/// row-major with the last factor varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossTable {
    pub factors: Vec<(String, Vec<String>)>,
    pub counts: Vec<f64>,
}

impl CrossTable {
    pub fn new(factors: Vec<(String, Vec<String>)>, counts: Vec<f64>) -> Self {
        let cells: usize = factors.iter().map(|(_, l)| l.len()).product();
        assert_eq!(cells, counts.len(), "counts must cover every cell");
        CrossTable { factors, counts }
    }

    /// Two-way table from nested rows.
    pub fn two_way(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let factors = vec![
            ("row".to_string(), (0..r).map(|i| format!("r{i}")).collect()),
            ("col".to_string(), (0..c).map(|j| format!("c{j}")).collect()),
        ];
        CrossTable::new(factors, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn n_cells(&self) -> usize {
        self.counts.len()
    }

    /// Level index of every factor for cell `cell`.
    pub fn levels_of(&self, mut cell: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (k, (_, levels)) in self.factors.iter().enumerate().rev() {
            out[k] = cell % levels.len();
            cell /= levels.len();
        }
        out
    }

    /// Remove levels whose one-way marginal count is zero.
    pub fn drop_empty_levels(&self) -> CrossTable {
        let keep: Vec<Vec<bool>> = self
            .factors
            .iter()
            .enumerate()
            .map(|(k, (_, levels))| {
                let mut margin = vec![0.0; levels.len()];
                for (cell, &y) in self.counts.iter().enumerate() {
                    margin[self.levels_of(cell)[k]] += y;
                }
                margin.iter().map(|&m| m > 0.0).collect()
            })
            .collect();
        let factors = self
            .factors
            .iter()
            .zip(&keep)
            .map(|((name, levels), k)| {
                let lv = levels.iter().zip(k).filter(|(_, &keep)| keep).map(|(l, _)| l.clone()).collect();
                (name.clone(), lv)
            })
            .collect();
        let counts = self
            .counts
            .iter()
            .enumerate()
            .filter(|(cell, _)| self.levels_of(*cell).iter().enumerate().all(|(k, &l)| keep[k][l]))
            .map(|(_, &y)| y)
            .collect();
        CrossTable { factors, counts }
    }
}

/// Model term under treatment coding (first level of each factor is the reference).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Intercept,
    Main(usize),
    Interaction(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub labels: Vec<String>,
    pub matrix: DMatrix<f64>,
}

impl Design {
    pub fn new(labels: Vec<String>, matrix: DMatrix<f64>) -> Self {
        assert_eq!(labels.len(), matrix.ncols());
        Design { labels, matrix }
    }

    pub fn from_terms(table: &CrossTable, terms: &[Term]) -> Self {
        let n = table.n_cells();
        let cell_levels: Vec<Vec<usize>> = (0..n).map(|c| table.levels_of(c)).collect();
        let mut labels = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for term in terms {
            let factors: Vec<usize> = match term {
                Term::Intercept => {
                    labels.push("(intercept)".to_string());
                    cols.push(vec![1.0; n]);
                    continue;
                }
                Term::Main(k) => vec![*k],
                Term::Interaction(ks) => ks.clone(),
            };
            // every combination of non-reference levels across the term's factors
            let mut combos: Vec<Vec<usize>> = vec![vec![]];
            for &k in &factors {
                let nlev = table.factors[k].1.len();
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        (1..nlev).map(move |l| {
                            let mut c = c.clone();
                            c.push(l);
                            c
                        })
                    })
                    .collect();
            }
            for combo in combos {
                let label = factors
                    .iter()
                    .zip(&combo)
                    .map(|(&k, &l)| format!("{}[{}]", table.factors[k].0, table.factors[k].1[l]))
                    .collect::<Vec<_>>()
                    .join(":");
                labels.push(label);
                cols.push(
                    cell_levels
                        .iter()
                        .map(|lv| {
                            let hit = factors.iter().zip(&combo).all(|(&k, &l)| lv[k] == l);
                            if hit {
                                1.0
                            } else {
                                0.0
                            }
                        })
                        .collect(),
                );
            }
        }
        let matrix = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        Design { labels, matrix }
    }

    /// Intercept plus every main effect.
    pub fn independence(table: &CrossTable) -> Self {
        let mut terms = vec![Term::Intercept];
        terms.extend((0..table.factors.len()).map(Term::Main));
        Design::from_terms(table, &terms)
    }

    /// One parameter per cell.
    pub fn saturated(table: &CrossTable) -> Self {
        let k = table.factors.len();
        let mut terms = vec![Term::Intercept];
        for mask in 1u32..(1 << k) {
            let fs: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
            terms.push(if fs.len() == 1 { Term::Main(fs[0]) } else { Term::Interaction(fs) });
        }
        // order terms by degree so main effects precede interactions
        terms.sort_by_key(|t| match t {
            Term::Intercept => 0,
            Term::Main(_) => 1,
            Term::Interaction(v) => v.len(),
        });
        Design::from_terms(table, &terms)
    }

    pub fn rank(&self) -> usize {
        matrix_rank(&self.matrix)
    }
}

fn rank_tolerance(m: &DMatrix<f64>, max_sv: f64) -> f64 {
    max_sv * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON
}

fn matrix_rank(m: &DMatrix<f64>) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let tol = rank_tolerance(m, max);
    sv.iter().filter(|&&s| s > tol).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmFit {
    pub design_labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub fitted_counts: Vec<f64>,
    pub deviance: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Poisson deviance 2·Σ[y·ln(y/μ) − (y−μ)], with 0·ln 0 = 0.
pub fn poisson_deviance(y: &[f64], mu: &[f64]) -> f64 {
    let d: f64 = y
        .iter()
        .zip(mu)
        .map(|(&y, &m)| {
            let t = if y > 0.0 { y * (y / m).ln() } else { 0.0 };
            t - (y - m)
        })
        .sum();
    (2.0 * d).max(0.0)
}

pub fn fit_loglinear(cells: &[f64], design: &Design) -> Result<GlmFit> {
    let x = &design.matrix;
    if x.nrows() != cells.len() {
        return Err(StatsError::DimensionMismatch { design_rows: x.nrows(), cells: cells.len() });
    }
    let p = x.ncols();
    let rank = matrix_rank(x);
    if rank < p {
        return Err(StatsError::RankDeficientDesign { rank, columns: p });
    }
    let y = DVector::from_column_slice(cells);
    let mut mu = y.map(|v| v + 0.5);
    let mut eta = mu.map(f64::ln);
    let mut beta = DVector::<f64>::zeros(p);
    let mut dev = poisson_deviance(cells, mu.as_slice());
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let z = DVector::from_fn(y.len(), |i, _| eta[i] + (y[i] - mu[i]) / mu[i]);
        let sw = mu.map(f64::sqrt);
        let xw = DMatrix::from_fn(x.nrows(), p, |i, j| x[(i, j)] * sw[i]);
        let zw = z.component_mul(&sw);
        let svd = xw.svd(true, true);
        let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let tol = max_sv * (x.nrows().max(p) as f64) * f64::EPSILON;
        let new_beta = svd
            .solve(&zw, tol)
            .map_err(|_| StatsError::NonFiniteIterate { iteration: iterations })?;
        if new_beta.iter().any(|b| !b.is_finite()) {
            return Err(StatsError::NonFiniteIterate { iteration: iterations });
        }
        eta = x * &new_beta;
        mu = eta.map(f64::exp);
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(StatsError::NonFiniteIterate { iteration: iterations });
        }
        let new_dev = poisson_deviance(cells, mu.as_slice());
        let step = (&new_beta - &beta).amax();
        let scale = new_beta.amax().max(1.0);
        let dev_change = (new_dev - dev).abs();
        beta = new_beta;
        dev = new_dev;
        if dev_change < DEVIANCE_TOL || step / scale < BETA_REL_TOL {
            converged = true;
            break;
        }
    }

    Ok(GlmFit {
        design_labels: design.labels.clone(),
        coefficients: beta.iter().copied().collect(),
        fitted_counts: mu.iter().copied().collect(),
        deviance: dev,
        iterations,
        converged,
    })
}

/// True when every column of `reduced` lies in the column space of `full`.
pub fn is_nested(full: &Design, reduced: &Design) -> bool {
    if full.matrix.nrows() != reduced.matrix.nrows() {
        return false;
    }
    let svd = full.matrix.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = rank_tolerance(&full.matrix, max_sv);
    for j in 0..reduced.matrix.ncols() {
        let col = reduced.matrix.column(j).into_owned();
        let Ok(coef) = svd.solve(&col, tol) else {
            return false;
        };
        let resid = (&full.matrix * coef - &col).norm();
        if resid > 1e-8 * (1.0 + col.norm()) {
            return false;
        }
    }
    true
}

/// Likelihood-ratio test of `reduced` against the nesting `full` model.
pub fn interaction_test(cells: &[f64], full: &Design, reduced: &Design) -> Result<TestResult> {
    if !is_nested(full, reduced) {
        return Err(StatsError::NotNested);
    }
    let f = fit_loglinear(cells, full)?;
    let r = fit_loglinear(cells, reduced)?;
    let df = full.rank().saturating_sub(reduced.rank()) as u32;
    let stat = (r.deviance - f.deviance).max(0.0);
    let mut note = format!(
        "poisson log-linear likelihood ratio, {} vs {} parameters",
        full.labels.len(),
        reduced.labels.len()
    );
    if !(f.converged && r.converged) {
        note.push_str(", IRLS hit the iteration cap");
    }
    let (df, p) = if df == 0 {
        note.push_str(", identical column spaces");
        (None, 1.0)
    } else {
        (Some(df), chi2_sf(stat, df).clamp(0.0, 1.0))
    };
    Ok(TestResult { test: TestKind::LoglinearLr, statistic: Some(stat), df, p_value: p, method_note: note, seed: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tab() -> CrossTable {
        CrossTable::two_way(&[&[10.0, 20.0], &[20.0, 10.0]])
    }

    #[test]
    fn independence_hand_value() {
        let t = tab();
        let fit = fit_loglinear(&t.counts, &Design::independence(&t)).unwrap();
        assert!(fit.converged);
        for m in &fit.fitted_counts {
            assert!((m - 15.0).abs() < 1e-9);
        }
        let g2 = 4.0 * (10.0 * (10.0f64 / 15.0).ln() + 20.0 * (20.0f64 / 15.0).ln());
        assert!((fit.deviance - g2).abs() < 1e-9);
        assert!((fit.deviance - 6.7963).abs() < 1e-3);
    }

    #[test]
    fn saturated_reproduces_counts() {
        let t = tab();
        let fit = fit_loglinear(&t.counts, &Design::saturated(&t)).unwrap();
        assert!(fit.deviance <= 1e-8);
        for (m, y) in fit.fitted_counts.iter().zip(&t.counts) {
            assert!((m - y).abs() < 1e-8);
        }
    }

    #[test]
    fn lr_test_values() {
        let t = tab();
        let r = interaction_test(&t.counts, &Design::saturated(&t), &Design::independence(&t)).unwrap();
        assert_eq!(r.test, TestKind::LoglinearLr);
        assert_eq!(r.df, Some(1));
        assert!((r.statistic.unwrap() - 6.7963).abs() < 1e-3);

        let same = interaction_test(&t.counts, &Design::independence(&t), &Design::independence(&t)).unwrap();
        assert_eq!(same.statistic, Some(0.0));
        assert_eq!(same.p_value, 1.0);
    }

    #[test]
    fn not_nested_detected() {
        let t = tab();
        let row_only = Design::from_terms(&t, &[Term::Intercept, Term::Main(0)]);
        let col_only = Design::from_terms(&t, &[Term::Intercept, Term::Main(1)]);
        assert_eq!(interaction_test(&t.counts, &row_only, &col_only).unwrap_err(), StatsError::NotNested);
    }

    #[test]
    fn rank_deficiency_reported() {
        let t = tab();
        let d = Design::new(
            vec!["a".into(), "b".into()],
            DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
        );
        assert!(matches!(fit_loglinear(&t.counts, &d), Err(StatsError::RankDeficientDesign { rank: 1, columns: 2 })));
    }

    #[test]
    fn zero_cells_converge() {
        let t = CrossTable::two_way(&[&[0.0, 7.0, 3.0], &[4.0, 0.0, 9.0]]);
        let fit = fit_loglinear(&t.counts, &Design::independence(&t)).unwrap();
        assert!(fit.deviance.is_finite() && fit.deviance >= 0.0);
        let sat = fit_loglinear(&t.counts, &Design::saturated(&t)).unwrap();
        assert!(sat.deviance < 1e-6);
    }

    #[test]
    fn three_way_design_shapes() {
        let factors = vec![
            ("pop".to_string(), vec!["a".into(), "b".into()]),
            ("f1".to_string(), vec!["x".into(), "y".into(), "z".into()]),
            ("f2".to_string(), vec!["u".into(), "v".into()]),
        ];
        let t = CrossTable::new(factors, (1..=12).map(|v| v as f64).collect());
        assert_eq!(Design::saturated(&t).matrix.ncols(), 12);
        assert_eq!(Design::independence(&t).matrix.ncols(), 1 + 1 + 2 + 1);
        let full = Design::from_terms(&t, &[Term::Intercept, Term::Main(0), Term::Main(1), Term::Main(2), Term::Interaction(vec![1, 2])]);
        assert_eq!(full.matrix.ncols(), 7);
        assert_eq!(full.labels[5], "f1[y]:f2[v]");
        assert_eq!(t.levels_of(7), vec![1, 0, 1]);
    }

    #[test]
    fn empty_levels_dropped() {
        let factors = vec![
            ("pop".to_string(), vec!["a".into(), "b".into()]),
            ("f".to_string(), vec!["x".into(), "y".into(), "z".into()]),
        ];
        let t = CrossTable::new(factors, vec![1.0, 0.0, 2.0, 3.0, 0.0, 4.0]);
        let d = t.drop_empty_levels();
        assert_eq!(d.factors[1].1, vec!["x", "z"]);
        assert_eq!(d.counts, vec![1.0, 2.0, 3.0, 4.0]);
    }
}
