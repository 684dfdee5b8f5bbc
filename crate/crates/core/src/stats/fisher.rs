//! Fisher's exact test for 2×L tables (Freeman–Halton extension), with a
//! Monte Carlo fallback once the number of margin-consistent tables exceeds
//! the enumeration budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::special::LnFactorial;
use super::table::ContingencyTable;
use super::{TestKind, TestResult};

/// Relative slack on the "at most as probable as observed" comparison.
pub const REL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FisherConfig {
    pub max_tables: u64,
    pub n_sim: u64,
    pub seed: u64,
    /// ChaCha stream id, so several tests can share one seed without sharing draws.
    pub stream: u64,
}

impl Default for FisherConfig {
    fn default() -> Self {
        FisherConfig { max_tables: 10_000_000, n_sim: 1_000_000, seed: 0, stream: 0 }
    }
}

struct Margins {
    r1: usize,
    n: usize,
    cols: Vec<usize>,
    lf: LnFactorial,
}

impl Margins {
    fn of(table: &ContingencyTable) -> Self {
        let [r1, _] = table.row_totals();
        let n = table.total() as usize;
        Margins {
            r1: r1 as usize,
            n,
            cols: table.col_totals().into_iter().map(|c| c as usize).collect(),
            lf: LnFactorial::new(n),
        }
    }

    /// log point probability minus the constant shared by all tables with these margins.
    fn log_weight(&self, first_row: impl Iterator<Item = usize>) -> f64 {
        first_row
            .zip(&self.cols)
            .map(|(x, &c)| -(self.lf.get(x) + self.lf.get(c - x)))
            .sum()
    }

    fn log_const(&self) -> f64 {
        let lf = &self.lf;
        lf.get(self.r1) + lf.get(self.n - self.r1) - lf.get(self.n)
            + self.cols.iter().map(|&c| lf.get(c)).sum::<f64>()
    }
}

/// Number of 2×L tables with the given margins (saturating).
pub fn count_tables(table: &ContingencyTable) -> u128 {
    let [r1, _] = table.row_totals();
    let r1 = r1 as usize;
    let mut ways = vec![0u128; r1 + 1];
    ways[0] = 1;
    for c in table.col_totals() {
        let c = c as usize;
        let mut next = vec![0u128; r1 + 1];
        for (s, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for x in 0..=c.min(r1 - s) {
                next[s + x] = next[s + x].saturating_add(w);
            }
        }
        ways = next;
    }
    ways[r1]
}

pub fn fisher_exact(table: &ContingencyTable, config: &FisherConfig) -> TestResult {
    let count = count_tables(table);
    if count <= config.max_tables as u128 {
        let p = enumerate_p(table);
        TestResult {
            test: TestKind::FisherExact,
            statistic: None,
            df: None,
            p_value: p,
            method_note: format!(
                "two-sided point-probability method, {count} margin-consistent tables enumerated"
            ),
            seed: None,
        }
    } else {
        let p = monte_carlo_p(table, config);
        TestResult {
            test: TestKind::FisherMonteCarlo,
            statistic: None,
            df: None,
            p_value: p,
            method_note: format!(
                "two-sided point-probability method, monte carlo with {} simulated tables \
                 ({count} tables exceed budget {})",
                config.n_sim, config.max_tables
            ),
            seed: Some(config.seed),
        }
    }
}

fn enumerate_p(table: &ContingencyTable) -> f64 {
    let m = Margins::of(table);
    let obs: Vec<usize> = table.counts[0].iter().map(|&x| x as usize).collect();
    let k = m.log_const();
    let cutoff = m.log_weight(obs.iter().copied()) + REL_TOLERANCE.ln_1p();
    let l = m.cols.len();
    let mut suffix = vec![0usize; l + 1];
    for j in (0..l).rev() {
        suffix[j] = suffix[j + 1] + m.cols[j];
    }
    let mut acc = Acc { below: 0.0, all: 0.0 };
    walk(&m, &suffix, 0, m.r1, 0.0, k, cutoff, &mut acc);
    // normalising by the full sum cancels rounding in the shared constant
    (acc.below / acc.all).clamp(0.0, 1.0)
}

struct Acc {
    below: f64,
    all: f64,
}

#[allow(clippy::too_many_arguments)]
fn walk(m: &Margins, suffix: &[usize], j: usize, remaining: usize, lw: f64, k: f64, cutoff: f64, acc: &mut Acc) {
    let c = m.cols[j];
    let lo = remaining.saturating_sub(suffix[j + 1]);
    let hi = c.min(remaining);
    for x in lo..=hi {
        let w = lw - (m.lf.get(x) + m.lf.get(c - x));
        if j + 1 == m.cols.len() {
            let p = (w + k).exp();
            acc.all += p;
            if w <= cutoff {
                acc.below += p;
            }
        } else {
            walk(m, suffix, j + 1, remaining - x, w, k, cutoff, acc);
        }
    }
}

fn monte_carlo_p(table: &ContingencyTable, config: &FisherConfig) -> f64 {
    let m = Margins::of(table);
    let cutoff = m.log_weight(table.counts[0].iter().map(|&x| x as usize)) + REL_TOLERANCE.ln_1p();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(config.stream);
    let l = m.cols.len();
    // column j's draw depends only on the successes still unplaced, so each
    // conditional CDF is built once: cdfs[j][left_r]
    let mut cdfs: Vec<Vec<Option<HyperCdf>>> = vec![vec![None; m.r1 + 1]; l];
    let mut hits = 0u64;
    for _ in 0..config.n_sim {
        let mut left_n = m.n;
        let mut left_r = m.r1;
        let mut lw = 0.0;
        for (j, &c) in m.cols.iter().enumerate() {
            let x = if j + 1 == l {
                left_r
            } else {
                cdfs[j][left_r]
                    .get_or_insert_with(|| HyperCdf::new(left_n, left_r, c))
                    .sample(&mut rng)
            };
            lw -= m.lf.get(x) + m.lf.get(c - x);
            left_n -= c;
            left_r -= x;
        }
        if lw <= cutoff {
            hits += 1;
        }
    }
    (1 + hits) as f64 / (1 + config.n_sim) as f64
}

/// Hypergeometric law of the number of successes when taking `draws` items
/// from `total` of which `successes` are successes, held as a CDF for
/// inverse-transform sampling.
#[derive(Debug, Clone)]
struct HyperCdf {
    lo: usize,
    cdf: Vec<f64>,
}

impl HyperCdf {
    fn new(total: usize, successes: usize, draws: usize) -> Self {
        let failures = total - successes;
        let lo = draws.saturating_sub(failures);
        let hi = draws.min(successes);
        // unnormalised pmf built outward from the mode so nothing underflows near the peak
        let mode = (((draws + 1) as f64 * (successes + 1) as f64 / (total + 2) as f64).floor() as usize).clamp(lo, hi);
        let mut w = vec![0.0; hi - lo + 1];
        w[mode - lo] = 1.0;
        let ratio_up = |k: usize| {
            // P(k+1)/P(k)
            ((successes - k) * (draws - k)) as f64 / ((k + 1) * (failures + k + 1 - draws)) as f64
        };
        for k in mode..hi {
            w[k + 1 - lo] = w[k - lo] * ratio_up(k);
        }
        for k in (lo..mode).rev() {
            w[k - lo] = w[k + 1 - lo] / ratio_up(k);
        }
        let total_w: f64 = w.iter().sum();
        let mut acc = 0.0;
        let cdf = w
            .iter()
            .map(|x| {
                acc += x;
                acc / total_w
            })
            .collect();
        HyperCdf { lo, cdf }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        if self.cdf.len() == 1 {
            return self.lo;
        }
        let u = rng.gen::<f64>();
        let i = self.cdf.partition_point(|&c| c <= u);
        self.lo + i.min(self.cdf.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(a: &[u64], b: &[u64]) -> ContingencyTable {
        ContingencyTable::from_rows(a, b).unwrap()
    }

    #[test]
    fn tea_tasting_value() {
        let r = fisher_exact(&t(&[3, 1], &[1, 3]), &FisherConfig::default());
        assert_eq!(r.test, TestKind::FisherExact);
        assert!((r.p_value - 34.0 / 70.0).abs() < 1e-14);
        assert_eq!(r.statistic, None);
    }

    #[test]
    fn extreme_diagonal() {
        let r = fisher_exact(&t(&[0, 5], &[5, 0]), &FisherConfig::default());
        assert!((r.p_value - 2.0 / 252.0).abs() < 1e-15);
    }

    #[test]
    fn table_count_small() {
        assert_eq!(count_tables(&t(&[3, 1], &[1, 3])), 5);
        // 2x3 with columns 2,2,2 and first row 3: compositions of 3 into 3 parts <= 2
        assert_eq!(count_tables(&t(&[1, 1, 1], &[1, 1, 1])), 7);
    }

    #[test]
    fn falls_back_to_monte_carlo() {
        let cfg = FisherConfig { max_tables: 3, n_sim: 20_000, seed: 11, stream: 0 };
        let tab = t(&[3, 1], &[1, 3]);
        let r = fisher_exact(&tab, &cfg);
        assert_eq!(r.test, TestKind::FisherMonteCarlo);
        assert_eq!(r.seed, Some(11));
        assert!((r.p_value - 34.0 / 70.0).abs() < 0.02);
        // deterministic under seed
        assert_eq!(fisher_exact(&tab, &cfg).p_value, r.p_value);
    }

    #[test]
    fn hypergeometric_mean() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let law = HyperCdf::new(50, 20, 10);
        let n = 40_000;
        let s: usize = (0..n).map(|_| law.sample(&mut rng)).sum();
        let mean = s as f64 / n as f64;
        assert!((mean - 4.0).abs() < 0.05, "{mean}");
    }
}
