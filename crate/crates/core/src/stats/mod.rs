//! Categorical statistics over labeled attribution populations.
//!
//! Two-population feature tests build a 2×L contingency table and run either a
//! χ² test or Fisher's exact test depending on expected counts. Interaction
//! hypotheses are tested with nested Poisson log-linear models.

pub mod chisq;
pub mod fisher;
pub mod glm;
pub mod residuals;
pub mod sampling;
pub mod selection;
pub mod special;
pub mod suite;
pub mod table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chisq::{chi_square_test, ChiSquareMode};
pub use fisher::{fisher_exact, FisherConfig};
pub use glm::{fit_loglinear, interaction_test, CrossTable, Design, GlmFit, Term};
pub use residuals::{pearson_residuals, pearson_residuals_from_fit};
pub use sampling::{sample_populations, PopulationSpec, SourceSelector};
pub use selection::{test_selection, Recommendation};
pub use suite::{run_analysis_suite, SuiteConfig, SuiteEntry};
pub use table::{build_table, ContingencyTable, Feature};

/// Significance level attached to suite results.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("population `{0}` is empty")]
    EmptyPopulation(String),
    #[error("degenerate table: {retained} retained column(s) after dropping all-zero labels")]
    DegenerateTable { retained: usize },
    #[error("expected count is zero in cell ({row}, {col})")]
    ZeroExpected { row: usize, col: usize },
    #[error("design matrix has rank {rank} but {columns} columns")]
    RankDeficientDesign { rank: usize, columns: usize },
    #[error("IRLS produced a non-finite iterate at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },
    #[error("reduced design is not nested in the full design")]
    NotNested,
    #[error("design has {design_rows} rows but there are {cells} cells")]
    DimensionMismatch { design_rows: usize, cells: usize },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("cannot parse population `{0}`")]
    BadPopulation(String),
}

pub type Result<T> = std::result::Result<T, StatsError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    ChiSqYates,
    ChiSqPlain,
    FisherExact,
    FisherMonteCarlo,
    LoglinearLr,
}

impl TestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::ChiSqYates => "chi_sq_yates",
            TestKind::ChiSqPlain => "chi_sq_plain",
            TestKind::FisherExact => "fisher_exact",
            TestKind::FisherMonteCarlo => "fisher_monte_carlo",
            TestKind::LoglinearLr => "loglinear_lr",
        }
    }
}

impl std::fmt::Display for TestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: TestKind,
    /// Absent for exact tests.
    pub statistic: Option<f64>,
    pub df: Option<u32>,
    pub p_value: f64,
    pub method_note: String,
    pub seed: Option<u64>,
}
