//! Attribution corpus model, coreference-backed source classification and
//! categorical statistics (exact and asymptotic independence tests, Poisson
//! log-linear models, residual-shaded mosaic plots).

pub mod corpus;
pub mod labels;
pub mod classifier;
pub mod stats;
pub mod mosaic;
