//! Reproducible random streams and the statistical tests shared by all suites.

pub mod gof;
pub mod report;
pub mod rng;

pub use gof::{
    chi2_sf, chi_square_gof, correlation, correlation_test, independence_test, ks_test,
    mean_var, IndependenceReport, Pooling,
};
pub use report::{CertificationStat, LawSeries, SuiteOutcome, TestReport, ALPHA};
pub use rng::{derive_stream, RngStream};
