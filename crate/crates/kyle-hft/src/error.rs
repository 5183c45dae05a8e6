use thiserror::Error;

/// Everything that can go wrong while evaluating or solving the model.
///
/// Solver entry points do not return these for "no equilibrium here"; that
/// outcome is a regular [`Regime::NoEquilibrium`](crate::Regime) value. These
/// errors describe invalid inputs and points where a formula is undefined.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter outside its domain: {0}")]
    ParameterDomain(String),
    #[error("unsupported HFT configuration: {0}")]
    UnsupportedConfiguration(String),
    #[error("degenerate moment: {0}")]
    DegenerateMoment(String),
    #[error("order flows at 1+ and 2 are collinear (rho = {rho})")]
    CollinearFlows { rho: f64 },
    #[error("conditioning covariance of HFT {hft} is not positive definite (det = {det})")]
    DegenerateConditioning { hft: usize, det: f64 },
    #[error("second-order condition {which} fails (slack = {slack})")]
    Concavity { which: &'static str, slack: f64 },
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),
    #[error("limit could not be resolved: {0}")]
    LimitUnresolved(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
