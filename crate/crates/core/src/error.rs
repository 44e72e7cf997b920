use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (defect {defect:.3e} exceeds {tol:.3e})")]
    NonHermitian { defect: f64, tol: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("eigenvalue {eigenvalue:.3e} lies outside the domain of `{function}`")]
    DomainViolation { function: String, eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("leading block is not strictly positive (min eigenvalue {0:.3e})")]
    SingularBlock(f64),
    #[error("regularized limit did not converge: {0}")]
    NonConvergence(String),
    #[error("operator is not strictly positive (min eigenvalue {min_eigenvalue:.3e}, floor {floor:.3e})")]
    NotStrictlyPositive { min_eigenvalue: f64, floor: f64 },
    #[error("trace {0} exceeds one")]
    TraceExceedsOne(f64),
    #[error("superoperator path is capped at dimension {cap}, got {dim}")]
    DimCapExceeded { dim: usize, cap: usize },
    #[error("operator does not have unit trace (trace {0})")]
    NotUnitTrace(f64),
    #[error("metric spec violates its positivity constraint: {0}")]
    SpecViolation(String),
    #[error("map is not trace non-increasing (defect min eigenvalue {0:.3e})")]
    NotCptni(f64),
    #[error("demonstration failed: {0}")]
    DemoFailure(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
