//! Monotone Riemannian metrics on strictly positive, possibly unnormalized,
//! operators.
//!
//! The crate evaluates the metric family
//! `K_ρ(X, Y) = Tr X* [(R_ρ f(L_ρ R_ρ⁻¹))⁻¹ Y]` for an operator monotone `f`,
//! along with the trace-dependent CPTP variants it is compared against, and
//! ships the machinery the metric depends on: spectral calculus, operator
//! monotone functions, Kubo–Ando operator means and Kraus channels. The
//! [`harness`] module certifies the metric's monotonicity, additivity and
//! convexity properties on seeded random instances.

pub mod channels;
pub mod error;
pub mod functions;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod means;
pub mod metrics;
pub mod report;
pub mod sampling;

pub use channels::{Classification, KrausChannel};
pub use error::{Error, Result};
pub use functions::{CatalogFn, MonotoneFunctionSpec, ScalarFunction, Transform};
pub use linalg::{CMat, SpectralDecomposition};
pub use metrics::{CptniMetric, CptpMetricSpec, DensityLikeOperator, MetricKernel, TraceMode};
pub use report::Report;

pub use num_complex::Complex64;
