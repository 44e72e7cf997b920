//! Monotone metrics `K_ρ(X, Y) = Tr X* [(R_ρ f(L_ρ R_ρ⁻¹))⁻¹ Y]` and the
//! trace-dependent CPTP variants.
//!
//! The CPTNI metric has three evaluation paths: the eigenbasis kernel
//! (production), the assembled `n² × n²` superoperator, and the operator mean
//! `L_ρ⁻¹ m_h R_ρ⁻¹` with `h(x) = x/f(x)`. The last two exist to cross-check
//! the first.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{MonotoneFunctionSpec, ScalarFunction};
use crate::linalg::{
    c, eig_hermitian, hermitian_part, hermitize, identity, kron, trace, vectorize, CMat, SpectralDecomposition,
    EIG_FLOOR_REL,
};
use crate::means::mean_strict;
use crate::Complex64;

/// Largest dimension accepted by the superoperator path.
pub const SUPEROP_DIM_CAP: usize = 16;
/// Allowed imaginary part of `K(X, X)`, relative to `max(1, |Re K|)`.
pub const IMAG_TOL: f64 = 1e-10;
/// Slack on `Tr ρ ≤ 1` in bounded mode.
pub const TRACE_SLACK: f64 = 1e-12;
/// Slack on `Tr ρ = 1` for the Petz metric.
pub const UNIT_TRACE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceMode {
    /// `ρ > 0` with `Tr ρ ≤ 1`.
    #[default]
    #[serde(rename = "bounded")]
    UnitBounded,
    /// Any `ρ > 0`.
    #[serde(rename = "free")]
    Unconstrained,
}

impl std::str::FromStr for TraceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bounded" => Ok(TraceMode::UnitBounded),
            "free" => Ok(TraceMode::Unconstrained),
            _ => Err(Error::InvalidDocument(format!("unknown trace mode `{s}`"))),
        }
    }
}

/// Strictly positive base point with its spectrum cached at construction.
#[derive(Clone, Debug)]
pub struct DensityLikeOperator {
    matrix: CMat,
    spectral: SpectralDecomposition,
    trace: f64,
    mode: TraceMode,
}

impl DensityLikeOperator {
    pub fn new(m: &CMat, mode: TraceMode) -> Result<Self> {
        let matrix = hermitize(m)?;
        let spectral = eig_hermitian(&matrix)?;
        let tr = trace(&matrix).re;
        let floor = EIG_FLOOR_REL * tr.max(0.0);
        if !(tr > 0.0) || spectral.min_eigenvalue() <= floor {
            return Err(Error::NotStrictlyPositive {
                min_eigenvalue: spectral.min_eigenvalue(),
                floor,
            });
        }
        if mode == TraceMode::UnitBounded && tr > 1.0 + TRACE_SLACK {
            return Err(Error::TraceExceedsOne(tr));
        }
        Ok(Self {
            matrix,
            spectral,
            trace: tr,
            mode,
        })
    }

    pub fn bounded(m: &CMat) -> Result<Self> {
        Self::new(m, TraceMode::UnitBounded)
    }

    pub fn unconstrained(m: &CMat) -> Result<Self> {
        Self::new(m, TraceMode::Unconstrained)
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.spectral.eigenvalues.as_slice()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn mode(&self) -> TraceMode {
        self.mode
    }

    /// `q·ρ`, keeping the trace mode.
    pub fn scaled(&self, q: f64) -> Result<Self> {
        Self::new(&(&self.matrix * c(q)), self.mode)
    }

    /// `ρ⁻¹`, from the cached spectrum.
    pub fn inverse(&self) -> CMat {
        self.spectral.apply(|p| 1.0 / p)
    }
}

/// Entries `c_ij = 1/(p_j f(p_i/p_j))` over the eigenvalues of `ρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricKernel {
    pub eigenvalues: Vec<f64>,
    pub entries: DMatrix<f64>,
}

/// One kernel entry. `f` is only evaluated on `(0, 1]`: when `p_i > p_j` the
/// identity `p_j f(p_i/p_j) = p_i f′(p_j/p_i)` is used instead.
pub fn kernel_entry(pi: f64, pj: f64, f: &(impl ScalarFunction + ?Sized)) -> f64 {
    if pi <= pj {
        1.0 / (pj * f.eval(pi / pj))
    } else {
        1.0 / (pi * f.eval_prime(pj / pi))
    }
}

impl MetricKernel {
    pub fn new(eigenvalues: &[f64], f: &(impl ScalarFunction + ?Sized)) -> Self {
        let n = eigenvalues.len();
        let entries = DMatrix::from_fn(n, n, |i, j| kernel_entry(eigenvalues[i], eigenvalues[j], f));
        Self {
            eigenvalues: eigenvalues.to_vec(),
            entries,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.entries.iter().all(|v| *v > 0.0 && v.is_finite())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.entries.nrows();
        (0..n).all(|i| {
            (0..n).all(|j| {
                let (a, b) = (self.entries[(i, j)], self.entries[(j, i)]);
                (a - b).abs() <= tol * a.abs().max(b.abs())
            })
        })
    }

    /// `Σ_ij conj(X̃_ij) Ỹ_ij c_ij` for `X̃, Ỹ` already in the eigenbasis.
    pub fn contract(&self, xt: &CMat, yt: &CMat) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..xt.ncols() {
            for i in 0..xt.nrows() {
                acc += xt[(i, j)].conj() * yt[(i, j)] * self.entries[(i, j)];
            }
        }
        acc
    }
}

fn check_tangent(rho: &DensityLikeOperator, x: &CMat, name: &str) -> Result<()> {
    let n = rho.dim();
    if x.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "{name} is {}x{}, base point is {n}x{n}",
            x.nrows(),
            x.ncols()
        )));
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidDocument(format!("{name} has non-finite entries")));
    }
    Ok(())
}

/// Kernel-path value for an arbitrary positive scalar function, with every
/// kernel entry shifted by `delta`.
fn kernel_value(
    rho: &DensityLikeOperator,
    f: &(impl ScalarFunction + ?Sized),
    delta: f64,
    x: &CMat,
    y: &CMat,
) -> Result<Complex64> {
    check_tangent(rho, x, "X")?;
    check_tangent(rho, y, "Y")?;
    let mut kernel = MetricKernel::new(rho.eigenvalues(), f);
    if delta != 0.0 {
        kernel.entries.add_scalar_mut(delta);
    }
    let u = &rho.spectral().eigenvectors;
    let xt = u.adjoint() * x * u;
    let yt = u.adjoint() * y * u;
    Ok(kernel.contract(&xt, &yt))
}

/// `K(X, X)` as a real number, refusing a non-negligible imaginary part.
pub fn real_part_checked(v: Complex64) -> Result<f64> {
    if v.im.abs() > IMAG_TOL * v.re.abs().max(1.0) {
        return Err(Error::NumericalFailure(format!(
            "K(X, X) has imaginary part {:e}",
            v.im
        )));
    }
    Ok(v.re)
}

/// The three path values for one `(ρ, X)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathComparison {
    pub kernel: f64,
    pub superop: f64,
    pub meanform: f64,
    pub max_relative_deviation: f64,
}

fn relative_deviation(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// The CPTNI monotone metric of an operator monotone `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct CptniMetric {
    f: MonotoneFunctionSpec,
    kernel_perturbation: f64,
}

impl CptniMetric {
    pub fn new(f: MonotoneFunctionSpec) -> Self {
        Self {
            f,
            kernel_perturbation: 0.0,
        }
    }

    /// Adds `delta` to every kernel entry of the kernel path. Only meant for
    /// checking that the verification suites detect a broken kernel.
    #[doc(hidden)]
    pub fn with_kernel_perturbation(mut self, delta: f64) -> Self {
        self.kernel_perturbation = delta;
        self
    }

    pub fn f(&self) -> &MonotoneFunctionSpec {
        &self.f
    }

    pub fn kernel_perturbation(&self) -> f64 {
        self.kernel_perturbation
    }

    pub fn kernel(&self, rho: &DensityLikeOperator) -> MetricKernel {
        let mut k = MetricKernel::new(rho.eigenvalues(), &self.f);
        k.entries.add_scalar_mut(self.kernel_perturbation);
        k
    }

    /// Kernel path: rotate into `ρ`'s eigenbasis and contract with `c_ij`.
    pub fn eval(&self, rho: &DensityLikeOperator, x: &CMat, y: &CMat) -> Result<Complex64> {
        kernel_value(rho, &self.f, self.kernel_perturbation, x, y)
    }

    /// `K_ρ(X, X)`.
    pub fn norm_sq(&self, rho: &DensityLikeOperator, x: &CMat) -> Result<f64> {
        real_part_checked(self.eval(rho, x, x)?)
    }

    /// Superoperator path. With column-stacking `vec`, `L_ρ = I ⊗ ρ`,
    /// `R_ρ = ρᵀ ⊗ I` and `L_ρ R_ρ⁻¹ = ρ⁻ᵀ ⊗ ρ`; the system
    /// `R_ρ f(L_ρ R_ρ⁻¹) z = vec Y` is solved by LU and contracted with
    /// `vec X`.
    pub fn eval_superop(&self, rho: &DensityLikeOperator, x: &CMat, y: &CMat) -> Result<Complex64> {
        check_tangent(rho, x, "X")?;
        check_tangent(rho, y, "Y")?;
        let n = rho.dim();
        if n > SUPEROP_DIM_CAP {
            return Err(Error::DimCapExceeded {
                dim: n,
                cap: SUPEROP_DIM_CAP,
            });
        }
        let r = rho.matrix();
        let r_inv = r
            .clone()
            .try_inverse()
            .map(|m| hermitian_part(&m))
            .ok_or_else(|| Error::NumericalFailure("ρ is numerically singular".into()))?;
        let eye = identity(n);
        let left = kron(&eye, r);
        let right = kron(&r.transpose(), &eye);
        let right_inv = kron(&r_inv.transpose(), &eye);
        let modular = hermitian_part(&(left * right_inv));
        let f_modular = eig_hermitian(&modular)?.apply(|x| self.f.eval(x));
        let s = right * f_modular;
        let z = s
            .lu()
            .solve(&vectorize(y))
            .ok_or_else(|| Error::NumericalFailure("superoperator is singular".into()))?;
        Ok(vectorize(x).dotc(&z))
    }

    /// Mean path `vec(X)* (L_ρ⁻¹ m_h R_ρ⁻¹) vec(X)` with `h(x) = x/f(x)`.
    pub fn eval_meanform(&self, rho: &DensityLikeOperator, x: &CMat) -> Result<f64> {
        check_tangent(rho, x, "X")?;
        let n = rho.dim();
        if n > SUPEROP_DIM_CAP {
            return Err(Error::DimCapExceeded {
                dim: n,
                cap: SUPEROP_DIM_CAP,
            });
        }
        let r_inv = rho.inverse();
        let eye = identity(n);
        let l_inv = kron(&eye, &r_inv);
        let rr_inv = kron(&r_inv.transpose(), &eye);
        let m = mean_strict(&l_inv, &rr_inv, &self.f.h())?;
        let v = vectorize(x);
        real_part_checked(v.dotc(&(m * &v)))
    }

    /// All three paths on `K_ρ(X, X)`.
    pub fn cross_check(&self, rho: &DensityLikeOperator, x: &CMat) -> Result<PathComparison> {
        let kernel = self.norm_sq(rho, x)?;
        let superop = real_part_checked(self.eval_superop(rho, x, x)?)?;
        let meanform = self.eval_meanform(rho, x)?;
        let max_relative_deviation = relative_deviation(kernel, superop)
            .max(relative_deviation(kernel, meanform))
            .max(relative_deviation(superop, meanform));
        Ok(PathComparison {
            kernel,
            superop,
            meanform,
            max_relative_deviation,
        })
    }
}

/// `K_ρ(X, Y) + c·conj(Tr X)·Tr Y` on unit-trace `ρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PetzMetric {
    pub f: MonotoneFunctionSpec,
    pub c: f64,
}

impl PetzMetric {
    pub fn new(f: MonotoneFunctionSpec, c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::SpecViolation(format!("c = {c} must be a non-negative constant")));
        }
        Ok(Self { f, c })
    }

    pub fn eval(&self, rho: &DensityLikeOperator, x: &CMat, y: &CMat) -> Result<Complex64> {
        if (rho.trace() - 1.0).abs() > UNIT_TRACE_TOL {
            return Err(Error::NotUnitTrace(rho.trace()));
        }
        let k = kernel_value(rho, &self.f, 0.0, x, y)?;
        Ok(k + trace(x).conj() * trace(y) * self.c)
    }
}

pub fn petz_cptp_metric(
    rho: &DensityLikeOperator,
    f: &MonotoneFunctionSpec,
    c: f64,
    x: &CMat,
    y: &CMat,
) -> Result<Complex64> {
    PetzMetric::new(*f, c)?.eval(rho, x, y)
}

/// `(1 − w)·f₁ + w·f₂`; a convex combination of operator monotone functions
/// is operator monotone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolatedFunction {
    pub lower: MonotoneFunctionSpec,
    pub upper: MonotoneFunctionSpec,
    pub weight: f64,
}

impl ScalarFunction for InterpolatedFunction {
    fn eval(&self, x: f64) -> f64 {
        if self.weight == 0.0 {
            return self.lower.eval(x);
        }
        (1.0 - self.weight) * self.lower.eval(x) + self.weight * self.upper.eval(x)
    }

    fn eval_prime(&self, x: f64) -> f64 {
        if self.weight == 0.0 {
            return self.lower.eval_prime(x);
        }
        (1.0 - self.weight) * self.lower.eval_prime(x) + self.weight * self.upper.eval_prime(x)
    }
}

/// Trace-parameterized CPTP metric
/// `Tr X*[(R_ρ f_t(L_ρ R_ρ⁻¹))⁻¹ Y] + b(t)·conj(Tr X)·Tr Y` with `t = Tr ρ`.
///
/// `f_t` and `b` are given by knot tables in `t`: between knots the functions
/// (and the values of `b`) are interpolated affinely, outside them the
/// nearest knot is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CptpMetricSpec {
    pub f_knots: Vec<(f64, MonotoneFunctionSpec)>,
    pub b_knots: Vec<(f64, f64)>,
}

fn bracket<T>(knots: &[(f64, T)], t: f64) -> (usize, usize, f64) {
    let last = knots.len() - 1;
    if t <= knots[0].0 {
        return (0, 0, 0.0);
    }
    if t >= knots[last].0 {
        return (last, last, 0.0);
    }
    let hi = knots.iter().position(|(s, _)| *s > t).unwrap_or(last);
    let lo = hi - 1;
    let w = (t - knots[lo].0) / (knots[hi].0 - knots[lo].0);
    (lo, hi, w)
}

impl CptpMetricSpec {
    /// `f_t ≡ f`, `b ≡ b`.
    pub fn constant(f: MonotoneFunctionSpec, b: f64) -> Self {
        Self {
            f_knots: vec![(1.0, f)],
            b_knots: vec![(1.0, b)],
        }
    }

    pub fn with_tables(mut f_knots: Vec<(f64, MonotoneFunctionSpec)>, mut b_knots: Vec<(f64, f64)>) -> Result<Self> {
        if f_knots.is_empty() || b_knots.is_empty() {
            return Err(Error::SpecViolation("knot tables must be non-empty".into()));
        }
        let finite =
            f_knots.iter().all(|(t, _)| t.is_finite()) && b_knots.iter().all(|(t, b)| t.is_finite() && b.is_finite());
        if !finite {
            return Err(Error::SpecViolation("knots must be finite".into()));
        }
        f_knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        b_knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if f_knots.windows(2).any(|w| w[0].0 == w[1].0) || b_knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::SpecViolation("duplicate knot".into()));
        }
        Ok(Self { f_knots, b_knots })
    }

    pub fn f_at(&self, t: f64) -> InterpolatedFunction {
        let (lo, hi, weight) = bracket(&self.f_knots, t);
        InterpolatedFunction {
            lower: self.f_knots[lo].1,
            upper: self.f_knots[hi].1,
            weight,
        }
    }

    pub fn b_at(&self, t: f64) -> f64 {
        let (lo, hi, w) = bracket(&self.b_knots, t);
        (1.0 - w) * self.b_knots[lo].1 + w * self.b_knots[hi].1
    }

    /// `1/f_t(1) + t·b(t) > 0`.
    pub fn check_at(&self, t: f64) -> Result<()> {
        let v = 1.0 / self.f_at(t).eval(1.0) + t * self.b_at(t);
        if !(v > 0.0) {
            return Err(Error::SpecViolation(format!("1/f_t(1) + t·b(t) = {v} at t = {t}")));
        }
        Ok(())
    }

    pub fn eval(&self, rho: &DensityLikeOperator, x: &CMat, y: &CMat) -> Result<Complex64> {
        let t = rho.trace();
        self.check_at(t)?;
        let k = kernel_value(rho, &self.f_at(t), 0.0, x, y)?;
        Ok(k + trace(x).conj() * trace(y) * self.b_at(t))
    }

    pub fn norm_sq(&self, rho: &DensityLikeOperator, x: &CMat) -> Result<f64> {
        real_part_checked(self.eval(rho, x, x)?)
    }
}

pub fn kumagai_cptp_metric(rho: &DensityLikeOperator, spec: &CptpMetricSpec, x: &CMat, y: &CMat) -> Result<Complex64> {
    spec.eval(rho, x, y)
}
