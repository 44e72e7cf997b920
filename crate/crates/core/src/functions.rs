//! Operator monotone functions `f: (0, ∞) → (0, ∞)`, their dual transforms,
//! and randomized checks of operator monotonicity, operator concavity and the
//! transformer inequality.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::matrix_value;
use crate::linalg::{c, eig_hermitian, matrix_function, matrix_function_of, spectral_norm, Boundary, CMat};
use crate::report::CheckReport;
use crate::sampling::{random_contraction, random_positive, random_psd, rng_for};

/// Slack for the operator inequality checks, relative to operand norms.
pub const CHECK_TOL: f64 = 1e-8;

/// Scalar map evaluated pointwise by metric kernels.
pub trait ScalarFunction {
    fn eval(&self, x: f64) -> f64;

    /// `x·f(1/x)`.
    fn eval_prime(&self, x: f64) -> f64 {
        x * self.eval(1.0 / x)
    }
}

/// Base entries of the function catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CatalogFn {
    /// `1`
    Right,
    /// `x`
    Left,
    /// `(1 + x) / 2`
    Sld,
    /// `(x − 1) / ln x`
    Kmb,
    /// `((√x + 1) / 2)²`
    Wy,
    /// `√x`
    Geo,
    /// `2x / (1 + x)`
    Harm,
    /// `x²`, not operator monotone; kept as a negative control.
    Sq,
}

impl CatalogFn {
    pub const ALL: [CatalogFn; 8] = [
        CatalogFn::Right,
        CatalogFn::Left,
        CatalogFn::Sld,
        CatalogFn::Kmb,
        CatalogFn::Wy,
        CatalogFn::Geo,
        CatalogFn::Harm,
        CatalogFn::Sq,
    ];

    /// Entries claimed operator monotone.
    pub const MONOTONE: [CatalogFn; 7] = [
        CatalogFn::Right,
        CatalogFn::Left,
        CatalogFn::Sld,
        CatalogFn::Kmb,
        CatalogFn::Wy,
        CatalogFn::Geo,
        CatalogFn::Harm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CatalogFn::Right => "right",
            CatalogFn::Left => "left",
            CatalogFn::Sld => "sld",
            CatalogFn::Kmb => "kmb",
            CatalogFn::Wy => "wy",
            CatalogFn::Geo => "geo",
            CatalogFn::Harm => "harm",
            CatalogFn::Sq => "sq",
        }
    }

    fn eval(self, x: f64) -> f64 {
        match self {
            CatalogFn::Right => 1.0,
            CatalogFn::Left => x,
            CatalogFn::Sld => 0.5 * (1.0 + x),
            CatalogFn::Kmb => {
                let u = x - 1.0;
                if u.abs() < 1e-8 {
                    1.0 + u / 2.0 - u * u / 12.0
                } else if x < 0.5 {
                    u / x.ln()
                } else {
                    u / u.ln_1p()
                }
            }
            CatalogFn::Wy => {
                let h = 0.5 * (x.sqrt() + 1.0);
                h * h
            }
            CatalogFn::Geo => x.sqrt(),
            CatalogFn::Harm => 2.0 * x / (1.0 + x),
            CatalogFn::Sq => x * x,
        }
    }

    /// `[f(0⁺), lim₀ x/f(x), lim_∞ f(y)/y, 1/f(∞)]`: the boundary values of
    /// the four members of the transform group.
    fn limits(self) -> [f64; 4] {
        match self {
            CatalogFn::Right => [1.0, 0.0, 0.0, 1.0],
            CatalogFn::Left => [0.0, 1.0, 1.0, 0.0],
            CatalogFn::Sld => [0.5, 0.0, 0.5, 0.0],
            CatalogFn::Kmb => [0.0, 0.0, 0.0, 0.0],
            CatalogFn::Wy => [0.25, 0.0, 0.25, 0.0],
            CatalogFn::Geo => [0.0, 0.0, 0.0, 0.0],
            CatalogFn::Harm => [0.0, 0.5, 0.0, 0.5],
            CatalogFn::Sq => [0.0, f64::INFINITY, f64::INFINITY, 0.0],
        }
    }
}

/// Element of the group generated by `f ↦ f^⊥ = x/f(x)` and
/// `f ↦ f′ = x f(1/x)`. Both are involutions and they commute, so the group
/// has four elements; `Dual` is `x ↦ 1/f(1/x)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Transform {
    Identity,
    Perp,
    Prime,
    Dual,
}

impl Transform {
    fn bits(self) -> (bool, bool) {
        match self {
            Transform::Identity => (false, false),
            Transform::Perp => (true, false),
            Transform::Prime => (false, true),
            Transform::Dual => (true, true),
        }
    }

    fn from_bits(perp: bool, prime: bool) -> Self {
        match (perp, prime) {
            (false, false) => Transform::Identity,
            (true, false) => Transform::Perp,
            (false, true) => Transform::Prime,
            (true, true) => Transform::Dual,
        }
    }

    fn index(self) -> usize {
        match self {
            Transform::Identity => 0,
            Transform::Perp => 1,
            Transform::Prime => 2,
            Transform::Dual => 3,
        }
    }
}

/// A catalog function composed with a transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MonotoneFunctionSpec {
    base: CatalogFn,
    transform: Transform,
}

impl MonotoneFunctionSpec {
    pub fn catalog(base: CatalogFn) -> Self {
        Self {
            base,
            transform: Transform::Identity,
        }
    }

    /// Operator monotone catalog entries.
    pub fn monotone_catalog() -> Vec<Self> {
        CatalogFn::MONOTONE.iter().map(|&b| Self::catalog(b)).collect()
    }

    /// Every operator monotone catalog entry together with its `f^⊥` and `f′`.
    pub fn monotone_catalog_with_transforms() -> Vec<Self> {
        Self::monotone_catalog()
            .into_iter()
            .flat_map(|f| [f, f.perp(), f.prime()])
            .collect()
    }

    pub fn base(&self) -> CatalogFn {
        self.base
    }

    pub fn transform(&self) -> Transform {
        self.transform
    }

    pub fn name(&self) -> String {
        let suffix = match self.transform {
            Transform::Identity => "",
            Transform::Perp => ".perp",
            Transform::Prime => ".prime",
            Transform::Dual => ".dual",
        };
        format!("{}{}", self.base.name(), suffix)
    }

    pub fn claimed_operator_monotone(&self) -> bool {
        self.base != CatalogFn::Sq
    }

    pub fn eval(&self, x: f64) -> f64 {
        let f = |y: f64| self.base.eval(y);
        match self.transform {
            Transform::Identity => f(x),
            Transform::Perp => x / f(x),
            Transform::Prime => x * f(1.0 / x),
            Transform::Dual => 1.0 / f(1.0 / x),
        }
    }

    /// `f̄(0) = lim_{ε↘0} f(ε)`; may be infinite for the control entry.
    pub fn f_at_0(&self) -> f64 {
        self.base.limits()[self.transform.index()]
    }

    /// `f^⊥(x) = x / f(x)`.
    pub fn perp(&self) -> Self {
        let (p, q) = self.transform.bits();
        Self {
            base: self.base,
            transform: Transform::from_bits(!p, q),
        }
    }

    /// `f′(x) = x f(1/x)`.
    pub fn prime(&self) -> Self {
        let (p, q) = self.transform.bits();
        Self {
            base: self.base,
            transform: Transform::from_bits(p, !q),
        }
    }

    /// `h(x) = x / f(x)`, the function whose operator mean of `L_ρ⁻¹` and
    /// `R_ρ⁻¹` reproduces the metric.
    pub fn h(&self) -> Self {
        self.perp()
    }
}

impl ScalarFunction for MonotoneFunctionSpec {
    fn eval(&self, x: f64) -> f64 {
        MonotoneFunctionSpec::eval(self, x)
    }

    fn eval_prime(&self, x: f64) -> f64 {
        self.prime().eval(x)
    }
}

impl fmt::Display for MonotoneFunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for MonotoneFunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split('.');
        let head = parts.next().unwrap_or_default();
        let base = CatalogFn::ALL
            .iter()
            .copied()
            .find(|b| b.name() == head)
            .ok_or_else(|| Error::UnknownFunction(s.to_string()))?;
        let mut spec = Self::catalog(base);
        for part in parts {
            spec = match part {
                "perp" | "h" => spec.perp(),
                "prime" => spec.prime(),
                "dual" => spec.perp().prime(),
                _ => return Err(Error::UnknownFunction(s.to_string())),
            };
        }
        Ok(spec)
    }
}

impl TryFrom<String> for MonotoneFunctionSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MonotoneFunctionSpec> for String {
    fn from(f: MonotoneFunctionSpec) -> String {
        f.name()
    }
}

pub fn perp_transform(f: &MonotoneFunctionSpec) -> MonotoneFunctionSpec {
    f.perp()
}

pub fn prime_transform(f: &MonotoneFunctionSpec) -> MonotoneFunctionSpec {
    f.prime()
}

pub fn h_transform(f: &MonotoneFunctionSpec) -> MonotoneFunctionSpec {
    f.h()
}

/// Numerical estimate of `lim_{ε↘0} f(ε)` from `ε = 2⁻ᵏ, k = 10..=40`.
///
/// Returns `None` when the last two samples differ by more than
/// `1e-6·max(1, |f(2⁻⁴⁰)|)`, i.e. the sequence has not settled.
pub fn extrapolate_at_zero(f: &impl ScalarFunction) -> Option<f64> {
    let samples: Vec<f64> = (10..=40).map(|k| f.eval((-(k as f64)).exp2())).collect();
    let last = *samples.last()?;
    let prev = samples[samples.len() - 2];
    if !last.is_finite() || (last - prev).abs() > 1e-6 * last.abs().max(1.0) {
        return None;
    }
    Some(last)
}

fn min_eig_over(diff: &CMat, scale: f64) -> Result<f64> {
    let lmin = eig_hermitian(diff)?.min_eigenvalue();
    Ok(if scale > 0.0 { lmin / scale } else { lmin })
}

/// Samples `A > 0`, `P ≥ 0` and checks `f(A + P) ≥ f(A)`.
pub fn check_operator_monotone(f: &MonotoneFunctionSpec, trials: usize, dim: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new(format!("functions/monotone/{}", f.name()), CHECK_TOL);
    for t in 0..trials {
        let mut rng = rng_for(seed, t as u64);
        let a = random_positive(dim, &mut rng);
        let rank = rng.random_range(1..=dim);
        let b = &a + random_psd(dim, rank, &mut rng);
        let margin = (|| {
            let fa = matrix_function(&a, f, Boundary::Strict)?;
            let fb = matrix_function(&b, f, Boundary::Strict)?;
            min_eig_over(&(&fb - fa), spectral_norm(&fb))
        })();
        report.record(
            t,
            margin,
            || serde_json::json!({"f": f.name(), "a": matrix_value(&a), "b": matrix_value(&b)}),
        );
    }
    report
}

/// Samples `A, B > 0`, `p ∈ [0, 1]` and checks
/// `f(pA + (1−p)B) ≥ p f(A) + (1−p) f(B)`.
pub fn check_operator_concave(f: &MonotoneFunctionSpec, trials: usize, dim: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new(format!("functions/concave/{}", f.name()), CHECK_TOL);
    for t in 0..trials {
        let mut rng = rng_for(seed, t as u64);
        let a = random_positive(dim, &mut rng);
        let b = random_positive(dim, &mut rng);
        let p: f64 = rng.random();
        let margin = concavity_margin(f, &a, &b, p);
        report.record(
            t,
            margin,
            || serde_json::json!({"f": f.name(), "a": matrix_value(&a), "b": matrix_value(&b), "p": p}),
        );
    }
    report
}

pub(crate) fn concavity_margin(f: &MonotoneFunctionSpec, a: &CMat, b: &CMat, p: f64) -> Result<f64> {
    let mix = a * c(p) + b * c(1.0 - p);
    let fm = matrix_function(&mix, f, Boundary::Strict)?;
    let fa = matrix_function(a, f, Boundary::Strict)?;
    let fb = matrix_function(b, f, Boundary::Strict)?;
    let scale = spectral_norm(&fm).max(spectral_norm(&fa)).max(spectral_norm(&fb));
    min_eig_over(&(&fm - fa * c(p) - fb * c(1.0 - p)), scale)
}

/// Samples `A ≥ 0` of random rank and a contraction `C`, and checks
/// `f̄(C*AC) ≥ C* f̄(A) C`.
pub fn check_transformer_inequality(
    f: &MonotoneFunctionSpec,
    trials: usize,
    dims: RangeInclusive<usize>,
    seed: u64,
) -> CheckReport {
    let mut report = CheckReport::new(format!("functions/transformer/{}", f.name()), CHECK_TOL);
    for t in 0..trials {
        let mut rng = rng_for(seed, t as u64);
        let n = rng.random_range(dims.clone());
        let rank = rng.random_range(1..=n);
        let a = random_psd(n, rank, &mut rng);
        let cm = random_contraction(n, n, &mut rng);
        let margin = transformer_margin(f, &a, &cm);
        report.record(
            t,
            margin,
            || serde_json::json!({"f": f.name(), "a": matrix_value(&a), "c": matrix_value(&cm)}),
        );
    }
    report
}

pub(crate) fn transformer_margin(f: &MonotoneFunctionSpec, a: &CMat, cm: &CMat) -> Result<f64> {
    if !f.f_at_0().is_finite() {
        return Err(Error::DomainViolation {
            function: f.name(),
            eigenvalue: 0.0,
        });
    }
    let inner = cm.adjoint() * a * cm;
    let lhs = matrix_function(&inner, f, Boundary::Extend)?;
    let fa = matrix_function_of(&eig_hermitian(a)?, f, Boundary::Extend)?;
    let rhs = cm.adjoint() * &fa * cm;
    let scale = spectral_norm(&lhs).max(spectral_norm(&fa));
    min_eig_over(&(lhs - rhs), scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs};
    use crate::sampling::haar_unitary;

    fn spec(name: &str) -> MonotoneFunctionSpec {
        name.parse().unwrap()
    }

    fn grid() -> impl Iterator<Item = f64> {
        (-20..=20)
            .map(|k| (k as f64).exp2())
            .chain([0.3, 0.999_999_999, 1.0, 1.000_000_01, 7.5])
    }

    fn pointwise_eq(a: &MonotoneFunctionSpec, b: &MonotoneFunctionSpec, tol: f64) {
        for x in grid() {
            let (u, v) = (a.eval(x), b.eval(x));
            assert!((u - v).abs() <= tol * u.abs().max(1.0), "{a} vs {b} at {x}: {u} {v}");
        }
    }

    #[test]
    fn catalog_is_positive_on_grid() {
        for base in CatalogFn::ALL {
            let f = MonotoneFunctionSpec::catalog(base);
            for x in grid() {
                assert!(f.eval(x) > 0.0, "{f} at {x}");
            }
        }
    }

    #[test]
    fn perp_fixtures() {
        pointwise_eq(&spec("sld").perp(), &spec("harm"), 1e-14);
        pointwise_eq(&spec("left").perp(), &spec("right"), 1e-15);
        pointwise_eq(&spec("geo").perp(), &spec("geo"), 1e-15);
        assert_eq!(h_transform(&spec("sld")), perp_transform(&spec("sld")));
    }

    #[test]
    fn prime_fixtures() {
        pointwise_eq(&spec("right").prime(), &spec("left"), 1e-15);
        pointwise_eq(&spec("sld").prime(), &spec("sld"), 1e-14);
        pointwise_eq(&spec("kmb").prime(), &spec("kmb"), 1e-12);
    }

    #[test]
    fn transform_identities() {
        for base in CatalogFn::ALL {
            let f = MonotoneFunctionSpec::catalog(base);
            pointwise_eq(&f.perp().perp(), &f, 1e-12);
            pointwise_eq(&f.prime().prime(), &f, 1e-12);
            for x in grid() {
                let lhs = f.prime().eval(x);
                let rhs = 1.0 / f.perp().eval(1.0 / x);
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "{f} at {x}");
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for f in MonotoneFunctionSpec::monotone_catalog_with_transforms() {
            assert_eq!(f.name().parse::<MonotoneFunctionSpec>().unwrap(), f);
        }
        assert_eq!(spec("kmb.perp.prime"), spec("kmb.dual"));
        assert!("nope".parse::<MonotoneFunctionSpec>().is_err());
        assert!("sld.bogus".parse::<MonotoneFunctionSpec>().is_err());
        assert!(!spec("sq").claimed_operator_monotone());
    }

    #[test]
    fn kmb_is_smooth_at_one() {
        let f = spec("kmb");
        assert_eq!(f.eval(1.0), 1.0);
        let lo = f.eval(1.0 - 1e-8 - 1e-12);
        let hi = f.eval(1.0 - 1e-8 + 1e-12);
        assert!((lo - hi).abs() < 1e-12);
        assert!((f.eval(1.0 + 2e-9) - (1.0 + 1e-9)).abs() < 1e-15);
    }

    #[test]
    fn boundary_values_match_extrapolation() {
        let mut checked = 0;
        for base in CatalogFn::ALL {
            let f0 = MonotoneFunctionSpec::catalog(base);
            for f in [f0, f0.perp(), f0.prime(), f0.perp().prime()] {
                match extrapolate_at_zero(&f) {
                    Some(v) => {
                        assert!((v - f.f_at_0()).abs() <= 1e-6, "{f}: {v} vs {}", f.f_at_0());
                        checked += 1;
                    }
                    // logarithmic approach to zero, or divergence
                    None => assert!(
                        f.f_at_0() == 0.0 && base == CatalogFn::Kmb || f.f_at_0().is_infinite(),
                        "{f}"
                    ),
                }
            }
        }
        assert!(checked >= 28);
    }

    #[test]
    fn monotone_checks_pass_for_sld() {
        let r = check_operator_monotone(&spec("sld"), 200, 4, 1);
        assert!(r.all_passed(), "{r:?}");
        assert_eq!(r.trials, 200);
    }

    #[test]
    fn square_is_caught() {
        let r = check_operator_monotone(&spec("sq"), 200, 2, 2);
        assert!(r.failed > 0);
        let r = check_operator_concave(&spec("sq"), 200, 2, 2);
        assert!(r.failed > 0);
    }

    #[test]
    fn scalar_case_always_passes() {
        for f in MonotoneFunctionSpec::monotone_catalog() {
            assert!(check_operator_monotone(&f, 50, 1, 3).all_passed());
        }
        assert!(check_operator_monotone(&spec("sq"), 50, 1, 3).all_passed());
    }

    #[test]
    fn concavity_degenerate_and_random() {
        let mut rng = rng_for(4, 0);
        let a = random_positive(3, &mut rng);
        let m = concavity_margin(&spec("geo"), &a, &a, 0.37).unwrap();
        assert!(m.abs() <= 1e-10);
        assert!(check_operator_concave(&spec("sld"), 200, 3, 5).all_passed());
    }

    #[test]
    fn transformer_fixtures() {
        let mut rng = rng_for(6, 0);
        let a = random_psd(3, 2, &mut rng);
        let u = haar_unitary(3, &mut rng);
        for f in MonotoneFunctionSpec::monotone_catalog() {
            let lhs = matrix_function(&(u.adjoint() * &a * &u), &f, Boundary::Extend).unwrap();
            let rhs = u.adjoint() * matrix_function(&a, &f, Boundary::Extend).unwrap() * &u;
            assert!(max_abs(&(lhs - rhs)) <= 1e-9, "{f}");
        }
        let zero = CMat::zeros(3, 3);
        for f in MonotoneFunctionSpec::monotone_catalog() {
            let lhs = matrix_function(&zero, &f, Boundary::Extend).unwrap();
            assert!(max_abs(&(lhs - identity(3) * c(f.f_at_0()))) == 0.0);
            assert!(transformer_margin(&f, &a, &zero).unwrap() >= 0.0);
        }
        assert!(check_transformer_inequality(&spec("sld"), 200, 2..=5, 7).all_passed());
    }
}
