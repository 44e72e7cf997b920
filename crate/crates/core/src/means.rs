//! Operator means `A m_f B = A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}` and their
//! ε-regularized extension to positive semidefinite operands.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::MonotoneFunctionSpec;
use crate::io::matrix_value;
use crate::linalg::{
    c, eig_hermitian, hermitian_part, identity, is_psd, is_strictly_positive, max_abs, spectral_norm, CMat,
    EIG_FLOOR_REL, PSD_TOL,
};
use crate::report::CheckReport;
use crate::sampling::{complex_gaussian, haar_unitary, random_positive, random_psd, rng_for};
use crate::Complex64;

/// `ε = 10⁻², 10⁻³, …, 10⁻⁸`, relative to the operand scale.
pub const DEFAULT_EPS_SCHEDULE: [f64; 7] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];
/// Final Cauchy gap, relative to the operand scale, below which the limit is
/// considered converged.
pub const CAUCHY_REL: f64 = 1e-6;
pub const TRANSPOSITION_TOL: f64 = 1e-9;
pub const JOINT_TOL: f64 = 1e-8;
pub const TRANSFORMER_TOL: f64 = 1e-7;

fn check_pair(a: &CMat, b: &CMat) -> Result<()> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "mean of {}x{} and {}x{} operands",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

/// The defining formula; `A` must be strictly positive.
///
/// Eigenvalues of `A^{-1/2} B A^{-1/2}` that round to zero or below are
/// evaluated as `f̄(0)`.
pub fn mean_strict(a: &CMat, b: &CMat, f: &MonotoneFunctionSpec) -> Result<CMat> {
    check_pair(a, b)?;
    let sa = eig_hermitian(a)?;
    let floor = EIG_FLOOR_REL * sa.norm();
    if sa.norm() == 0.0 || sa.min_eigenvalue() <= floor {
        return Err(Error::NotStrictlyPositive {
            min_eigenvalue: sa.min_eigenvalue(),
            floor,
        });
    }
    let half = sa.apply(f64::sqrt);
    let inv_half = sa.apply(|p| 1.0 / p.sqrt());
    let z = hermitian_part(&(&inv_half * b * &inv_half));
    let sz = eig_hermitian(&z)?;
    let f0 = f.f_at_0();
    let fz = sz.apply(|x| if x > 0.0 { f.eval(x) } else { f0 });
    Ok(hermitian_part(&(&half * fz * &half)))
}

/// `α f(β/α)` with `f` only evaluated on `[0, 1]`.
fn balanced_scalar(alpha: f64, beta: f64, f: &MonotoneFunctionSpec, fp: &MonotoneFunctionSpec) -> f64 {
    if alpha >= beta {
        let r = beta / alpha;
        alpha * if r > 0.0 { f.eval(r) } else { f.f_at_0() }
    } else {
        let r = alpha / beta;
        beta * if r > 0.0 { fp.eval(r) } else { fp.f_at_0() }
    }
}

/// The same mean through the congruence `S = (A + B)^{-1/2}`: the images
/// `A′ = SAS*` and `B′ = SBS*` sum to `I`, hence commute, and their mean is
/// the scalar mean `α f(β/α)` on the common eigenbasis. Then
/// `A m_f B = S⁻¹ (A′ m_f B′) S⁻¹`. Requires only `A + B > 0`, and stays
/// accurate when `A` and `B` are individually ill-conditioned.
///
/// Small `α` are read off `A′` and small `β` off `B′`, never as `1 − β` or
/// `1 − α`; the two eigenbases are joined at the widest spectral gap of `A′`
/// inside `[1/4, 3/4]` so that no eigenvalue cluster is split.
pub fn mean_balanced(a: &CMat, b: &CMat, f: &MonotoneFunctionSpec) -> Result<CMat> {
    check_pair(a, b)?;
    let n = a.nrows();
    let sum = eig_hermitian(&(a + b))?;
    let floor = EIG_FLOOR_REL * sum.norm();
    if sum.norm() == 0.0 || sum.min_eigenvalue() <= floor {
        return Err(Error::NotStrictlyPositive {
            min_eigenvalue: sum.min_eigenvalue(),
            floor,
        });
    }
    let s = sum.apply(|p| 1.0 / p.sqrt());
    let s_inv = sum.apply(f64::sqrt);
    let ea = eig_hermitian(&hermitian_part(&(&s * a * &s)))?;
    let eb = eig_hermitian(&hermitian_part(&(&s * b * &s)))?;
    let alpha = |i: usize| ea.eigenvalues[i].clamp(0.0, 1.0);
    let beta = |j: usize| eb.eigenvalues[j].clamp(0.0, 1.0);

    // split: eigenvalues α_0..α_{k-1} of A′ and β_0..β_{n-k-1} of B′
    let mut best = (f64::NEG_INFINITY, n);
    for k in 0..=n {
        let below_ok = k == 0 || alpha(k - 1) <= 0.75;
        let above_ok = k == n || alpha(k) >= 0.25;
        if !(below_ok && above_ok) {
            continue;
        }
        let lo = if k == 0 { f64::NEG_INFINITY } else { alpha(k - 1) };
        let hi = if k == n { f64::INFINITY } else { alpha(k) };
        let gap = hi - lo;
        if gap > best.0 {
            best = (gap, k);
        }
    }
    let k = best.1;

    let fp = f.prime();
    let mut inner = CMat::zeros(n, n);
    let mut add = |v: nalgebra::DVectorView<'_, Complex64>, w: f64| {
        inner.gerc(c(w), &v, &v, c(1.0));
    };
    for i in 0..k {
        let a_i = alpha(i);
        add(ea.eigenvectors.column(i), balanced_scalar(a_i, 1.0 - a_i, f, &fp));
    }
    for j in 0..n - k {
        let b_j = beta(j);
        add(eb.eigenvectors.column(j), balanced_scalar(1.0 - b_j, b_j, f, &fp));
    }
    Ok(hermitian_part(&(&s_inv * hermitian_part(&inner) * &s_inv)))
}

/// Last iterate of the ε-sequence together with its convergence diagnostics.
#[derive(Clone, Debug)]
pub struct RegularizedMean {
    pub value: CMat,
    pub eps: f64,
    /// `‖M_{ε_{k−1}} − M_{ε_k}‖₂` at the last step.
    pub cauchy_gap: f64,
    pub scale: f64,
    pub converged: bool,
    /// Whether successive iterates decreased in the PSD order.
    pub monotone: bool,
}

/// `lim_{ε↘0} (A + εI) m_f (B + εI)` evaluated along `schedule`, each
/// iterate through [`mean_balanced`].
///
/// The whole schedule is always evaluated. `converged` records whether the
/// final gap is below `CAUCHY_REL·scale`; slowly converging limits (the
/// geometric mean of orthogonal projections approaches zero like `√ε`) are
/// returned regardless. `NonConvergence` is raised only when the final gap
/// exceeds the first one and the iterates stopped decreasing.
pub fn regularized_mean_with(
    a: &CMat,
    b: &CMat,
    f: &MonotoneFunctionSpec,
    schedule: &[f64],
) -> Result<RegularizedMean> {
    check_pair(a, b)?;
    let n = a.nrows();
    let scale = spectral_norm(a).max(spectral_norm(b));
    if max_abs(a) == 0.0 && max_abs(b) == 0.0 {
        return Ok(RegularizedMean {
            value: CMat::zeros(n, n),
            eps: 0.0,
            cauchy_gap: 0.0,
            scale,
            converged: true,
            monotone: true,
        });
    }
    let mut prev: Option<CMat> = None;
    let mut first_gap: Option<f64> = None;
    let mut gap = f64::INFINITY;
    let mut monotone = true;
    let mut last_eps = 0.0;
    for &eps in schedule {
        let shift = identity(n) * c(eps);
        let m = mean_balanced(&(a + &shift), &(b + &shift), f)?;
        if let Some(p) = &prev {
            let diff = p - &m;
            gap = spectral_norm(&diff);
            first_gap.get_or_insert(gap);
            if eig_hermitian(&diff)?.min_eigenvalue() < -1e-8 * scale.max(spectral_norm(&m)) {
                monotone = false;
            }
        }
        prev = Some(m);
        last_eps = eps;
    }
    let value = prev.ok_or_else(|| Error::NonConvergence("empty ε schedule".into()))?;
    // A PSD-decreasing sequence bounded below converges, however slowly; a
    // growing gap only signals trouble when that ordering was lost.
    if value.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonConvergence("non-finite iterate".into()));
    }
    if let Some(first) = first_gap {
        if !monotone && gap > first + 1e-12 * scale {
            return Err(Error::NonConvergence(format!(
                "final Cauchy gap {gap:.3e} exceeds the first gap {first:.3e}"
            )));
        }
    }
    Ok(RegularizedMean {
        value,
        eps: last_eps,
        cauchy_gap: gap,
        scale,
        converged: gap <= CAUCHY_REL * scale,
        monotone,
    })
}

/// [`DEFAULT_EPS_SCHEDULE`] multiplied by `scale`.
pub fn relative_schedule(scale: f64) -> Vec<f64> {
    DEFAULT_EPS_SCHEDULE.iter().map(|e| e * scale).collect()
}

/// Regularized mean with the shifts `ε·max(‖A‖₂, ‖B‖₂)`. Shifting relative to
/// the operands keeps the smallest shift well above the rounding noise in
/// their null spaces.
pub fn regularized_mean(a: &CMat, b: &CMat, f: &MonotoneFunctionSpec) -> Result<RegularizedMean> {
    regularized_mean_with(a, b, f, &relative_schedule(pair_scale(a, b)))
}

fn require_psd(m: &CMat) -> Result<()> {
    if !is_psd(m, PSD_TOL)? {
        return Err(Error::NotStrictlyPositive {
            min_eigenvalue: eig_hermitian(m)?.min_eigenvalue(),
            floor: -PSD_TOL,
        });
    }
    Ok(())
}

/// `A m_f B` for `A, B ≥ 0`: the formula when both are strictly positive,
/// otherwise the regularized limit.
pub fn mean(a: &CMat, b: &CMat, f: &MonotoneFunctionSpec) -> Result<CMat> {
    check_pair(a, b)?;
    require_psd(a)?;
    require_psd(b)?;
    if is_strictly_positive(a, EIG_FLOOR_REL)? && is_strictly_positive(b, EIG_FLOOR_REL)? {
        mean_strict(a, b, f)
    } else {
        Ok(regularized_mean(a, b, f)?.value)
    }
}

fn is_regular(m: &CMat) -> Result<bool> {
    is_strictly_positive(m, EIG_FLOOR_REL)
}

/// Positive operand for trial `t`; every third trial is rank deficient.
fn sample_operand(n: usize, t: usize, rng: &mut impl Rng) -> CMat {
    if t % 3 == 2 && n > 1 {
        let rank = rng.random_range(0..n);
        if rank == 0 {
            CMat::zeros(n, n)
        } else {
            random_psd(n, rank, rng)
        }
    } else {
        random_positive(n, rng)
    }
}

fn pair_scale(a: &CMat, b: &CMat) -> f64 {
    let s = spectral_norm(a).max(spectral_norm(b));
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// `A m_f B = B m_{f′} A` on strictly positive pairs.
pub fn check_transposition(f: &MonotoneFunctionSpec, trials: usize, dim: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new(format!("means/transposition/{}", f.name()), TRANSPOSITION_TOL);
    for t in 0..trials {
        let mut rng = rng_for(seed, t as u64);
        let a = random_positive(dim, &mut rng);
        let b = random_positive(dim, &mut rng);
        let margin = transposition_margin(f, &a, &b);
        report.record(
            t,
            margin,
            || serde_json::json!({"f": f.name(), "a": matrix_value(&a), "b": matrix_value(&b)}),
        );
    }
    report
}

pub(crate) fn transposition_margin(f: &MonotoneFunctionSpec, a: &CMat, b: &CMat) -> Result<f64> {
    let lhs = mean(a, b, f)?;
    let rhs = mean(b, a, &f.prime())?;
    let scale = pair_scale(a, b).max(pair_scale(&lhs, &rhs));
    Ok(-spectral_norm(&(lhs - rhs)) / scale)
}

/// `A₁ ≤ A₂, B₁ ≤ B₂ ⟹ A₁ m_f B₁ ≤ A₂ m_f B₂`. Every third trial draws
/// rank-deficient `A₁, B₁`; both sides are then regularized along the same
/// schedule.
pub fn check_joint_monotonicity(f: &MonotoneFunctionSpec, trials: usize, dim: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new(format!("means/joint/{}", f.name()), JOINT_TOL);
    for t in 0..trials {
        let mut rng = rng_for(seed, t as u64);
        let a1 = sample_operand(dim, t, &mut rng);
        let b1 = sample_operand(dim, t, &mut rng);
        let ra = rng.random_range(1..=dim);
        let rb = rng.random_range(0..=dim);
        let a2 = &a1 + random_psd(dim, ra, &mut rng);
        let b2 = if rb == 0 {
            b1.clone()
        } else {
            &b1 + random_psd(dim, rb, &mut rng)
        };
        let margin = joint_margin(f, &a1, &b1, &a2, &b2);
        report.record(t, margin, || {
            serde_json::json!({
                "f": f.name(),
                "a1": matrix_value(&a1), "b1": matrix_value(&b1),
                "a2": matrix_value(&a2), "b2": matrix_value(&b2),
            })
        });
    }
    report
}

pub(crate) fn joint_margin(f: &MonotoneFunctionSpec, a1: &CMat, b1: &CMat, a2: &CMat, b2: &CMat) -> Result<f64> {
    let regular = is_regular(a1)? && is_regular(b1)? && is_regular(a2)? && is_regular(b2)?;
    let (lo, hi) = if regular {
        (mean_strict(a1, b1, f)?, mean_strict(a2, b2, f)?)
    } else {
        let schedule = relative_schedule(pair_scale(a2, b2));
        (
            regularized_mean_with(a1, b1, f, &schedule)?.value,
            regularized_mean_with(a2, b2, f, &schedule)?.value,
        )
    };
    let scale = pair_scale(a2, b2).max(pair_scale(&lo, &hi));
    Ok(eig_hermitian(&(hi - lo))?.min_eigenvalue() / scale)
}

/// `C (A m_f B) C* ≤ (CAC*) m_f (CBC*)` for rectangular `C: Cⁿ → Cᵐ` of
/// unrestricted norm. Every third trial draws rank-deficient `A, B`.
pub fn check_mean_transformer(f: &MonotoneFunctionSpec, trials: usize, n: usize, m: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new(format!("means/transformer/{}", f.name()), TRANSFORMER_TOL);
    for t in 0..trials {
        let mut rng = rng_for(seed, t as u64);
        let a = sample_operand(n, t, &mut rng);
        let b = sample_operand(n, t, &mut rng);
        let cm = if t % 7 == 6 && m == n {
            haar_unitary(n, &mut rng)
        } else {
            let s: f64 = rng.random_range(0.1..3.0);
            complex_gaussian(m, n, &mut rng) * c(s)
        };
        let margin = mean_transformer_margin(f, &a, &b, &cm);
        report.record(
            t,
            margin,
            || serde_json::json!({"f": f.name(), "a": matrix_value(&a), "b": matrix_value(&b), "c": matrix_value(&cm)}),
        );
    }
    report
}

/// Margin of `(CAC*) m_f (CBC*) − C (A m_f B) C*`.
///
/// When any operand is singular the left side uses the shifts `ε` and the
/// right side `ε/‖C‖₂²`, so that `C(A + ε′I)C* ≤ CAC* + εI` and the inequality
/// holds exactly at every step, not only in the limit.
pub fn mean_transformer_margin(f: &MonotoneFunctionSpec, a: &CMat, b: &CMat, cm: &CMat) -> Result<f64> {
    check_pair(a, b)?;
    if cm.ncols() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "C has {} columns, operands are {}x{}",
            cm.ncols(),
            a.nrows(),
            a.nrows()
        )));
    }
    let ca = hermitian_part(&(cm * a * cm.adjoint()));
    let cb = hermitian_part(&(cm * b * cm.adjoint()));
    let regular = is_regular(a)? && is_regular(b)? && is_regular(&ca)? && is_regular(&cb)?;
    let (lhs, inner) = if regular {
        (mean_strict(&ca, &cb, f)?, mean_strict(a, b, f)?)
    } else {
        let norm_sq = spectral_norm(cm).powi(2);
        let shrink = if norm_sq > 0.0 { norm_sq } else { 1.0 };
        let outer_schedule = relative_schedule(pair_scale(&ca, &cb).max(norm_sq * pair_scale(a, b)));
        let inner_schedule: Vec<f64> = outer_schedule.iter().map(|e| e / shrink).collect();
        (
            regularized_mean_with(&ca, &cb, f, &outer_schedule)?.value,
            regularized_mean_with(a, b, f, &inner_schedule)?.value,
        )
    };
    let rhs = cm * inner * cm.adjoint();
    let scale = pair_scale(&lhs, &rhs).max(spectral_norm(cm).powi(2) * pair_scale(a, b));
    Ok(eig_hermitian(&hermitian_part(&(lhs - rhs)))?.min_eigenvalue() / scale)
}

/// Scalar mean `a f(b/a)` for `a > 0`.
pub fn scalar_mean(a: f64, b: f64, f: &MonotoneFunctionSpec) -> f64 {
    a * f.eval(b / a)
}

/// Shape of a regularized run, for reports and dumps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularizationSummary {
    pub eps: f64,
    pub cauchy_gap: f64,
    pub converged: bool,
    pub monotone: bool,
}

impl From<&RegularizedMean> for RegularizationSummary {
    fn from(r: &RegularizedMean) -> Self {
        Self {
            eps: r.eps,
            cauchy_gap: r.cauchy_gap,
            converged: r.converged,
            monotone: r.monotone,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::CatalogFn;
    use crate::linalg::diag;

    fn spec(name: &str) -> MonotoneFunctionSpec {
        name.parse().unwrap()
    }

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        a.shape() == b.shape() && max_abs(&(a - b)) <= tol
    }

    #[test]
    fn fixtures() {
        let g = mean(&diag(&[4.0]), &diag(&[9.0]), &spec("geo")).unwrap();
        assert!((g[(0, 0)].re - 6.0).abs() < 1e-12);

        let h = mean(&diag(&[1.0, 2.0]), &diag(&[3.0, 6.0]), &spec("harm")).unwrap();
        assert!(close(&h, &diag(&[1.5, 3.0]), 1e-12));

        let mut rng = rng_for(1, 0);
        for _ in 0..20 {
            let a = random_positive(4, &mut rng);
            let b = random_positive(4, &mut rng);
            let s = mean(&a, &b, &spec("sld")).unwrap();
            assert!(close(&s, &((&a + &b) * c(0.5)), 1e-10 * pair_scale(&a, &b)));
            assert!(close(
                &mean(&a, &b, &spec("right")).unwrap(),
                &a,
                1e-10 * spectral_norm(&a)
            ));
            assert!(close(
                &mean(&b, &a, &spec("left")).unwrap(),
                &a,
                1e-10 * spectral_norm(&a)
            ));
        }
        assert!(mean(&diag(&[1.0]), &diag(&[1.0, 2.0]), &spec("geo")).is_err());
        assert!(mean(&diag(&[-1.0, 1.0]), &diag(&[1.0, 2.0]), &spec("geo")).is_err());
    }

    #[test]
    fn regularized_fixtures() {
        let z = regularized_mean(&CMat::zeros(2, 2), &CMat::zeros(2, 2), &spec("geo")).unwrap();
        assert_eq!(z.value, CMat::zeros(2, 2));

        // orthogonal supports: each eigenvalue pair gives √((1+ε)ε) → 0
        let r = regularized_mean(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]), &spec("geo")).unwrap();
        let eps = *DEFAULT_EPS_SCHEDULE.last().unwrap();
        let oracle = ((1.0 + eps) * eps).sqrt();
        assert!(close(&r.value, &diag(&[oracle, oracle]), 1e-12));
        assert!(max_abs(&r.value) < 1.1e-4);
        assert!(r.monotone);
        assert!(!r.converged);

        let mut rng = rng_for(2, 0);
        for name in ["geo", "kmb", "wy", "harm"] {
            let a = random_positive(3, &mut rng);
            let b = random_positive(3, &mut rng);
            let reg = regularized_mean(&a, &b, &spec(name)).unwrap();
            let direct = mean_strict(&a, &b, &spec(name)).unwrap();
            // the last shift is 10⁻⁸·scale and moves the mean by about as much
            assert!(close(&reg.value, &direct, 3e-8 * pair_scale(&a, &b)));
            assert!(reg.converged && reg.monotone);
        }
    }

    #[test]
    fn singular_operands_commuting_oracle() {
        // A = diag(2, 0), B = diag(3, 5): the ε-iterate is the scalar mean per
        // entry, with shifts relative to ‖B‖ = 5
        let a = diag(&[2.0, 0.0]);
        let b = diag(&[3.0, 5.0]);
        let f = spec("harm");
        let r = regularized_mean(&a, &b, &f).unwrap();
        let eps = 5e-8;
        let first = scalar_mean(2.0 + eps, 3.0 + eps, &f);
        let second = scalar_mean(eps, 5.0 + eps, &f);
        assert!(close(&r.value, &diag(&[first, second]), 1e-9));
    }

    #[test]
    fn homogeneity_and_diagonal() {
        let mut rng = rng_for(3, 0);
        for base in CatalogFn::MONOTONE {
            let f = MonotoneFunctionSpec::catalog(base);
            let a = random_positive(3, &mut rng);
            let b = random_positive(3, &mut rng);
            let m = mean(&a, &b, &f).unwrap();
            let tol = 1e-10 * spectral_norm(&m).max(1.0);
            for k in [0.5, 2.0] {
                let scaled = mean(&(&a * c(k)), &(&b * c(k)), &f).unwrap();
                assert!(close(&scaled, &(&m * c(k)), tol * k));
            }
            let aa = mean(&a, &a, &f).unwrap();
            assert!(close(&aa, &(&a * c(f.eval(1.0))), 1e-10 * spectral_norm(&a)));
        }
    }

    #[test]
    fn balanced_form_matches_definition() {
        let mut rng = rng_for(11, 0);
        for f in MonotoneFunctionSpec::monotone_catalog_with_transforms() {
            for n in 1..=5 {
                let a = random_positive(n, &mut rng);
                let b = random_positive(n, &mut rng);
                let d = mean_strict(&a, &b, &f).unwrap();
                let g = mean_balanced(&a, &b, &f).unwrap();
                assert!(close(&d, &g, 1e-10 * pair_scale(&a, &b)), "{f}");
            }
        }
        let z = mean_balanced(&diag(&[2.0, 0.0]), &diag(&[0.0, 3.0]), &spec("sld")).unwrap();
        assert!(close(&z, &diag(&[1.0, 1.5]), 1e-15));
        assert!(mean_balanced(&diag(&[1.0, 0.0]), &diag(&[1.0, 0.0]), &spec("sld")).is_err());
    }

    #[test]
    fn commuting_reduction() {
        let mut rng = rng_for(4, 0);
        for base in CatalogFn::MONOTONE {
            let f = MonotoneFunctionSpec::catalog(base);
            let u = haar_unitary(3, &mut rng);
            let pa = [0.3, 1.2, 2.5];
            let pb = [1.7, 0.4, 0.9];
            let a = &u * diag(&pa) * u.adjoint();
            let b = &u * diag(&pb) * u.adjoint();
            let want: Vec<f64> = pa.iter().zip(&pb).map(|(&x, &y)| scalar_mean(x, y, &f)).collect();
            let got = mean(&a, &b, &f).unwrap();
            assert!(close(&got, &(&u * diag(&want) * u.adjoint()), 1e-10));
        }
    }

    #[test]
    fn check_fixtures() {
        for name in ["sld", "right", "kmb"] {
            assert!(check_transposition(&spec(name), 50, 4, 5).all_passed(), "{name}");
        }
        let a = random_positive(3, &mut rng_for(6, 0));
        let b = random_positive(3, &mut rng_for(6, 1));
        assert!(joint_margin(&spec("wy"), &a, &b, &a, &b).unwrap().abs() < 1e-12);
        assert!(joint_margin(&spec("geo"), &diag(&[1.0]), &diag(&[2.0]), &diag(&[1.5]), &diag(&[4.0])).unwrap() > 0.0);
        assert!(check_joint_monotonicity(&spec("wy"), 60, 4, 7).all_passed());

        let u = haar_unitary(3, &mut rng_for(8, 0));
        assert!(mean_transformer_margin(&spec("geo"), &a, &b, &u).unwrap().abs() < 1e-8);
        let zero = CMat::zeros(2, 3);
        assert!(mean_transformer_margin(&spec("geo"), &a, &b, &zero).unwrap().abs() < 1e-12);
        assert!(check_mean_transformer(&spec("geo"), 60, 4, 2, 9).all_passed());
        assert!(check_mean_transformer(&spec("kmb"), 30, 2, 4, 9).all_passed());
    }

    #[test]
    fn rectangular_matches_square_embedding() {
        // C: C³ → C², embedded as a 3×3 map with a zero row
        let mut rng = rng_for(10, 0);
        let f = spec("kmb");
        let a = random_positive(3, &mut rng);
        let b = random_positive(3, &mut rng);
        let cm = complex_gaussian(2, 3, &mut rng);
        let mut square = CMat::zeros(3, 3);
        square.view_mut((0, 0), (2, 3)).copy_from(&cm);
        let small = mean(&(&cm * &a * cm.adjoint()), &(&cm * &b * cm.adjoint()), &f).unwrap();
        let big = mean(
            &(&square * &a * square.adjoint()),
            &(&square * &b * square.adjoint()),
            &f,
        )
        .unwrap();
        assert!(close(
            &big.view((0, 0), (2, 2)).into_owned(),
            &small,
            1e-6 * spectral_norm(&small)
        ));
        assert!(max_abs(&big.view((2, 0), (1, 3)).into_owned()) < 1e-6 * spectral_norm(&small));
    }
}
