//! Seeded randomized suites for the metric's monotonicity, additivity,
//! convexity, scaling and Schur-complement properties, the CPTP
//! non-additivity demonstration, and the function and mean checks.
//!
//! Every trial draws from its own stream `rng_for(derive_seed(seed, label), t)`,
//! so a report depends only on the [`TrialConfig`] and any trial can be
//! regenerated in isolation. Failing trials are dumped as
//! `{f, kernel_perturbation, trace_mode, tol, instance}` and can be
//! recomputed with [`replay`].

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::{random_cptni_with, KrausChannel};
use crate::error::{Error, Result};
use crate::functions::{
    check_operator_concave, check_operator_monotone, check_transformer_inequality, concavity_margin,
    transformer_margin, MonotoneFunctionSpec,
};
use crate::io::{channel_serde, matrix_from_value, matrix_serde};
use crate::linalg::{c, diag, direct_sum, eig_hermitian, hermitian_part, matrix_unit, spectral_norm, trace, CMat};
use crate::means::{
    check_joint_monotonicity, check_mean_transformer, check_transposition, joint_margin, mean_transformer_margin,
    transposition_margin,
};
use crate::metrics::{CptniMetric, CptpMetricSpec, DensityLikeOperator, TraceMode};
use crate::report::{FailureDump, SuiteReport};
use crate::sampling::{
    complex_gaussian, derive_seed, random_density, random_hermitian, random_unit_trace_psd, rng_for,
};

pub const SUITE_NAMES: [&str; 9] = [
    "monotonicity",
    "additivity",
    "convexity",
    "rho-decrease",
    "scaling",
    "schur",
    "cptp-demo",
    "functions",
    "means",
];

/// Smallest eigenvalue of a sampled base point, relative to its trace,
/// below which the trial is redrawn.
pub const SAMPLE_EIG_FLOOR: f64 = 1e-9;
const MAX_RESAMPLES: usize = 256;
/// Trials of the `x²` control, which must produce a monotonicity violation.
pub const SQ_CONTROL_TRIALS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub trials: usize,
    pub dim_min: usize,
    pub dim_max: usize,
    pub f_names: Vec<MonotoneFunctionSpec>,
    pub seed: u64,
    /// Relative slack of the inequality suites.
    pub tol: f64,
    /// Relative tolerance of the equality suites (additivity, scaling, demo).
    pub equality_tol: f64,
    pub trace_mode: TraceMode,
    /// `b` of the constant CPTP metric in the non-additivity demonstration.
    pub demo_b: f64,
    #[doc(hidden)]
    #[serde(default)]
    pub kernel_perturbation: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            dim_min: 2,
            dim_max: 5,
            f_names: MonotoneFunctionSpec::monotone_catalog(),
            seed: 42,
            tol: 1e-8,
            equality_tol: 1e-10,
            trace_mode: TraceMode::UnitBounded,
            demo_b: 1.0,
            kernel_perturbation: 0.0,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.tol > 0.0) || !(self.equality_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.dim_min < 2 || self.dim_min > self.dim_max {
            return bad(format!("bad dimension range {}..={}", self.dim_min, self.dim_max));
        }
        if self.f_names.is_empty() {
            return bad("no functions selected".into());
        }
        if let Some(f) = self.f_names.iter().find(|f| !f.claimed_operator_monotone()) {
            return bad(format!("`{f}` is not operator monotone"));
        }
        if !self.demo_b.is_finite() || self.demo_b < 0.0 {
            return bad(format!("demo b = {} must be finite and non-negative", self.demo_b));
        }
        if !self.kernel_perturbation.is_finite() {
            return bad("kernel perturbation must be finite".into());
        }
        Ok(())
    }

    pub fn dims(&self) -> Vec<usize> {
        (self.dim_min..=self.dim_max).collect()
    }

    fn metric(&self, f: &MonotoneFunctionSpec) -> CptniMetric {
        CptniMetric::new(*f).with_kernel_perturbation(self.kernel_perturbation)
    }

    fn rng(&self, label: &str, t: usize) -> crate::sampling::TrialRng {
        rng_for(derive_seed(self.seed, label), t as u64)
    }

    fn dim(&self, rng: &mut impl Rng) -> usize {
        rng.random_range(self.dim_min..=self.dim_max)
    }
}

/// Dumped failing trial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceDump<T> {
    pub f: MonotoneFunctionSpec,
    pub kernel_perturbation: f64,
    pub trace_mode: TraceMode,
    pub tol: f64,
    pub instance: T,
}

/// A sampled trial that can be re-evaluated against a metric.
pub trait Instance: Serialize + DeserializeOwned {
    /// Normalized slack; the trial passes while `margin >= -tol`.
    fn margin(&self, metric: &CptniMetric, mode: TraceMode) -> Result<f64>;
}

fn base_point(m: &CMat, mode: TraceMode) -> Result<DensityLikeOperator> {
    DensityLikeOperator::new(m, mode)
}

fn rel(x: f64) -> f64 {
    x.abs().max(f64::MIN_POSITIVE)
}

/// Trace of a fresh base point: `U[0.05, 1]` when bounded, log-uniform on
/// `[0.05, 20]` otherwise.
fn sample_trace(mode: TraceMode, rng: &mut impl Rng) -> f64 {
    match mode {
        TraceMode::UnitBounded => rng.random_range(0.05..=1.0),
        TraceMode::Unconstrained => rng.random_range(0.05f64.ln()..=20f64.ln()).exp(),
    }
}

/// Room left for an additive PSD term on top of trace `t`.
fn headroom(t: f64, mode: TraceMode) -> f64 {
    match mode {
        TraceMode::UnitBounded => (1.0 - t).max(0.0),
        TraceMode::Unconstrained => 2.0 * t.max(1.0),
    }
}

fn well_conditioned(m: &CMat) -> Result<bool> {
    let s = eig_hermitian(m)?;
    Ok(s.min_eigenvalue() > SAMPLE_EIG_FLOOR * trace(m).re)
}

fn sample_rho(n: usize, mode: TraceMode, rng: &mut impl Rng) -> CMat {
    let t = sample_trace(mode, rng);
    random_density(n, t, rng)
}

fn sample_tangent(n: usize, rng: &mut impl Rng) -> CMat {
    complex_gaussian(n, n, rng)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonotonicityInstance {
    #[serde(with = "matrix_serde")]
    pub rho: CMat,
    #[serde(with = "matrix_serde")]
    pub x: CMat,
    #[serde(with = "channel_serde")]
    pub channel: KrausChannel,
    #[serde(with = "matrix_serde")]
    pub sigma: CMat,
}

impl Instance for MonotonicityInstance {
    /// `(K_ρ(X,X) − K_{T(ρ)+σ}(T(X),T(X))) / K_ρ(X,X)`.
    fn margin(&self, metric: &CptniMetric, mode: TraceMode) -> Result<f64> {
        let rho = base_point(&self.rho, mode)?;
        let out = base_point(&(hermitian_part(&self.channel.apply(&self.rho)?) + &self.sigma), mode)?;
        let rhs = metric.norm_sq(&rho, &self.x)?;
        let lhs = metric.norm_sq(&out, &self.channel.apply(&self.x)?)?;
        Ok((rhs - lhs) / rel(rhs))
    }
}

fn sample_monotonicity(cfg: &TrialConfig, rng: &mut impl Rng) -> Result<MonotonicityInstance> {
    let mode = cfg.trace_mode;
    loop_sample(rng, |rng| {
        // one trial in five is a unitary conjugation without noise, where
        // the inequality is tight
        let tight = rng.random_bool(0.2);
        let n = cfg.dim(rng);
        let m = if tight { n } else { cfg.dim(rng) };
        let k = if tight { 1 } else { rng.random_range(1..=3) };
        let rho = sample_rho(n, mode, rng);
        let x = sample_tangent(n, rng);
        let channel = random_cptni_with(n, m, k, if tight { 0.0 } else { 0.5 }, rng);
        let t_rho = hermitian_part(&channel.apply(&rho).ok()?);
        let s = if tight {
            0.0
        } else {
            rng.random_range(0.0..=headroom(trace(&t_rho).re, mode))
        };
        let sigma = random_unit_trace_psd(m, rng) * c(s);
        well_conditioned(&(&t_rho + &sigma))
            .ok()?
            .then_some(MonotonicityInstance { rho, x, channel, sigma })
    })
}

/// Draws until `draw` accepts, at most `MAX_RESAMPLES` times.
fn loop_sample<R: Rng, T>(rng: &mut R, mut draw: impl FnMut(&mut R) -> Option<T>) -> Result<T> {
    for _ in 0..MAX_RESAMPLES {
        if let Some(v) = draw(rng) {
            return Ok(v);
        }
    }
    Err(Error::NumericalFailure(format!(
        "no admissible sample after {MAX_RESAMPLES} attempts"
    )))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdditivityInstance {
    #[serde(with = "matrix_serde")]
    pub rho1: CMat,
    #[serde(with = "matrix_serde")]
    pub rho2: CMat,
    #[serde(with = "matrix_serde")]
    pub x1: CMat,
    #[serde(with = "matrix_serde")]
    pub y1: CMat,
    #[serde(with = "matrix_serde")]
    pub x2: CMat,
    #[serde(with = "matrix_serde")]
    pub y2: CMat,
}

impl Instance for AdditivityInstance {
    /// `−|K_{ρ₁⊕ρ₂}(X₁⊕X₂, Y₁⊕Y₂) − K_{ρ₁}(X₁,Y₁) − K_{ρ₂}(X₂,Y₂)| / (|K₁| + |K₂|)`.
    fn margin(&self, metric: &CptniMetric, mode: TraceMode) -> Result<f64> {
        let r1 = base_point(&self.rho1, mode)?;
        let r2 = base_point(&self.rho2, mode)?;
        let r = base_point(&direct_sum(&self.rho1, &self.rho2), mode)?;
        let k1 = metric.eval(&r1, &self.x1, &self.y1)?;
        let k2 = metric.eval(&r2, &self.x2, &self.y2)?;
        let k = metric.eval(&r, &direct_sum(&self.x1, &self.x2), &direct_sum(&self.y1, &self.y2))?;
        Ok(-(k - k1 - k2).norm() / rel(k1.norm() + k2.norm()))
    }
}

fn sample_additivity(cfg: &TrialConfig, rng: &mut impl Rng) -> AdditivityInstance {
    let (n1, n2) = (cfg.dim(rng), cfg.dim(rng));
    let t = sample_trace(cfg.trace_mode, rng);
    let w: f64 = rng.random_range(0.1..=0.9);
    AdditivityInstance {
        rho1: random_density(n1, w * t, rng),
        rho2: random_density(n2, (1.0 - w) * t, rng),
        x1: sample_tangent(n1, rng),
        y1: sample_tangent(n1, rng),
        x2: sample_tangent(n2, rng),
        y2: sample_tangent(n2, rng),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvexityInstance {
    #[serde(with = "matrix_serde")]
    pub rho1: CMat,
    #[serde(with = "matrix_serde")]
    pub rho2: CMat,
    #[serde(with = "matrix_serde")]
    pub x1: CMat,
    #[serde(with = "matrix_serde")]
    pub x2: CMat,
}

impl Instance for ConvexityInstance {
    fn margin(&self, metric: &CptniMetric, mode: TraceMode) -> Result<f64> {
        let half = c(0.5);
        let mid = base_point(&((&self.rho1 + &self.rho2) * half), mode)?;
        let lhs = metric.norm_sq(&mid, &((&self.x1 + &self.x2) * half))?;
        let rhs = 0.5
            * (metric.norm_sq(&base_point(&self.rho1, mode)?, &self.x1)?
                + metric.norm_sq(&base_point(&self.rho2, mode)?, &self.x2)?);
        Ok((rhs - lhs) / rel(rhs))
    }
}

fn sample_convexity(cfg: &TrialConfig, rng: &mut impl Rng) -> ConvexityInstance {
    let n = cfg.dim(rng);
    ConvexityInstance {
        rho1: sample_rho(n, cfg.trace_mode, rng),
        rho2: sample_rho(n, cfg.trace_mode, rng),
        x1: sample_tangent(n, rng),
        x2: sample_tangent(n, rng),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RhoDecreaseInstance {
    #[serde(with = "matrix_serde")]
    pub rho: CMat,
    #[serde(with = "matrix_serde")]
    pub delta: CMat,
    #[serde(with = "matrix_serde")]
    pub x: CMat,
    /// Other end of the segment `λρ + (1−λ)ρ_end` tested for convexity.
    #[serde(with = "matrix_serde")]
    pub rho_end: CMat,
    pub lambda: f64,
}

impl Instance for RhoDecreaseInstance {
    /// Minimum of the decrease margin `(K_ρ − K_{ρ+Δ})/K_ρ` and the segment
    /// convexity margin.
    fn margin(&self, metric: &CptniMetric, mode: TraceMode) -> Result<f64> {
        let k0 = metric.norm_sq(&base_point(&self.rho, mode)?, &self.x)?;
        let k1 = metric.norm_sq(&base_point(&(&self.rho + &self.delta), mode)?, &self.x)?;
        let decrease = (k0 - k1) / rel(k0);
        let l = self.lambda;
        let ke = metric.norm_sq(&base_point(&self.rho_end, mode)?, &self.x)?;
        let mix = &self.rho * c(l) + &self.rho_end * c(1.0 - l);
        let km = metric.norm_sq(&base_point(&mix, mode)?, &self.x)?;
        let chord = l * k0 + (1.0 - l) * ke;
        Ok(decrease.min((chord - km) / rel(chord)))
    }
}

fn sample_rho_decrease(cfg: &TrialConfig, rng: &mut impl Rng) -> RhoDecreaseInstance {
    let n = cfg.dim(rng);
    let rho = sample_rho(n, cfg.trace_mode, rng);
    let s = rng.random_range(0.0..=headroom(trace(&rho).re, cfg.trace_mode));
    let rank = rng.random_range(1..=n);
    let w = crate::sampling::random_psd(n, rank, rng);
    let delta = &w * c(s / trace(&w).re);
    RhoDecreaseInstance {
        rho,
        delta,
        x: sample_tangent(n, rng),
        rho_end: sample_rho(n, cfg.trace_mode, rng),
        lambda: rng.random(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingInstance {
    #[serde(with = "matrix_serde")]
    pub rho: CMat,
    #[serde(with = "matrix_serde")]
    pub x: CMat,
    pub q: f64,
}

impl Instance for ScalingInstance {
    /// `−|q·K_{qρ}(X,X) − K_ρ(X,X)| / K_ρ(X,X)`.
    fn margin(&self, metric: &CptniMetric, mode: TraceMode) -> Result<f64> {
        let rho = base_point(&self.rho, mode)?;
        let k = metric.norm_sq(&rho, &self.x)?;
        let kq = metric.norm_sq(&rho.scaled(self.q)?, &self.x)?;
        Ok(-(self.q * kq - k).abs() / rel(k))
    }
}

fn sample_scaling(cfg: &TrialConfig, rng: &mut impl Rng) -> ScalingInstance {
    let n = cfg.dim(rng);
    let rho = sample_rho(n, cfg.trace_mode, rng);
    let hi: f64 = match cfg.trace_mode {
        TraceMode::UnitBounded => 1.0 / trace(&rho).re,
        TraceMode::Unconstrained => 10.0,
    };
    // log-uniform on [0.1, hi]; the end points are never hit exactly
    let q = rng.random_range(0.1f64.ln()..=hi.ln().max(0.1f64.ln())).exp().min(hi);
    ScalingInstance {
        rho,
        x: sample_tangent(n, rng),
        q,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchurInstance {
    #[serde(with = "matrix_serde")]
    pub rho: CMat,
    #[serde(with = "matrix_serde")]
    pub x: CMat,
    #[serde(with = "channel_serde")]
    pub channel: KrausChannel,
    #[serde(with = "matrix_serde")]
    pub sigma: CMat,
}

impl Instance for SchurInstance {
    /// `λ_min(T(Xρ⁻¹X*) − T(X)(T(ρ)+σ)⁻¹T(X)*) / ‖T(Xρ⁻¹X*)‖₂`; the metric is
    /// not involved.
    fn margin(&self, _metric: &CptniMetric, mode: TraceMode) -> Result<f64> {
        let rho = base_point(&self.rho, mode)?;
        let t = &self.channel;
        let out = base_point(&(hermitian_part(&t.apply(&self.rho)?) + &self.sigma), mode)?;
        let tx = t.apply(&self.x)?;
        let lhs = &tx * out.inverse() * tx.adjoint();
        let rhs = hermitian_part(&t.apply(&(&self.x * rho.inverse() * self.x.adjoint()))?);
        let diff = hermitian_part(&(&rhs - lhs));
        Ok(eig_hermitian(&diff)?.min_eigenvalue() / rel(spectral_norm(&rhs)))
    }
}

fn sample_schur(cfg: &TrialConfig, rng: &mut impl Rng) -> Result<SchurInstance> {
    let m = sample_monotonicity(cfg, rng)?;
    Ok(SchurInstance {
        rho: m.rho,
        x: m.x,
        channel: m.channel,
        sigma: m.sigma,
    })
}

/// One instance of the CPTP metric's direct-sum gap
/// `K_{ρ₁⊕ρ₂}(X₁⊕X₂) − K_{ρ₁}(X₁) − K_{ρ₂}(X₂)` with `f_t ≡ sld`, `b ≡ b`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DemoInstance {
    pub b: f64,
    #[serde(with = "matrix_serde")]
    pub rho1: CMat,
    #[serde(with = "matrix_serde")]
    pub rho2: CMat,
    #[serde(with = "matrix_serde")]
    pub x1: CMat,
    #[serde(with = "matrix_serde")]
    pub x2: CMat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoGap {
    pub gap: f64,
    /// `b·((TrX₁+TrX₂)² − TrX₁² − TrX₂²) = 2b·TrX₁·TrX₂`.
    pub predicted: f64,
    /// Sum of the magnitudes of the three metric values.
    pub scale: f64,
}

impl DemoInstance {
    /// `ρ₁ = diag(¼,¼)`, `ρ₂ = diag(⅕,³⁄₁₀)`, `X₁ = X₂ = E₁₁`: the gap is `2b`.
    pub fn canonical(b: f64) -> Self {
        Self {
            b,
            rho1: diag(&[0.25, 0.25]),
            rho2: diag(&[0.2, 0.3]),
            x1: matrix_unit(2, 0, 0),
            x2: matrix_unit(2, 0, 0),
        }
    }

    pub fn spec(&self) -> CptpMetricSpec {
        CptpMetricSpec::constant(MonotoneFunctionSpec::catalog(crate::functions::CatalogFn::Sld), self.b)
    }

    pub fn gap(&self, mode: TraceMode) -> Result<DemoGap> {
        let spec = self.spec();
        let k1 = spec.norm_sq(&base_point(&self.rho1, mode)?, &self.x1)?;
        let k2 = spec.norm_sq(&base_point(&self.rho2, mode)?, &self.x2)?;
        let k = spec.norm_sq(
            &base_point(&direct_sum(&self.rho1, &self.rho2), mode)?,
            &direct_sum(&self.x1, &self.x2),
        )?;
        let (t1, t2) = (trace(&self.x1), trace(&self.x2));
        let predicted = self.b * ((t1 + t2).norm_sqr() - t1.norm_sqr() - t2.norm_sqr());
        Ok(DemoGap {
            gap: k - k1 - k2,
            predicted,
            scale: k.abs() + k1.abs() + k2.abs(),
        })
    }
}

impl Instance for DemoInstance {
    fn margin(&self, _metric: &CptniMetric, mode: TraceMode) -> Result<f64> {
        let g = self.gap(mode)?;
        Ok(-(g.gap - g.predicted).abs() / rel(g.scale))
    }
}

fn sample_demo(cfg: &TrialConfig, rng: &mut impl Rng) -> DemoInstance {
    let (n1, n2) = (cfg.dim(rng), cfg.dim(rng));
    let t = sample_trace(cfg.trace_mode, rng);
    let w: f64 = rng.random_range(0.1..=0.9);
    DemoInstance {
        b: cfg.demo_b,
        rho1: random_density(n1, w * t, rng),
        rho2: random_density(n2, (1.0 - w) * t, rng),
        x1: random_hermitian(n1, rng),
        x2: random_hermitian(n2, rng),
    }
}

/// Outcome of the non-additivity demonstration on the canonical instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoOutcome {
    pub b: f64,
    pub gap: f64,
    pub predicted: f64,
    /// `b = 0`: the metric is additive and there is nothing to exhibit.
    pub degenerate: bool,
}

/// Exhibits the CPTP metric's direct-sum gap; `DemoFailure` when `b ≠ 0`
/// and no gap appears.
pub fn demo_cptp_non_additivity(b: f64) -> Result<DemoOutcome> {
    if !b.is_finite() || b < 0.0 {
        return Err(Error::SpecViolation(format!("b = {b} must be finite and non-negative")));
    }
    let g = DemoInstance::canonical(b).gap(TraceMode::UnitBounded)?;
    let degenerate = b == 0.0;
    if !degenerate && g.gap.abs() <= 1e-12 * g.scale {
        return Err(Error::DemoFailure(format!("no direct-sum gap for b = {b}")));
    }
    Ok(DemoOutcome {
        b,
        gap: g.gap,
        predicted: g.predicted,
        degenerate,
    })
}

fn dump_value<T: Serialize>(cfg: &TrialConfig, f: &MonotoneFunctionSpec, tol: f64, instance: &T) -> serde_json::Value {
    serde_json::to_value(InstanceDump {
        f: *f,
        kernel_perturbation: cfg.kernel_perturbation,
        trace_mode: cfg.trace_mode,
        tol,
        instance,
    })
    .unwrap_or(serde_json::Value::Null)
}

/// Runs `sample` and [`Instance::margin`] for every `f` and trial.
fn metric_suite<T: Instance>(
    name: &str,
    cfg: &TrialConfig,
    tol: f64,
    sample: impl Fn(&TrialConfig, &mut crate::sampling::TrialRng) -> Result<T>,
) -> Result<SuiteReport> {
    cfg.validate()?;
    let mut report = SuiteReport::new(name, tol);
    for f in &cfg.f_names {
        let metric = cfg.metric(f);
        let label = format!("{name}/{}", f.name());
        let mut sub = SuiteReport::new(label.clone(), tol);
        for t in 0..cfg.trials {
            let mut rng = cfg.rng(&label, t);
            match sample(cfg, &mut rng) {
                Ok(inst) => {
                    let margin = inst.margin(&metric, cfg.trace_mode);
                    sub.record(t, margin, || dump_value(cfg, f, tol, &inst));
                }
                Err(e) => {
                    sub.record(t, Err(e), || serde_json::Value::Null);
                }
            }
        }
        report = report.merge(sub);
    }
    Ok(report)
}

pub fn suite_cptni_monotonicity(cfg: &TrialConfig) -> Result<SuiteReport> {
    metric_suite("monotonicity", cfg, cfg.tol, sample_monotonicity)
}

pub fn suite_direct_sum_additivity(cfg: &TrialConfig) -> Result<SuiteReport> {
    metric_suite("additivity", cfg, cfg.equality_tol, |c, r| Ok(sample_additivity(c, r)))
}

pub fn suite_convexity(cfg: &TrialConfig) -> Result<SuiteReport> {
    metric_suite("convexity", cfg, cfg.tol, |c, r| Ok(sample_convexity(c, r)))
}

pub fn suite_rho_monotone_decrease(cfg: &TrialConfig) -> Result<SuiteReport> {
    metric_suite("rho-decrease", cfg, cfg.tol, |c, r| Ok(sample_rho_decrease(c, r)))
}

pub fn suite_scaling_law(cfg: &TrialConfig) -> Result<SuiteReport> {
    metric_suite("scaling", cfg, cfg.equality_tol, |c, r| Ok(sample_scaling(c, r)))
}

pub fn suite_schur_positivity(cfg: &TrialConfig) -> Result<SuiteReport> {
    metric_suite("schur", cfg, cfg.tol, sample_schur)
}

/// The canonical gap (trial 0) followed by `trials` random Hermitian
/// instances whose gaps must match `2b·TrX₁·TrX₂`.
pub fn suite_cptp_demo(cfg: &TrialConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let tol = cfg.equality_tol;
    let sld = MonotoneFunctionSpec::catalog(crate::functions::CatalogFn::Sld);
    let mut report = SuiteReport::new("cptp-demo", tol);
    let outcome = demo_cptp_non_additivity(cfg.demo_b);
    let canonical = DemoInstance::canonical(cfg.demo_b);
    let first = outcome
        .as_ref()
        .map_err(|e| Error::DemoFailure(e.to_string()))
        .and_then(|o| Ok(-(o.gap - o.predicted).abs() / rel(canonical.gap(TraceMode::UnitBounded)?.scale)));
    report.record(0, first, || dump_value(cfg, &sld, tol, &canonical));
    if let Ok(o) = &outcome {
        report.values.insert("b".into(), o.b);
        report.values.insert("gap".into(), o.gap);
        report.values.insert("predicted".into(), o.predicted);
        report
            .values
            .insert("degenerate".into(), if o.degenerate { 1.0 } else { 0.0 });
    }
    let metric = CptniMetric::new(sld);
    for t in 0..cfg.trials {
        let mut rng = cfg.rng("cptp-demo", t);
        let inst = sample_demo(cfg, &mut rng);
        let margin = inst.margin(&metric, cfg.trace_mode);
        report.record(t + 1, margin, || dump_value(cfg, &sld, tol, &inst));
    }
    Ok(report)
}

/// Monotonicity, concavity and transformer checks for every `f` and its
/// `f^⊥`, `f′` transforms, plus the `x²` control, which passes when it is
/// caught violating operator monotonicity.
pub fn suite_functions(cfg: &TrialConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let dims = cfg.dims();
    let per_dim = cfg.trials.div_ceil(dims.len());
    let mut report = SuiteReport::new("functions", crate::functions::CHECK_TOL);
    for f in &cfg.f_names {
        for g in [*f, f.perp(), f.prime()] {
            let name = g.name();
            for &d in &dims {
                let seed = derive_seed(cfg.seed, &format!("functions/monotone/{name}/{d}"));
                report = report.merge(check_operator_monotone(&g, per_dim, d, seed));
                let seed = derive_seed(cfg.seed, &format!("functions/concave/{name}/{d}"));
                report = report.merge(check_operator_concave(&g, per_dim, d, seed));
            }
            let seed = derive_seed(cfg.seed, &format!("functions/transformer/{name}"));
            report = report.merge(check_transformer_inequality(
                &g,
                cfg.trials,
                cfg.dim_min..=cfg.dim_max,
                seed,
            ));
        }
    }
    let control = sq_control(cfg.seed);
    let mut summary = SuiteReport::new("functions/control/sq", 0.0);
    let caught = control.failed > 0;
    summary.record(
        0,
        if caught {
            Ok(control.failed as f64 / control.trials as f64)
        } else {
            Err(Error::DemoFailure("x² control produced no violation".into()))
        },
        || serde_json::Value::Null,
    );
    report
        .values
        .insert("sq_control_violations".into(), control.failed as f64);
    Ok(report.merge(summary))
}

/// `x²` through the operator-monotonicity check at dimension 2.
pub fn sq_control(seed: u64) -> SuiteReport {
    let sq: MonotoneFunctionSpec = MonotoneFunctionSpec::catalog(crate::functions::CatalogFn::Sq);
    check_operator_monotone(&sq, SQ_CONTROL_TRIALS, 2, derive_seed(seed, "functions/control/sq"))
}

/// Transposition, joint monotonicity and the transformer inequality per
/// dimension; the transformer's output dimension cycles through the range.
pub fn suite_means(cfg: &TrialConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let dims = cfg.dims();
    let per_dim = cfg.trials.div_ceil(dims.len());
    let mut report = SuiteReport::new("means", crate::means::TRANSPOSITION_TOL);
    for f in &cfg.f_names {
        let name = f.name();
        for (i, &n) in dims.iter().enumerate() {
            let m = dims[(i + 1) % dims.len()];
            let seed = |kind: &str| derive_seed(cfg.seed, &format!("means/{kind}/{name}/{n}"));
            report = report.merge(check_transposition(f, per_dim, n, seed("transposition")));
            report = report.merge(check_joint_monotonicity(f, per_dim, n, seed("joint")));
            report = report.merge(check_mean_transformer(f, per_dim, n, m, seed("transformer")));
        }
    }
    Ok(report)
}

pub fn run_suite(name: &str, cfg: &TrialConfig) -> Result<SuiteReport> {
    match name {
        "monotonicity" => suite_cptni_monotonicity(cfg),
        "additivity" => suite_direct_sum_additivity(cfg),
        "convexity" => suite_convexity(cfg),
        "rho-decrease" => suite_rho_monotone_decrease(cfg),
        "scaling" => suite_scaling_law(cfg),
        "schur" => suite_schur_positivity(cfg),
        "cptp-demo" => suite_cptp_demo(cfg),
        "functions" => suite_functions(cfg),
        "means" => suite_means(cfg),
        _ => Err(Error::InvalidConfig(format!(
            "unknown suite `{name}`; expected one of {} or all",
            SUITE_NAMES.join(", ")
        ))),
    }
}

pub fn run_all(cfg: &TrialConfig) -> Result<Vec<SuiteReport>> {
    SUITE_NAMES.iter().map(|s| run_suite(s, cfg)).collect()
}

pub fn all_passed(reports: &[SuiteReport]) -> bool {
    !reports.is_empty() && reports.iter().all(SuiteReport::all_passed)
}

/// SHA-256 of the serialized reports, as lowercase hex.
pub fn report_hash(reports: &[SuiteReport]) -> String {
    let bytes = serde_json::to_vec(reports).unwrap_or_default();
    hex::encode(Sha256::digest(&bytes))
}

fn replay_metric<T: Instance>(dump: &FailureDump) -> Result<f64> {
    let d: InstanceDump<T> = serde_json::from_value(dump.instance.clone())?;
    let metric = CptniMetric::new(d.f).with_kernel_perturbation(d.kernel_perturbation);
    d.instance.margin(&metric, d.trace_mode)
}

/// Recomputes the margin of a dumped trial from any suite.
pub fn replay(dump: &FailureDump) -> Result<f64> {
    let mut parts = dump.suite.split('/');
    let head = parts.next().unwrap_or_default();
    let kind = parts.next().unwrap_or_default();
    let inst = &dump.instance;
    let mat = |k: &str| matrix_from_value(&inst[k]);
    let f = || -> Result<MonotoneFunctionSpec> {
        inst["f"]
            .as_str()
            .ok_or_else(|| Error::InvalidDocument("dump has no function name".into()))?
            .parse()
    };
    match (head, kind) {
        ("monotonicity", _) => replay_metric::<MonotonicityInstance>(dump),
        ("additivity", _) => replay_metric::<AdditivityInstance>(dump),
        ("convexity", _) => replay_metric::<ConvexityInstance>(dump),
        ("rho-decrease", _) => replay_metric::<RhoDecreaseInstance>(dump),
        ("scaling", _) => replay_metric::<ScalingInstance>(dump),
        ("schur", _) => replay_metric::<SchurInstance>(dump),
        ("cptp-demo", _) => replay_metric::<DemoInstance>(dump),
        ("means", "transposition") => transposition_margin(&f()?, &mat("a")?, &mat("b")?),
        ("means", "joint") => joint_margin(&f()?, &mat("a1")?, &mat("b1")?, &mat("a2")?, &mat("b2")?),
        ("means", "transformer") => mean_transformer_margin(&f()?, &mat("a")?, &mat("b")?, &mat("c")?),
        ("functions", "monotone") => {
            let g = f()?;
            let (a, b) = (mat("a")?, mat("b")?);
            let fa = crate::linalg::matrix_function(&a, &g, crate::linalg::Boundary::Strict)?;
            let fb = crate::linalg::matrix_function(&b, &g, crate::linalg::Boundary::Strict)?;
            Ok(eig_hermitian(&(&fb - fa))?.min_eigenvalue() / rel(spectral_norm(&fb)))
        }
        ("functions", "concave") => {
            let p = inst["p"]
                .as_f64()
                .ok_or_else(|| Error::InvalidDocument("dump has no mixing weight".into()))?;
            concavity_margin(&f()?, &mat("a")?, &mat("b")?, p)
        }
        ("functions", "transformer") => transformer_margin(&f()?, &mat("a")?, &mat("c")?),
        _ => Err(Error::InvalidDocument(format!("cannot replay suite `{}`", dump.suite))),
    }
}
