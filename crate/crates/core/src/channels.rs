//! Completely positive maps in operator-sum form.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, eig_hermitian, hermitian_part, hermitize, identity, kron, matrix_unit, max_abs, spectral_norm, trace, CMat,
};
use crate::sampling::{haar_isometry, rng_for};

/// Tolerance on `Σ Aᵢ*Aᵢ` against `I`.
pub const TRACE_TOL: f64 = 1e-10;
/// Tolerance on the Choi matrix's smallest eigenvalue.
pub const CHOI_TOL: f64 = 1e-9;
/// Kraus operators with Frobenius norm below this are dropped.
pub const NULL_KRAUS_NORM: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "CPTP")]
    Cptp,
    #[serde(rename = "CPTNI-strict")]
    CptniStrict,
    #[serde(rename = "invalid")]
    Invalid,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Cptp => "CPTP",
            Classification::CptniStrict => "CPTNI-strict",
            Classification::Invalid => "invalid",
        })
    }
}

/// Linear map `T(X) = Σᵢ Aᵢ X Bᵢ*` with `Bᵢ = Aᵢ` for a genuine Kraus
/// representation. Immutable after construction; the classification and its
/// witnesses are computed once.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    in_dim: usize,
    out_dim: usize,
    left: Vec<CMat>,
    right: Option<Vec<CMat>>,
    effect: CMat,
    choi_min_eigenvalue: f64,
    classification: Classification,
}

impl KrausChannel {
    /// Kraus form `Σ Aᵢ X Aᵢ*`, each `Aᵢ` of shape `out_dim × in_dim`.
    pub fn new(in_dim: usize, out_dim: usize, kraus: Vec<CMat>) -> Result<Self> {
        Self::build(in_dim, out_dim, kraus, None)
    }

    /// General form `Σ Aᵢ X Bᵢ*`, used for maps that are not completely
    /// positive (e.g. the transpose).
    pub fn with_pairs(in_dim: usize, out_dim: usize, left: Vec<CMat>, right: Vec<CMat>) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} left operators but {} right operators",
                left.len(),
                right.len()
            )));
        }
        Self::build(in_dim, out_dim, left, Some(right))
    }

    fn build(in_dim: usize, out_dim: usize, left: Vec<CMat>, right: Option<Vec<CMat>>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::DimensionMismatch("channel dimensions must be positive".into()));
        }
        let all = left.iter().chain(right.iter().flatten());
        for a in all {
            if a.shape() != (out_dim, in_dim) {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {out_dim}x{in_dim}",
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        let mut ch = Self {
            in_dim,
            out_dim,
            left,
            right,
            effect: CMat::zeros(in_dim, in_dim),
            choi_min_eigenvalue: 0.0,
            classification: Classification::Invalid,
        };
        ch.effect = ch.adjoint_apply_unchecked(&identity(out_dim));
        let choi = ch.choi_matrix();
        let choi_scale = max_abs(&choi).max(1.0);
        ch.choi_min_eigenvalue = match hermitize(&choi).and_then(|h| eig_hermitian(&h)) {
            Ok(s) => s.min_eigenvalue(),
            Err(_) => f64::NEG_INFINITY,
        };
        let cp = ch.choi_min_eigenvalue >= -CHOI_TOL * choi_scale;
        ch.classification = match hermitize(&ch.effect) {
            Ok(e) if cp => {
                let defect = &e - identity(in_dim);
                let max_excess = eig_hermitian(&defect)?.max_eigenvalue();
                if spectral_norm(&defect) <= TRACE_TOL {
                    Classification::Cptp
                } else if max_excess <= TRACE_TOL {
                    Classification::CptniStrict
                } else {
                    Classification::Invalid
                }
            }
            _ => Classification::Invalid,
        };
        Ok(ch)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn left_ops(&self) -> &[CMat] {
        &self.left
    }

    pub fn right_ops(&self) -> Option<&[CMat]> {
        self.right.as_deref()
    }

    /// Kraus operators; `None` for a general pair representation.
    pub fn kraus_ops(&self) -> Option<&[CMat]> {
        match self.right {
            None => Some(&self.left),
            Some(_) => None,
        }
    }

    fn rights(&self) -> &[CMat] {
        self.right.as_deref().unwrap_or(&self.left)
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    pub fn is_cptni(&self) -> bool {
        self.classification != Classification::Invalid
    }

    /// `T*(I) = Σ Bᵢ* Aᵢ`, i.e. `Σ Aᵢ*Aᵢ` for Kraus form.
    pub fn effect(&self) -> &CMat {
        &self.effect
    }

    /// `‖Σ Aᵢ*Aᵢ − I‖₂`.
    pub fn completeness_defect(&self) -> f64 {
        spectral_norm(&(&self.effect - identity(self.in_dim)))
    }

    /// Smallest eigenvalue of `I − Σ Aᵢ*Aᵢ`.
    pub fn defect_min_eigenvalue(&self) -> Result<f64> {
        let d = identity(self.in_dim) - hermitize(&self.effect)?;
        Ok(eig_hermitian(&d)?.min_eigenvalue())
    }

    pub fn choi_min_eigenvalue(&self) -> f64 {
        self.choi_min_eigenvalue
    }

    fn apply_unchecked(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.out_dim, self.out_dim);
        for (a, b) in self.left.iter().zip(self.rights()) {
            out += a * x * b.adjoint();
        }
        out
    }

    fn adjoint_apply_unchecked(&self, y: &CMat) -> CMat {
        let mut out = CMat::zeros(self.in_dim, self.in_dim);
        for (a, b) in self.left.iter().zip(self.rights()) {
            out += a.adjoint() * y * b;
        }
        out
    }

    /// `T(X)`.
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        if x.shape() != (self.in_dim, self.in_dim) {
            return Err(Error::DimensionMismatch(format!(
                "channel input is {0}x{0}, got {1}x{2}",
                self.in_dim,
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(self.apply_unchecked(x))
    }

    /// `T*(Y) = Σ Aᵢ* Y Bᵢ`, the Hilbert–Schmidt adjoint.
    pub fn adjoint_apply(&self, y: &CMat) -> Result<CMat> {
        if y.shape() != (self.out_dim, self.out_dim) {
            return Err(Error::DimensionMismatch(format!(
                "adjoint input is {0}x{0}, got {1}x{2}",
                self.out_dim,
                y.nrows(),
                y.ncols()
            )));
        }
        Ok(self.adjoint_apply_unchecked(y))
    }

    /// `Σ_ij E_ij ⊗ T(E_ij)`.
    pub fn choi_matrix(&self) -> CMat {
        choi_of_map(self.in_dim, self.out_dim, |x| self.apply_unchecked(x))
    }

    /// `after ∘ self`.
    pub fn then(&self, after: &KrausChannel) -> Result<KrausChannel> {
        if after.in_dim != self.out_dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {}→{} with {}→{}",
                self.in_dim, self.out_dim, after.in_dim, after.out_dim
            )));
        }
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (a2, b2) in after.left.iter().zip(after.rights()) {
            for (a1, b1) in self.left.iter().zip(self.rights()) {
                left.push(a2 * a1);
                right.push(b2 * b1);
            }
        }
        if self.right.is_none() && after.right.is_none() {
            KrausChannel::new(self.in_dim, after.out_dim, left)
        } else {
            KrausChannel::with_pairs(self.in_dim, after.out_dim, left, right)
        }
    }
}

/// Choi matrix of an arbitrary linear map given by its action.
pub fn choi_of_map(in_dim: usize, out_dim: usize, map: impl Fn(&CMat) -> CMat) -> CMat {
    let mut choi = CMat::zeros(in_dim * out_dim, in_dim * out_dim);
    for i in 0..in_dim {
        for j in 0..in_dim {
            let e = matrix_unit(in_dim, i, j);
            choi += kron(&e, &map(&e));
        }
    }
    choi
}

pub fn identity_channel(n: usize) -> KrausChannel {
    KrausChannel::new(n, n, vec![identity(n)]).expect("valid identity channel")
}

/// Single Kraus operator `E₁₁`: keeps the `(1,1)` entry and discards the rest.
pub fn pinching_channel(n: usize) -> KrausChannel {
    KrausChannel::new(n, n, vec![matrix_unit(n, 0, 0)]).expect("valid pinching")
}

/// The transpose `X ↦ Xᵀ = Σ_ij E_ij X E_ij`, positive but not completely
/// positive.
pub fn transpose_map(n: usize) -> KrausChannel {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for i in 0..n {
        for j in 0..n {
            left.push(matrix_unit(n, i, j));
            right.push(matrix_unit(n, j, i));
        }
    }
    KrausChannel::with_pairs(n, n, left, right).expect("valid transpose map")
}

/// `E ↦ E ⊗ I_m / m` from `Cⁿ` into `Cⁿ ⊗ Cᵐ`.
pub fn tensor_embedding(n: usize, m: usize) -> KrausChannel {
    let w = 1.0 / (m as f64).sqrt();
    let ops = (0..m)
        .map(|k| {
            let mut a = CMat::zeros(n * m, n);
            for i in 0..n {
                a[(i * m + k, i)] = c(w);
            }
            a
        })
        .collect();
    KrausChannel::new(n, n * m, ops).expect("valid embedding")
}

/// `Tr₂` on `Cⁿ ⊗ Cᵐ`.
pub fn partial_trace_channel(n: usize, m: usize) -> KrausChannel {
    let ops = (0..m)
        .map(|k| {
            let mut a = CMat::zeros(n, n * m);
            for i in 0..n {
                a[(i, i * m + k)] = c(1.0);
            }
            a
        })
        .collect();
    KrausChannel::new(n * m, n, ops).expect("valid partial trace")
}

/// `S₁: C² → C² ⊗ Cᵐ`, `E ↦ E ⊗ I/m`.
pub fn embed_channel_s1(m: usize) -> KrausChannel {
    tensor_embedding(2, m.max(1))
}

/// `S₂: C² ⊗ Cᵐ → C²`, the partial trace over `Cᵐ`.
pub fn partial_trace_channel_s2(m: usize) -> KrausChannel {
    partial_trace_channel(2, m.max(1))
}

/// `T₁: Cⁿ → C²`, compression onto the first two coordinates.
pub fn corner_channel_t1(n: usize) -> KrausChannel {
    let n = n.max(2);
    let mut a = CMat::zeros(2, n);
    a[(0, 0)] = c(1.0);
    a[(1, 1)] = c(1.0);
    KrausChannel::new(n, 2, vec![a]).expect("valid corner channel")
}

/// `T₂: C² → Cⁿ`, injection into the first two coordinates.
pub fn inject_channel_t2(n: usize) -> KrausChannel {
    let n = n.max(2);
    let mut a = CMat::zeros(n, 2);
    a[(0, 0)] = c(1.0);
    a[(1, 1)] = c(1.0);
    KrausChannel::new(2, n, vec![a]).expect("valid injection")
}

/// Completes a trace non-increasing `T` to the trace-preserving map
/// `ρ ↦ T(ρ) + (Tr ρ − Tr T(ρ)) σ`, adding the Kraus operators
/// `B_st = √λ_s |e_s⟩⟨t| √(I − Σ Aᵢ*Aᵢ)` for `σ = Σ λ_s |e_s⟩⟨e_s|` and
/// `{|t⟩}` the standard basis of the input space.
pub fn complete_to_cptp(t: &KrausChannel, sigma: &CMat) -> Result<KrausChannel> {
    let kraus = t.kraus_ops().ok_or(Error::NotCptni(f64::NAN))?;
    if sigma.shape() != (t.out_dim, t.out_dim) {
        return Err(Error::DimensionMismatch(format!("σ must be {0}x{0}", t.out_dim)));
    }
    let tr = trace(sigma);
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::NotUnitTrace(tr.re));
    }
    let sigma_spec = eig_hermitian(sigma)?;
    if sigma_spec.min_eigenvalue() < -TRACE_TOL {
        return Err(Error::NotStrictlyPositive {
            min_eigenvalue: sigma_spec.min_eigenvalue(),
            floor: -TRACE_TOL,
        });
    }
    let defect = identity(t.in_dim) - hermitize(t.effect())?;
    let defect_spec = eig_hermitian(&defect)?;
    if defect_spec.min_eigenvalue() < -TRACE_TOL {
        return Err(Error::NotCptni(defect_spec.min_eigenvalue()));
    }
    // eigenvalues within round-off of zero are treated as exactly zero
    let root = defect_spec.apply(|d| if d <= 1e-12 { 0.0 } else { d.sqrt() });
    let mut ops: Vec<CMat> = kraus.to_vec();
    for (s, &lambda) in sigma_spec.eigenvalues.iter().enumerate() {
        if lambda <= 0.0 {
            continue;
        }
        let e_s = sigma_spec.eigenvectors.column(s);
        for row in 0..t.in_dim {
            // |e_s⟩⟨t| √D  =  e_s ⊗ (row t of √D)
            let b = (e_s * root.row(row)) * c(lambda.sqrt());
            ops.push(b);
        }
    }
    ops.retain(|a| a.norm() >= NULL_KRAUS_NORM);
    KrausChannel::new(t.in_dim, t.out_dim, ops)
}

/// Random trace non-increasing channel `Cⁿ → Cᵐ`: a Haar isometry
/// `V: Cⁿ → Cᵐᵏ` split into `k` blocks, all scaled by `√(1 − slack·u)` with
/// `u ~ U[0, 1]`. `k` is raised to `⌈n/m⌉` when `mk < n`, since no isometry
/// exists otherwise.
pub fn random_cptni(n: usize, m: usize, k: usize, slack: f64, seed: u64) -> KrausChannel {
    random_cptni_with(n, m, k, slack, &mut rng_for(seed, 0))
}

pub fn random_cptni_with(n: usize, m: usize, k: usize, slack: f64, rng: &mut impl Rng) -> KrausChannel {
    let k = k.max(1).max(n.div_ceil(m));
    let v = haar_isometry(m * k, n, rng);
    let u: f64 = rng.random();
    let shrink = (1.0 - slack.clamp(0.0, 1.0) * u).sqrt();
    let ops = (0..k).map(|i| v.rows(i * m, m).into_owned() * c(shrink)).collect();
    KrausChannel::new(n, m, ops).expect("valid random channel")
}

/// Output of `T(ρ)` re-symmetrized; useful where downstream code expects an
/// exactly Hermitian matrix.
pub fn apply_hermitian(t: &KrausChannel, x: &CMat) -> Result<CMat> {
    Ok(hermitian_part(&t.apply(x)?))
}
