//! Seeded random instance generators.
//!
//! Every generator draws from a caller-supplied RNG; [`rng_for`] derives an
//! independent ChaCha stream per `(seed, stream)` pair so that trials can be
//! replayed individually.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::linalg::{c, eig_hermitian, hermitian_part, spectral_norm, trace, CMat};
use crate::Complex64;

pub type TrialRng = ChaCha8Rng;

pub fn rng_for(seed: u64, stream: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stable 64-bit label hash, used to give every suite its own seed.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(label.as_bytes())
        .finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Entries with independent standard normal real and imaginary parts.
pub fn complex_gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

/// `G + G*`.
pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMat {
    let g = complex_gaussian(n, n, rng);
    hermitian_part(&(&g + g.adjoint()))
}

/// Well-conditioned strictly positive matrix: `G + G*` shifted by
/// `(|λ_min| + u)·I` with `u ~ U[0.1, 1]`.
pub fn random_positive(n: usize, rng: &mut impl Rng) -> CMat {
    let h = random_hermitian(n, rng);
    let lmin = eig_hermitian(&h).map(|s| s.min_eigenvalue()).unwrap_or(0.0);
    let u: f64 = rng.random_range(0.1..=1.0);
    let mut m = h;
    let shift = lmin.abs() + u;
    for i in 0..n {
        m[(i, i)] += c(shift);
    }
    m
}

/// `G G*` with `G` of shape `n × rank`.
pub fn random_psd(n: usize, rank: usize, rng: &mut impl Rng) -> CMat {
    let g = complex_gaussian(n, rank, rng);
    hermitian_part(&(&g * g.adjoint()))
}

/// Unit-trace positive semidefinite matrix of full rank.
pub fn random_unit_trace_psd(n: usize, rng: &mut impl Rng) -> CMat {
    let w = random_psd(n, n, rng);
    let t = trace(&w).re;
    w / c(t)
}

/// Strictly positive matrix rescaled to the given trace.
pub fn random_density(n: usize, trace_value: f64, rng: &mut impl Rng) -> CMat {
    let m = random_positive(n, rng);
    let t = trace(&m).re;
    m * c(trace_value / t)
}

/// Haar-distributed isometry `Cᶜᵒˡˢ → Cʳᵒʷˢ` (`rows ≥ cols`), via QR of a
/// complex Gaussian with the phases of `R`'s diagonal absorbed into `Q`.
pub fn haar_isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = complex_gaussian(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
        for i in 0..rows {
            q[(i, k)] *= phase;
        }
    }
    q
}

pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    haar_isometry(n, n, rng)
}

/// Matrix with spectral norm `u ≤ 1`, `u ~ U(0, 1]`.
pub fn random_contraction(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    let g = complex_gaussian(rows, cols, rng);
    let u: f64 = 1.0 - rng.random::<f64>();
    let norm = spectral_norm(&g);
    g * c(u / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs};

    #[test]
    fn isometry_is_isometric() {
        let mut rng = rng_for(1, 0);
        let v = haar_isometry(6, 3, &mut rng);
        assert!(max_abs(&(v.adjoint() * &v - identity(3))) < 1e-12);
    }

    #[test]
    fn positive_sampler_is_strictly_positive() {
        let mut rng = rng_for(2, 0);
        for n in 1..6 {
            let m = random_positive(n, &mut rng);
            assert!(eig_hermitian(&m).unwrap().min_eigenvalue() >= 0.1 - 1e-12);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = complex_gaussian(2, 2, &mut rng_for(5, 3));
        let b = complex_gaussian(2, 2, &mut rng_for(5, 3));
        let d = complex_gaussian(2, 2, &mut rng_for(5, 4));
        assert_eq!(a, b);
        assert_ne!(a, d);
        assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
    }
}
