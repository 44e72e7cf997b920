//! Dense complex linear algebra: Hermitian spectral decomposition, spectral
//! calculus, tensor and direct-sum layouts, partial trace and positivity
//! tests.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functions::MonotoneFunctionSpec;

/// Dense complex matrix, column-major storage.
pub type CMat = DMatrix<Complex64>;

/// Relative Hermiticity tolerance (scaled by `max(1, ‖M‖_max)`).
pub const HERM_TOL: f64 = 1e-12;
/// Default positivity tolerance, relative to the spectral norm.
pub const PSD_TOL: f64 = 1e-9;
/// Strict positivity floor, relative to the trace.
pub const EIG_FLOOR_REL: f64 = 1e-12;
/// Eigenvalues below this fraction of the spectral norm count as zero when a
/// boundary extension is requested.
pub const ZERO_SNAP_REL: f64 = 1e-12;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `max_ij |M_ij|`.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMat {
    let n = values.len();
    let mut m = CMat::zeros(n, n);
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = c(*v);
    }
    m
}

/// Matrix unit `E_ij` (zero-based indices).
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Hilbert–Schmidt inner product `Tr A* B`.
pub fn hs_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `max_ij |M_ij − conj(M_ji)|`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &CMat) -> bool {
    m.is_square() && hermiticity_defect(m) <= HERM_TOL * max_abs(m).max(1.0)
}

/// `(M + M*) / 2` without any check.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

/// Symmetrizes `m` after checking it is Hermitian within [`HERM_TOL`].
pub fn hermitize(m: &CMat) -> Result<CMat> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let defect = hermiticity_defect(m);
    let tol = HERM_TOL * max_abs(m).max(1.0);
    if defect > tol {
        return Err(Error::NonHermitian { defect, tol });
    }
    Ok(hermitian_part(m))
}

/// Eigen-decomposition `M = U diag(p) U*` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMat,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// Largest absolute eigenvalue, i.e. the spectral norm of the source.
    pub fn norm(&self) -> f64 {
        self.min_eigenvalue().abs().max(self.max_eigenvalue().abs())
    }

    /// `U diag(g(p)) U*`.
    pub fn apply(&self, g: impl Fn(f64) -> f64) -> CMat {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (k, p) in self.eigenvalues.iter().enumerate() {
            let w = g(*p);
            scaled.column_mut(k).scale_mut(w);
        }
        hermitian_part(&(scaled * u.adjoint()))
    }

    pub fn reconstruct(&self) -> CMat {
        self.apply(|p| p)
    }
}

/// Hermitian eigen-decomposition. Inputs are symmetrized first.
pub fn eig_hermitian(m: &CMat) -> Result<SpectralDecomposition> {
    let h = hermitize(m)?;
    let n = h.nrows();
    if n == 0 {
        return Err(Error::DimensionMismatch("empty matrix".into()));
    }
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 1000 * n.max(10))
        .ok_or_else(|| Error::NumericalFailure("Hermitian eigensolver did not converge".into()))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// How [`matrix_function`] treats eigenvalues at the boundary of `(0, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Every eigenvalue must be strictly positive.
    Strict,
    /// Eigenvalues within round-off of zero evaluate to `f̄(0)`.
    Extend,
}

/// Spectral calculus `f(M) = U f(diag p) U*`.
pub fn matrix_function(m: &CMat, f: &MonotoneFunctionSpec, boundary: Boundary) -> Result<CMat> {
    let spec = eig_hermitian(m)?;
    matrix_function_of(&spec, f, boundary)
}

pub fn matrix_function_of(spec: &SpectralDecomposition, f: &MonotoneFunctionSpec, boundary: Boundary) -> Result<CMat> {
    let snap = ZERO_SNAP_REL * spec.norm();
    let f0 = f.f_at_0();
    for &p in spec.eigenvalues.iter() {
        let ok = match boundary {
            Boundary::Strict => p > 0.0,
            Boundary::Extend => p > snap || (p.abs() <= snap && f0.is_finite()),
        };
        if !ok {
            return Err(Error::DomainViolation {
                function: f.name(),
                eigenvalue: p,
            });
        }
    }
    Ok(spec.apply(|p| {
        if p > snap || boundary == Boundary::Strict {
            f.eval(p)
        } else {
            f0
        }
    }))
}

/// Inverse of a strictly positive matrix, via its spectrum.
pub fn positive_inverse(spec: &SpectralDecomposition) -> CMat {
    spec.apply(|p| 1.0 / p)
}

/// Kronecker product, standard layout: `(A⊗B)[(a,b),(c,d)] = A[a,c] B[b,d]`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Block-diagonal `A ⊕ B`.
pub fn direct_sum(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut m = CMat::zeros(ra + rb, ca + cb);
    m.view_mut((0, 0), (ra, ca)).copy_from(a);
    m.view_mut((ra, ca), (rb, cb)).copy_from(b);
    m
}

/// Traces out the second factor of `Cⁿ ⊗ Cᵐ`.
pub fn partial_trace_second(m: &CMat, second: usize) -> Result<CMat> {
    if second == 0 || !m.is_square() || !m.nrows().is_multiple_of(second) {
        return Err(Error::DimensionMismatch(format!(
            "cannot trace out a factor of dimension {second} from a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows() / second;
    Ok(CMat::from_fn(n, n, |a, b| {
        (0..second).map(|k| m[(a * second + k, b * second + k)]).sum()
    }))
}

/// Spectral norm (largest singular value) of an arbitrary matrix.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, s| acc.max(*s))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMat) -> Result<f64> {
    Ok(eig_hermitian(m)?.min_eigenvalue())
}

/// `λ_min(M) ≥ −tol·‖M‖₂`.
pub fn is_psd(m: &CMat, tol: f64) -> Result<bool> {
    let spec = eig_hermitian(m)?;
    Ok(spec.min_eigenvalue() >= -tol * spec.norm())
}

/// `λ_min(M) > tol·‖M‖₂` with `M ≠ 0`.
pub fn is_strictly_positive(m: &CMat, tol: f64) -> Result<bool> {
    let spec = eig_hermitian(m)?;
    let norm = spec.norm();
    Ok(norm > 0.0 && spec.min_eigenvalue() > tol * norm)
}

/// Schur complement `C − B A⁻¹ B*` of the Hermitian block matrix
/// `[[A, B*], [B, C]]`, where `A` occupies the leading `split` rows.
pub fn schur_complement_lower(block: &CMat, split: usize) -> Result<CMat> {
    let h = hermitize(block)?;
    let n = h.nrows();
    if split == 0 || split >= n {
        return Err(Error::DimensionMismatch(format!(
            "split {split} is not inside a {n}x{n} block"
        )));
    }
    let rest = n - split;
    let a = h.view((0, 0), (split, split)).into_owned();
    let b = h.view((split, 0), (rest, split)).into_owned();
    let cc = h.view((split, split), (rest, rest)).into_owned();
    let spec = eig_hermitian(&a)?;
    let floor = EIG_FLOOR_REL * spec.norm().max(f64::MIN_POSITIVE);
    if spec.min_eigenvalue() <= floor {
        return Err(Error::SingularBlock(spec.min_eigenvalue()));
    }
    let a_inv = positive_inverse(&spec);
    Ok(hermitian_part(&(cc - &b * a_inv * b.adjoint())))
}

/// Vectorization `vec(X)[i + j·n] = X[i, j]` (column stacking).
pub fn vectorize(m: &CMat) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &DVector<Complex64>, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v.as_slice())
}

#[cfg(test)]
mod tests {
    const ZERO: Complex64 = Complex64::new(0.0, 0.0);
    use super::*;
    use crate::functions::CatalogFn;
    use crate::sampling::{complex_gaussian, random_hermitian, random_positive, rng_for};
    use proptest::prelude::*;

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        a.shape() == b.shape() && max_abs(&(a - b)) <= tol
    }

    #[test]
    fn diagonal_spectrum_is_identity_basis() {
        let s = eig_hermitian(&diag(&[0.25, 0.5])).unwrap();
        assert_eq!(s.eigenvalues.as_slice(), &[0.25, 0.5]);
        assert!(close(&s.eigenvectors.map(|z| c(z.norm())), &identity(2), 1e-15));
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let s = eig_hermitian(&x).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(eig_hermitian(&m), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn random_reconstruction_and_unitarity() {
        let mut rng = rng_for(7, 0);
        let h = random_hermitian(4, &mut rng);
        let s = eig_hermitian(&h).unwrap();
        let u = &s.eigenvectors;
        assert!(close(&(u * u.adjoint()), &identity(4), 1e-10));
        assert!(max_abs(&(s.reconstruct() - &h)) <= 1e-10 * max_abs(&h).max(1.0));
        assert!(s.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn matrix_function_fixtures() {
        let geo = MonotoneFunctionSpec::catalog(CatalogFn::Geo);
        let r = matrix_function(&diag(&[4.0, 9.0]), &geo, Boundary::Strict).unwrap();
        assert!(close(&r, &diag(&[2.0, 3.0]), 1e-14));

        let mut rng = rng_for(11, 0);
        let m = random_positive(3, &mut rng);
        let one = MonotoneFunctionSpec::catalog(CatalogFn::Right);
        assert!(close(
            &matrix_function(&m, &one, Boundary::Strict).unwrap(),
            &identity(3),
            1e-12
        ));

        let sld = MonotoneFunctionSpec::catalog(CatalogFn::Sld);
        let got = matrix_function(&m, &sld, Boundary::Strict).unwrap();
        let want = (identity(3) + &m) * c(0.5);
        assert!(close(&got, &want, 1e-12));
        // commutes with its argument
        assert!(max_abs(&(&got * &m - &m * &got)) <= 1e-9);
    }

    #[test]
    fn matrix_function_domain() {
        let geo = MonotoneFunctionSpec::catalog(CatalogFn::Geo);
        let m = diag(&[0.0, 1.0]);
        assert!(matches!(
            matrix_function(&m, &geo, Boundary::Strict),
            Err(Error::DomainViolation { .. })
        ));
        let ext = matrix_function(&m, &geo, Boundary::Extend).unwrap();
        assert!(close(&ext, &diag(&[0.0, 1.0]), 1e-15));
        assert!(matrix_function(&diag(&[-1.0, 1.0]), &geo, Boundary::Extend).is_err());
    }

    #[test]
    fn composition_on_commuting_arguments() {
        // geo(geo(M)) = M^{1/4}; sld(geo(M)) = (I + √M)/2
        let geo = MonotoneFunctionSpec::catalog(CatalogFn::Geo);
        let sld = MonotoneFunctionSpec::catalog(CatalogFn::Sld);
        let mut rng = rng_for(3, 1);
        for _ in 0..20 {
            let m = random_positive(4, &mut rng);
            let s = eig_hermitian(&m).unwrap();
            let inner = matrix_function_of(&s, &geo, Boundary::Strict).unwrap();
            let twice = matrix_function(&inner, &geo, Boundary::Strict).unwrap();
            assert!(close(&twice, &s.apply(|p| p.powf(0.25)), 1e-9));
            let outer = matrix_function(&inner, &sld, Boundary::Strict).unwrap();
            assert!(close(&outer, &s.apply(|p| (1.0 + p.sqrt()) / 2.0), 1e-9));
        }
    }

    #[test]
    fn kron_and_direct_sum_layouts() {
        let ds = direct_sum(&diag(&[1.0, 2.0]), &diag(&[3.0]));
        assert_eq!(ds, diag(&[1.0, 2.0, 3.0]));

        let k = kron(&matrix_unit(2, 0, 1), &identity(2)) * c(0.5);
        let mut want = CMat::zeros(4, 4);
        want[(0, 2)] = c(0.5);
        want[(1, 3)] = c(0.5);
        assert_eq!(k, want);

        let mut rng = rng_for(5, 0);
        let a = complex_gaussian(3, 3, &mut rng);
        let b = complex_gaussian(2, 2, &mut rng);
        assert!((trace(&kron(&a, &b)) - trace(&a) * trace(&b)).norm() <= 1e-12);
        assert!((trace(&direct_sum(&a, &b)) - trace(&a) - trace(&b)).norm() <= 1e-12);
    }

    #[test]
    fn partial_trace_fixtures() {
        let mut rng = rng_for(9, 0);
        let a = complex_gaussian(2, 2, &mut rng);
        let mut b = random_positive(3, &mut rng);
        b /= trace(&b);
        assert!(close(&partial_trace_second(&kron(&a, &b), 3).unwrap(), &a, 1e-12));

        let mixed = identity(6) * c(1.0 / 6.0);
        assert!(close(
            &partial_trace_second(&mixed, 3).unwrap(),
            &(identity(2) * c(0.5)),
            1e-15
        ));

        // index-loop oracle
        let m = complex_gaussian(6, 6, &mut rng);
        let got = partial_trace_second(&m, 3).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let mut s = ZERO;
                for k in 0..3 {
                    s += m[(3 * a + k, 3 * b + k)];
                }
                assert!((got[(a, b)] - s).norm() < 1e-14);
            }
        }
        assert!((trace(&got) - trace(&m)).norm() < 1e-12);
        assert!(partial_trace_second(&m, 4).is_err());
    }

    #[test]
    fn positivity_fixtures() {
        assert!(is_strictly_positive(&diag(&[0.5, 0.25]), 1e-10).unwrap());
        let ones = CMat::from_element(2, 2, ONE);
        assert!(is_psd(&ones, 1e-10).unwrap());
        assert!(!is_strictly_positive(&ones, 1e-10).unwrap());

        let mut rng = rng_for(13, 0);
        for _ in 0..20 {
            let rho = random_positive(3, &mut rng);
            let x = complex_gaussian(3, 3, &mut rng);
            let rho_inv = positive_inverse(&eig_hermitian(&rho).unwrap());
            let lower = &x * &rho_inv * x.adjoint();
            let mut block = CMat::zeros(6, 6);
            block.view_mut((0, 0), (3, 3)).copy_from(&rho);
            block.view_mut((0, 3), (3, 3)).copy_from(&x.adjoint());
            block.view_mut((3, 0), (3, 3)).copy_from(&x);
            block.view_mut((3, 3), (3, 3)).copy_from(&lower);
            let block = hermitian_part(&block);
            assert!(is_psd(&block, 1e-10).unwrap());
            let s = schur_complement_lower(&block, 3).unwrap();
            assert!(max_abs(&s) <= 1e-10 * max_abs(&lower).max(1.0));
        }
    }

    #[test]
    fn schur_fixtures() {
        let mut block = identity(4);
        block[(2, 2)] = ONE;
        assert!(close(&schur_complement_lower(&block, 2).unwrap(), &identity(2), 1e-15));
        let singular = direct_sum(&diag(&[0.0, 1.0]), &identity(2));
        assert!(matches!(
            schur_complement_lower(&singular, 2),
            Err(Error::SingularBlock(_))
        ));
    }

    #[test]
    fn schur_criterion_matches_block_positivity() {
        let mut rng = rng_for(17, 0);
        let mut agreed = 0;
        for t in 0..500 {
            let n = 2 + t % 3;
            let a = random_positive(n, &mut rng);
            let b = complex_gaussian(n, n, &mut rng);
            let a_inv = positive_inverse(&eig_hermitian(&a).unwrap());
            // indefinite or positive remainder, decided by the sample
            let d = if t % 2 == 0 {
                random_positive(n, &mut rng)
            } else {
                random_hermitian(n, &mut rng)
            };
            let cc = &b * a_inv * b.adjoint() + &d;
            let mut block = CMat::zeros(2 * n, 2 * n);
            block.view_mut((0, 0), (n, n)).copy_from(&a);
            block.view_mut((0, n), (n, n)).copy_from(&b.adjoint());
            block.view_mut((n, 0), (n, n)).copy_from(&b);
            block.view_mut((n, n), (n, n)).copy_from(&cc);
            let block = hermitian_part(&block);
            let lhs = is_psd(&block, 1e-9).unwrap();
            let rhs = is_psd(&schur_complement_lower(&block, n).unwrap(), 1e-9).unwrap();
            assert_eq!(lhs, rhs, "trial {t}");
            agreed += 1;
        }
        assert_eq!(agreed, 500);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn spectral_round_trip(seed in any::<u64>(), n in 1usize..=8) {
            let mut rng = rng_for(seed, 0);
            let h = random_hermitian(n, &mut rng);
            let s = eig_hermitian(&h).unwrap();
            prop_assert!(max_abs(&(s.reconstruct() - &h)) <= 1e-10 * max_abs(&h).max(1.0));
        }

        #[test]
        fn partial_trace_of_product(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=4) {
            let mut rng = rng_for(seed, 1);
            let a = complex_gaussian(n, n, &mut rng);
            let b = complex_gaussian(m, m, &mut rng);
            let got = partial_trace_second(&kron(&a, &b), m).unwrap();
            let want = &a * trace(&b);
            prop_assert!(max_abs(&(got - want)) <= 1e-12 * max_abs(&a).max(1.0) * (1.0 + trace(&b).norm()));
        }

        #[test]
        fn layouts_preserve_positivity(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=3) {
            let mut rng = rng_for(seed, 2);
            let a = random_positive(n, &mut rng);
            let b = random_positive(m, &mut rng);
            for prod in [kron(&a, &b), direct_sum(&a, &b)] {
                prop_assert!(is_hermitian(&prod));
                prop_assert!(is_strictly_positive(&prod, 1e-10).unwrap());
            }
        }
    }
}
