//! Hermitian eigendecomposition and matrix functions.
//!
//! Everything else in this crate reduces to spectral calculus on Hermitian
//! matrices: `log σ` inside cross entropies, `√ρ` inside fidelities, support
//! projectors, and the Fréchet derivative of the matrix logarithm that drives
//! gradient-based estimation. This module owns those primitives and their
//! numerical contracts.
//!
//! All tolerances are explicit. The eigensolver is required to satisfy a
//! residual contract (reconstruction and unitarity to `1e-10`); the algorithm
//! behind it is an implementation detail.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = DVector<Complex64>;

/// Shorthand for building a complex scalar.
#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Hermiticity tolerance on inputs: `max|A - A*| <= 1e-9`.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Default relative threshold separating genuine support from eigensolver
/// noise. Relative to the largest eigenvalue.
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-10;

/// Eigenvalue slack below zero still accepted as positive semidefinite.
pub const PSD_SLACK: f64 = 1e-10;

/// Relative spectrum floor for [`matrix_sqrt`]. Eigenvalues below
/// `1e-13 · λ_max` are rank-deficiency noise from the eigensolver; taking
/// their square root would amplify them from ~1e-16 to ~1e-8, so they map
/// to zero instead.
pub const SQRT_NOISE_TOL: f64 = 1e-13;

/// Entrywise max-abs norm `max_ij |A_ij|`.
pub fn max_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Entrywise max-abs distance between two matrices of equal shape.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `max|A - A*|`, the distance from the Hermitian cone in max norm.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    let adj = a.adjoint();
    max_abs_diff(a, &adj)
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Eigenvalues are real and sorted ascending; eigenvectors are the matching
/// unitary column set, so `A = U Λ U*`.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Eigenvalues in ascending order.
    pub eigenvalues: DVector<f64>,
    /// Unitary matrix whose columns are the eigenvectors, in eigenvalue order.
    pub eigenvectors: CMatrix,
}

impl HermitianEig {
    /// Rebuild `U f(Λ) U*` for a scalar function applied to the spectrum.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let lam = DMatrix::from_diagonal(&self.eigenvalues.map(|x| c(f(x), 0.0)));
        &self.eigenvectors * lam * self.eigenvectors.adjoint()
    }

    /// Rebuild the original matrix `U Λ U*`.
    pub fn reconstruct(&self) -> CMatrix {
        self.apply(|x| x)
    }

    /// Largest eigenvalue (the spectrum is sorted ascending).
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Rejects inputs farther than [`HERMITIAN_TOL`] from Hermitian and then
/// operates on the Hermitian part `(A + A*)/2`, which keeps the residual
/// contract independent of sub-tolerance input noise.
pub fn eig_hermitian(a: &CMatrix) -> Result<HermitianEig> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch { left: n, right: a.ncols() });
    }
    let deviation = hermitian_deviation(a);
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let herm = (a + a.adjoint()).scale(0.5);
    let max_iters = 100 * n.max(10);
    let sym = herm
        .try_symmetric_eigen(f64::EPSILON, max_iters)
        .ok_or(Error::NoConvergence)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        sym.eigenvalues[i]
            .partial_cmp(&sym.eigenvalues[j])
            .expect("eigenvalues of a Hermitian matrix are finite reals")
    });
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| sym.eigenvalues[i]));
    let columns: Vec<_> = order
        .iter()
        .map(|&i| sym.eigenvectors.column(i).into_owned())
        .collect();
    let eigenvectors = CMatrix::from_columns(&columns);
    Ok(HermitianEig { eigenvalues, eigenvectors })
}

/// Matrix logarithm of a PSD matrix, restricted to its numerical support.
#[derive(Debug, Clone)]
pub struct MatrixLog {
    /// `U diag(log λ_i on support, 0 elsewhere) U*`.
    pub matrix: CMatrix,
    /// Support mask aligned with the ascending eigenvalue order: `true`
    /// where `λ_i > support_tol · λ_max` and the log was taken.
    pub support: Vec<bool>,
    /// The spectral decomposition the log was computed from.
    pub eig: HermitianEig,
}

/// Natural logarithm of a positive semidefinite Hermitian matrix on its
/// numerical support.
///
/// Eigenvalues at or below `support_tol · λ_max` are excluded from the log
/// and reported through the support mask. Inputs may dip to `-1e-10` below
/// zero to absorb eigensolver noise; anything lower is rejected as not PSD.
pub fn matrix_log(a: &CMatrix, support_tol: f64) -> Result<MatrixLog> {
    let eig = eig_hermitian(a)?;
    let min = eig.min_eigenvalue();
    let max = eig.max_eigenvalue();
    if min < -PSD_SLACK * max.abs().max(1.0) {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let threshold = support_tol * max;
    if max <= 0.0 || eig.eigenvalues.iter().all(|&x| x <= threshold) {
        return Err(Error::ZeroMatrix);
    }
    let support: Vec<bool> = eig.eigenvalues.iter().map(|&x| x > threshold).collect();
    let lam = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .zip(support.iter())
            .map(|(&x, &on)| if on { c(x.ln(), 0.0) } else { c(0.0, 0.0) }),
    ));
    let matrix = &eig.eigenvectors * lam * eig.eigenvectors.adjoint();
    Ok(MatrixLog { matrix, support, eig })
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues within [`PSD_SLACK`] below zero are clamped to zero, and
/// eigenvalues below [`SQRT_NOISE_TOL`]` · λ_max` map to zero rather than to
/// the square root of eigensolver noise.
pub fn matrix_sqrt(a: &CMatrix) -> Result<CMatrix> {
    let eig = eig_hermitian(a)?;
    let min = eig.min_eigenvalue();
    let max = eig.max_eigenvalue();
    if min < -PSD_SLACK * max.abs().max(1.0) {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let floor = SQRT_NOISE_TOL * max.max(0.0);
    Ok(eig.apply(|x| if x > floor { x.sqrt() } else { 0.0 }))
}

/// Fréchet derivative of the matrix logarithm at a positive definite `A`,
/// applied to a Hermitian direction `H`.
///
/// In the eigenbasis of `A` this is the Schur product with the first divided
/// differences of `log`: `Φ_ij = (log λ_i - log λ_j)/(λ_i - λ_j)` off the
/// diagonal and `Φ_ii = 1/λ_i`. The divided difference is evaluated through
/// `log1p` so nearly equal eigenvalue pairs lose no precision.
pub fn log_frechet(a: &CMatrix, h: &CMatrix, support_tol: f64) -> Result<CMatrix> {
    if a.nrows() != h.nrows() || a.ncols() != h.ncols() {
        return Err(Error::DimensionMismatch { left: a.nrows(), right: h.nrows() });
    }
    let h_dev = hermitian_deviation(h);
    if h_dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: h_dev });
    }
    let eig = eig_hermitian(a)?;
    let min = eig.min_eigenvalue();
    let max = eig.max_eigenvalue();
    if min <= support_tol * max || min <= 0.0 {
        return Err(Error::Singular { min_eigenvalue: min });
    }
    let n = a.nrows();
    let m = eig.eigenvectors.adjoint() * h * &eig.eigenvectors;
    let mut scaled = m;
    for i in 0..n {
        for j in 0..n {
            let li = eig.eigenvalues[i];
            let lj = eig.eigenvalues[j];
            let phi = if li == lj {
                1.0 / li
            } else {
                let r = (li - lj) / lj;
                r.ln_1p() / (lj * r)
            };
            scaled[(i, j)] *= c(phi, 0.0);
        }
    }
    Ok(&eig.eigenvectors * scaled * eig.eigenvectors.adjoint())
}

/// Number of singular values above `tol · σ_max`. The zero matrix has rank 0.
pub fn numerical_rank(a: &CMatrix, tol: f64) -> usize {
    let sv = a.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * max).count()
}

/// Tensor (Kronecker) product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `max|AB - BA|`, the commutator in max norm. Zero iff `A` and `B` commute.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { left: a.nrows(), right: a.ncols() });
    }
    if a.nrows() != b.nrows() || b.nrows() != b.ncols() {
        return Err(Error::DimensionMismatch { left: a.nrows(), right: b.nrows() });
    }
    Ok(max_norm(&(a * b - b * a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn ginibre(n: usize, m: usize, rng: &mut impl rand::Rng) -> CMatrix {
        CMatrix::from_fn(n, m, |_, _| {
            c(StandardNormal.sample(rng), StandardNormal.sample(rng))
        })
    }

    fn random_hermitian(n: usize, rng: &mut impl rand::Rng) -> CMatrix {
        let g = ginibre(n, n, rng);
        (&g + g.adjoint()).scale(0.5)
    }

    fn random_psd(n: usize, rank: usize, rng: &mut impl rand::Rng) -> CMatrix {
        let g = ginibre(n, rank, rng);
        &g * g.adjoint()
    }

    fn diag(entries: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(
            entries.len(),
            entries.iter().map(|&x| c(x, 0.0)),
        ))
    }

    /// Test-only matrix exponential by scaling-and-squaring Taylor series,
    /// independent of the eigendecomposition path under test.
    fn matrix_exp_series(a: &CMatrix) -> CMatrix {
        let n = a.nrows();
        let norm = max_norm(a) * n as f64;
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let scaled = a.scale(0.5f64.powi(squarings as i32));
        let mut total = CMatrix::identity(n, n);
        let mut term = CMatrix::identity(n, n);
        for k in 1..=24 {
            term = (&term * &scaled).scale(1.0 / k as f64);
            total += &term;
        }
        for _ in 0..squarings {
            total = &total * &total;
        }
        total
    }

    #[test]
    fn eig_diagonal_input() {
        let a = diag(&[1.0, 2.0]);
        let eig = eig_hermitian(&a).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 2.0).abs() < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((eig.eigenvectors[(i, j)].norm() - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eig_pauli_x_spectrum() {
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let eig = eig_hermitian(&x).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_random_residual_contract() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let a = random_hermitian(6, &mut rng);
        let eig = eig_hermitian(&a).unwrap();
        let resid = max_abs_diff(&eig.reconstruct(), &a);
        assert!(resid <= 1e-10 * (1.0 + max_norm(&a)), "residual {resid:e}");
        let unit = max_abs_diff(
            &(eig.eigenvectors.adjoint() * &eig.eigenvectors),
            &CMatrix::identity(6, 6),
        );
        assert!(unit <= 1e-10, "unitarity {unit:e}");
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let a = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(eig_hermitian(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn log_of_identity_is_zero() {
        let log = matrix_log(&CMatrix::identity(3, 3), DEFAULT_SUPPORT_TOL).unwrap();
        assert!(max_norm(&log.matrix) < 1e-14);
        assert!(log.support.iter().all(|&s| s));
    }

    #[test]
    fn log_of_qubit_diagonal() {
        let a = diag(&[2.0 / 3.0, 1.0 / 3.0]);
        let log = matrix_log(&a, DEFAULT_SUPPORT_TOL).unwrap();
        let expect = diag(&[(2.0f64 / 3.0).ln(), (1.0f64 / 3.0).ln()]);
        assert!(max_abs_diff(&log.matrix, &expect) < 1e-14);
    }

    #[test]
    fn log_excludes_null_space() {
        let a = diag(&[0.0, 1.0]);
        let log = matrix_log(&a, DEFAULT_SUPPORT_TOL).unwrap();
        assert_eq!(log.support, vec![false, true]);
        assert!(max_norm(&log.matrix) < 1e-14);
    }

    #[test]
    fn log_rejects_zero_matrix() {
        let a = CMatrix::zeros(2, 2);
        assert!(matches!(matrix_log(&a, DEFAULT_SUPPORT_TOL), Err(Error::ZeroMatrix)));
    }

    #[test]
    fn exp_log_roundtrip_on_random_psd() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for dim in [2usize, 3, 5, 8] {
            let a = random_psd(dim, dim, &mut rng);
            let log = matrix_log(&a, DEFAULT_SUPPORT_TOL).unwrap();
            let back = matrix_exp_series(&log.matrix);
            assert!(
                max_abs_diff(&back, &a) < 1e-9 * (1.0 + max_norm(&a)),
                "dim {dim}: roundtrip residual {}",
                max_abs_diff(&back, &a)
            );
        }
    }

    #[test]
    fn sqrt_of_diagonal() {
        let s = matrix_sqrt(&diag(&[4.0, 9.0])).unwrap();
        assert!(max_abs_diff(&s, &diag(&[2.0, 3.0])) < 1e-12);
        let i = CMatrix::identity(3, 3);
        assert!(max_abs_diff(&matrix_sqrt(&i).unwrap(), &i) < 1e-14);
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let a = random_psd(5, 5, &mut rng);
        let s = matrix_sqrt(&a).unwrap();
        assert!(max_abs_diff(&(&s * &s), &a) < 1e-9);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let a = diag(&[1.0, -0.5]);
        assert!(matches!(matrix_sqrt(&a), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn frechet_at_identity_is_identity_map() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(14);
        let h = random_hermitian(4, &mut rng);
        let d = log_frechet(&CMatrix::identity(4, 4), &h, DEFAULT_SUPPORT_TOL).unwrap();
        assert!(max_abs_diff(&d, &h) < 1e-12);
    }

    #[test]
    fn frechet_on_scalar_matrix_divides() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(15);
        let h = random_hermitian(3, &mut rng);
        let a = diag(&[2.5, 2.5, 2.5]);
        let d = log_frechet(&a, &h, DEFAULT_SUPPORT_TOL).unwrap();
        assert!(max_abs_diff(&d, &h.scale(1.0 / 2.5)) < 1e-12);
    }

    #[test]
    fn frechet_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(16);
        let eps = 1e-6;
        for trial in 0..100 {
            let dim = 2 + trial % 4;
            let a = random_psd(dim, dim, &mut rng) + CMatrix::identity(dim, dim).scale(0.05);
            let h = random_hermitian(dim, &mut rng);
            let d = log_frechet(&a, &h, DEFAULT_SUPPORT_TOL).unwrap();
            let plus = matrix_log(&(&a + h.scale(eps)), DEFAULT_SUPPORT_TOL).unwrap().matrix;
            let minus = matrix_log(&(&a - h.scale(eps)), DEFAULT_SUPPORT_TOL).unwrap().matrix;
            let fd = (plus - minus).scale(0.5 / eps);
            let rel = max_abs_diff(&d, &fd) / max_norm(&fd).max(1e-12);
            assert!(rel < 1e-5, "trial {trial}: relative error {rel:e}");
        }
    }

    #[test]
    fn frechet_rejects_singular() {
        let a = diag(&[0.0, 1.0]);
        let h = CMatrix::identity(2, 2);
        assert!(matches!(
            log_frechet(&a, &h, DEFAULT_SUPPORT_TOL),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn rank_of_projector_and_zero() {
        let mut p = CMatrix::zeros(2, 2);
        p[(0, 0)] = c(1.0, 0.0);
        assert_eq!(numerical_rank(&p, 1e-10), 1);
        assert_eq!(numerical_rank(&CMatrix::zeros(3, 3), 1e-10), 0);
    }

    #[test]
    fn rank_of_low_rank_product() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let b = ginibre(4, 2, &mut rng);
        let cmat = ginibre(2, 4, &mut rng);
        assert_eq!(numerical_rank(&(&b * &cmat), 1e-10), 2);
    }

    #[test]
    fn kron_identity() {
        let i2 = CMatrix::identity(2, 2);
        assert!(max_abs_diff(&kron(&i2, &i2), &CMatrix::identity(4, 4)) < 1e-15);
    }

    #[test]
    fn commutator_cases() {
        let a = diag(&[1.0, 2.0]);
        let b = diag(&[3.0, 4.0]);
        assert_eq!(commutator_norm(&a, &b).unwrap(), 0.0);
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let z = diag(&[1.0, -1.0]);
        // XZ - ZX has max-abs entry 2
        assert!((commutator_norm(&x, &z).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn commutator_dimension_mismatch() {
        let a = CMatrix::identity(2, 2);
        let b = CMatrix::identity(3, 3);
        assert!(matches!(commutator_norm(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn prop_eigenvalues_real_sorted_and_reconstruct(seed in 0u64..1_000, dim in 1usize..=16) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(dim, &mut rng);
            let eig = eig_hermitian(&a).unwrap();
            for w in eig.eigenvalues.as_slice().windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            prop_assert!(max_abs_diff(&eig.reconstruct(), &a) <= 1e-10 * (1.0 + max_norm(&a)));
        }

        #[test]
        fn prop_sqrt_and_log_roundtrips(seed in 0u64..1_000, dim in 1usize..=16) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = random_psd(dim, dim, &mut rng);
            let s = matrix_sqrt(&a).unwrap();
            prop_assert!(max_abs_diff(&(&s * &s), &a) < 1e-9 * (1.0 + max_norm(&a)));
            let log = matrix_log(&a, DEFAULT_SUPPORT_TOL).unwrap();
            let back = matrix_exp_series(&log.matrix);
            prop_assert!(max_abs_diff(&back, &a) < 1e-9 * (1.0 + max_norm(&a)));
        }
    }
}
