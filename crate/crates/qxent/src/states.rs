//! Validated density matrices, pure states, and random ensembles.
//!
//! A [`DensityMatrix`] is Hermitian, positive semidefinite, and unit trace,
//! checked at construction to `1e-9` (slightly looser than the eigensolver
//! contract so tensor products of validated states revalidate cleanly). The
//! spectral decomposition is computed once and cached; every entropy and
//! fidelity call reuses it.
//!
//! Random ensembles are deterministic functions of an owned RNG stream:
//! Haar-distributed pure states and unitaries, and Hilbert-Schmidt-type
//! mixed states from Ginibre factors. Use [`stream_rng`] to derive
//! independent per-task streams from a master seed.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matfun::{
    self, c, eig_hermitian, hermitian_deviation, CMatrix, CVector, HermitianEig,
    DEFAULT_SUPPORT_TOL,
};

/// Validation tolerance for density-matrix invariants (Hermiticity, trace,
/// eigenvalue positivity).
pub const DENSITY_TOL: f64 = 1e-9;

/// Normalization tolerance for pure-state amplitudes.
pub const PURE_NORM_TOL: f64 = 1e-12;

/// A normalized pure state `|ψ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    /// Wrap an amplitude vector, requiring `‖ψ‖ = 1` to [`PURE_NORM_TOL`].
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > PURE_NORM_TOL {
            return Err(Error::InvalidState {
                reason: format!("norm is {norm}, expected 1"),
            });
        }
        Ok(Self { amplitudes })
    }

    /// Normalize an arbitrary nonzero vector into a pure state.
    pub fn normalized(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState { reason: "zero vector".into() });
        }
        Ok(Self { amplitudes: v.unscale(norm) })
    }

    /// Computational basis state `|k⟩` in the given dimension.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut v = CVector::zeros(dim);
        v[k] = c(1.0, 0.0);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// The rank-1 density matrix `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> DensityMatrix {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix::from_matrix(m).expect("a unit vector projects to a valid density matrix")
    }

    /// Overlap `⟨ψ|A|ψ⟩`, returned as its real part.
    pub fn expectation(&self, a: &CMatrix) -> f64 {
        (self.amplitudes.adjoint() * a * &self.amplitudes)[(0, 0)].re
    }
}

/// A Hermitian, positive semidefinite, unit-trace matrix with a cached
/// spectral decomposition.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    data: CMatrix,
    dim: usize,
    eig: OnceLock<HermitianEig>,
}

impl DensityMatrix {
    /// Validate a raw matrix as a density matrix.
    ///
    /// Checks squareness, Hermiticity, unit trace, and eigenvalue positivity,
    /// all to [`DENSITY_TOL`]. The stored matrix is the Hermitian part of the
    /// input (a no-op for exactly Hermitian inputs) and the eigendecomposition
    /// performed during validation is kept.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidDensity {
                reason: format!("matrix is {}x{}, not square", m.nrows(), m.ncols()),
            });
        }
        let dim = m.nrows();
        if dim == 0 {
            return Err(Error::InvalidDensity { reason: "empty matrix".into() });
        }
        let dev = hermitian_deviation(&m);
        if dev > DENSITY_TOL {
            return Err(Error::InvalidDensity {
                reason: format!("not Hermitian: max |M - M*| = {dev:.3e}"),
            });
        }
        let data = (&m + m.adjoint()).scale(0.5);
        let trace = data.trace();
        if (trace.re - 1.0).abs() > DENSITY_TOL || trace.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidDensity {
                reason: format!("trace is {trace}, expected 1"),
            });
        }
        let eig = eig_hermitian(&data).map_err(|e| Error::InvalidDensity {
            reason: format!("eigendecomposition failed: {e}"),
        })?;
        let min = eig.min_eigenvalue();
        if min < -DENSITY_TOL {
            return Err(Error::InvalidDensity {
                reason: format!("negative eigenvalue {min:.3e}"),
            });
        }
        let cache = OnceLock::new();
        let _ = cache.set(eig);
        Ok(Self { data, dim, eig: cache })
    }

    /// The density matrix of a pure state.
    pub fn from_pure(psi: &PureState) -> Self {
        psi.density()
    }

    /// The maximally mixed state `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let m = CMatrix::identity(dim, dim).scale(1.0 / dim as f64);
        Self::from_matrix(m).expect("I/n is a valid density matrix")
    }

    /// A diagonal state from a probability vector.
    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        let m = CMatrix::from_diagonal(&CVector::from_iterator(
            probs.len(),
            probs.iter().map(|&p| c(p, 0.0)),
        ));
        Self::from_matrix(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    /// Cached spectral decomposition.
    pub fn eig(&self) -> &HermitianEig {
        self.eig.get_or_init(|| {
            eig_hermitian(&self.data).expect("validated density matrices decompose")
        })
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &nalgebra::DVector<f64> {
        &self.eig().eigenvalues
    }

    /// Orthogonal projector onto the numerical support: eigenvectors with
    /// `λ > tol · λ_max`.
    pub fn support_projector(&self, tol: f64) -> CMatrix {
        let eig = self.eig();
        let threshold = tol * eig.max_eigenvalue();
        let mut p = CMatrix::zeros(self.dim, self.dim);
        for (i, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > threshold {
                let col = eig.eigenvectors.column(i);
                p += col * col.adjoint();
            }
        }
        p
    }

    /// Rank of the numerical support at the default support threshold.
    pub fn support_rank(&self) -> usize {
        let eig = self.eig();
        let threshold = DEFAULT_SUPPORT_TOL * eig.max_eigenvalue();
        eig.eigenvalues.iter().filter(|&&x| x > threshold).count()
    }

    /// Expectation value `tr(Aρ)`, returned as its real part.
    pub fn expectation(&self, a: &CMatrix) -> f64 {
        trace_product(a, &self.data).re
    }
}

/// `tr(AB)` without forming the product matrix.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            total += a[(i, k)] * b[(k, i)];
        }
    }
    total
}

/// Trace distance `½ tr|ρ - σ|`.
///
/// The difference is sign-canonicalized before decomposition so the result is
/// exactly symmetric in its arguments, bit for bit.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { left: rho.dim(), right: sigma.dim() });
    }
    let mut diff = rho.data() - sigma.data();
    if let Some(z) = diff.iter().find(|z| z.re != 0.0 || z.im != 0.0) {
        if z.re < 0.0 || (z.re == 0.0 && z.im < 0.0) {
            diff = -diff;
        }
    }
    let eig = eig_hermitian(&diff)?;
    Ok(0.5 * eig.eigenvalues.iter().map(|x| x.abs()).sum::<f64>())
}

/// Tensor product of two states, `ρ₁ ⊗ ρ₂`.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    let m = matfun::kron(a.data(), b.data());
    DensityMatrix::from_matrix(m).expect("tensor product of valid states is valid")
}

/// Derive the RNG stream for one task from a master seed. Streams with
/// different indices are statistically independent and the mapping is stable
/// across runs and platforms.
pub fn stream_rng(master_seed: u64, stream_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_index);
    rng
}

fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Haar-distributed random pure state: a complex standard-normal vector,
/// normalized.
pub fn random_pure(dim: usize, rng: &mut impl Rng) -> PureState {
    assert!(dim > 0, "dimension must be positive");
    loop {
        let v = CVector::from_fn(dim, |_, _| {
            c(StandardNormal.sample(rng), StandardNormal.sample(rng))
        });
        if let Ok(psi) = PureState::normalized(v) {
            return psi;
        }
    }
}

/// Random mixed state of the given rank: `ρ = GG*/tr(GG*)` for a
/// `dim × rank` Ginibre factor `G` (a Hilbert-Schmidt-type ensemble).
pub fn random_density(dim: usize, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    assert!(dim > 0, "dimension must be positive");
    assert!(rank >= 1 && rank <= dim, "rank must be in 1..=dim");
    loop {
        let g = ginibre(dim, rank, rng);
        let m = &g * g.adjoint();
        let trace = m.trace().re;
        if trace > 0.0 {
            if let Ok(rho) = DensityMatrix::from_matrix(m.unscale(trace)) {
                return rho;
            }
        }
    }
}

/// Haar-distributed random unitary: QR of a Ginibre matrix with the phases of
/// the `R` diagonal absorbed into `Q`.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
    assert!(dim > 0, "dimension must be positive");
    let g = ginibre(dim, dim, rng);
    let qr = g.qr();
    let r = qr.r();
    let q = qr.q();
    let phases = DMatrix::from_diagonal(&CVector::from_iterator(
        dim,
        (0..dim).map(|i| {
            let d = r[(i, i)];
            if d.norm() == 0.0 {
                c(1.0, 0.0)
            } else {
                d.unscale(d.norm())
            }
        }),
    ));
    q * phases
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::{max_abs_diff, numerical_rank};
    use proptest::prelude::*;

    #[test]
    fn from_matrix_accepts_valid_states() {
        assert!(DensityMatrix::from_matrix(CMatrix::identity(2, 2).scale(0.5)).is_ok());
        assert!(DensityMatrix::from_diagonal(&[2.0 / 3.0, 1.0 / 3.0]).is_ok());
    }

    #[test]
    fn from_matrix_rejects_bad_trace() {
        let err = DensityMatrix::from_matrix(CMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::InvalidDensity { .. }));
    }

    #[test]
    fn from_matrix_rejects_negative_eigenvalue() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.5, 0.0), c(-0.5, 0.0)]));
        assert!(DensityMatrix::from_matrix(m).is_err());
    }

    #[test]
    fn pure_basis_states() {
        let zero = PureState::basis(2, 0).density();
        assert!((zero.data()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(zero.data()[(1, 1)].norm() < 1e-15);

        let plus = PureState::normalized(CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]))
            .unwrap()
            .density();
        for i in 0..2 {
            for j in 0..2 {
                assert!((plus.data()[(i, j)].re - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn random_pure_density_is_rank_one() {
        let mut rng = stream_rng(3, 0);
        let rho = random_pure(5, &mut rng).density();
        assert_eq!(numerical_rank(rho.data(), 1e-10), 1);
        assert!((rho.data().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn support_projector_cases() {
        let mut rng = stream_rng(4, 0);
        let full = random_density(3, 3, &mut rng);
        assert!(max_abs_diff(&full.support_projector(1e-10), &CMatrix::identity(3, 3)) < 1e-9);

        let zero = PureState::basis(2, 0).density();
        let p = zero.support_projector(1e-10);
        assert!((p[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(p[(1, 1)].norm() < 1e-12);

        let rank2 = random_density(4, 2, &mut rng);
        let p = rank2.support_projector(1e-10);
        assert_eq!(numerical_rank(&p, 1e-8), 2);
    }

    #[test]
    fn random_ensembles_satisfy_invariants_and_determinism() {
        // dim 1 degenerates to the scalar 1
        let mut rng = stream_rng(5, 0);
        let one = random_density(1, 1, &mut rng);
        assert!((one.data()[(0, 0)].re - 1.0).abs() < 1e-12);
        let u1 = random_unitary(1, &mut rng);
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-12);

        let mut a = stream_rng(99, 7);
        let mut b = stream_rng(99, 7);
        let ra = random_density(4, 3, &mut a);
        let rb = random_density(4, 3, &mut b);
        assert_eq!(ra.data(), rb.data(), "same stream must reproduce bit-identical states");
        let ua = random_unitary(4, &mut a);
        let ub = random_unitary(4, &mut b);
        assert_eq!(ua, ub);

        let mut rng = stream_rng(6, 0);
        let u = random_unitary(5, &mut rng);
        let resid = max_abs_diff(&(u.adjoint() * &u), &CMatrix::identity(5, 5));
        assert!(resid < 1e-9);
    }

    #[test]
    fn full_rank_draws_are_full_rank() {
        let mut rng = stream_rng(7, 0);
        let mut full_rank = 0;
        let trials = 1000;
        for _ in 0..trials {
            let rho = random_density(4, 4, &mut rng);
            let full = rho.eigenvalues()[0] > 0.0
                && max_abs_diff(&rho.support_projector(1e-10), &CMatrix::identity(4, 4)) < 1e-9;
            if full {
                full_rank += 1;
            }
        }
        assert!(full_rank >= 990, "only {full_rank}/{trials} draws were full rank");
    }

    #[test]
    fn trace_distance_cases() {
        let mut rng = stream_rng(8, 0);
        let rho = random_density(3, 3, &mut rng);
        assert_eq!(trace_distance(&rho, &rho).unwrap(), 0.0);

        let zero = PureState::basis(2, 0).density();
        let one = PureState::basis(2, 1).density();
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);

        let p = 0.81;
        let q = 0.33;
        let a = DensityMatrix::from_diagonal(&[p, 1.0 - p]).unwrap();
        let b = DensityMatrix::from_diagonal(&[q, 1.0 - q]).unwrap();
        assert!((trace_distance(&a, &b).unwrap() - (p - q).abs()) < 1e-12);
    }

    #[test]
    fn tensor_products() {
        let half = DensityMatrix::maximally_mixed(2);
        let quarter = tensor(&half, &half);
        assert!(max_abs_diff(quarter.data(), &CMatrix::identity(4, 4).scale(0.25)) < 1e-15);

        let zero = PureState::basis(2, 0).density();
        let one = PureState::basis(2, 1).density();
        let zo = tensor(&zero, &one);
        assert!((zo.data()[(1, 1)].re - 1.0).abs() < 1e-15);

        let mut rng = stream_rng(9, 0);
        let a = random_density(2, 2, &mut rng);
        let b = random_density(3, 3, &mut rng);
        let ab = tensor(&a, &b);
        assert_eq!(ab.dim(), 6);
        assert!((ab.data().trace().re - 1.0).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn prop_constructors_revalidate(seed in 0u64..500, dim in 1usize..=6) {
            let mut rng = stream_rng(seed, 1);
            let rank = 1 + (seed as usize) % dim;
            let rho = random_density(dim, rank, &mut rng);
            prop_assert!(DensityMatrix::from_matrix(rho.data().clone()).is_ok());
            let psi = random_pure(dim, &mut rng);
            prop_assert!(DensityMatrix::from_matrix(psi.density().data().clone()).is_ok());
        }

        #[test]
        fn prop_trace_distance_is_a_metric(seed in 0u64..10_000) {
            let mut rng = stream_rng(seed, 2);
            let dim = 2 + (seed as usize) % 3;
            let a = random_density(dim, dim, &mut rng);
            let b = random_density(dim, dim, &mut rng);
            let cst = random_density(dim, dim, &mut rng);
            let dab = trace_distance(&a, &b).unwrap();
            let dba = trace_distance(&b, &a).unwrap();
            prop_assert_eq!(dab, dba, "symmetry must be exact");
            let dac = trace_distance(&a, &cst).unwrap();
            let dcb = trace_distance(&cst, &b).unwrap();
            prop_assert!(dab <= dac + dcb + 1e-12, "triangle inequality violated");
            prop_assert!((0.0..=1.0 + 1e-12).contains(&dab));
        }
    }
}
