//! State estimation: linear inversion and direct optimization.
//!
//! Two estimators recover a state from tomographically complete measurement
//! frequencies, and a third minimizes cross entropy against a known state:
//!
//! - [`linear_inversion`]: least squares on `tr(E_jk X) = q_jk` over
//!   Hermitian `X` with `tr X = 1`, repaired into a state by
//!   [`project_to_density`];
//! - [`maximize_likelihood`]: first-order ascent of
//!   `Σ_j n_j Σ_k q_jk log tr(E_jk σ)`;
//! - [`minimize_cross_entropy`]: first-order descent of `S(ρ, σ)`.
//!
//! The optimization variable is a [`CholeskyParam`]: a lower-triangular `T`
//! mapped to `σ(T) = TT*/tr(TT*)`. Iterates stay inside the PSD cone, and
//! for a full-rank data state the cross entropy blows up toward the cone
//! boundary, so the objective itself is a barrier and the matrix logarithm
//! never sees boundary eigenvalues.
//!
//! Both optimizers are the same monotone scheme: gradient descent with a
//! Barzilai-Borwein initial step and Armijo backtracking, so every accepted
//! step strictly decreases the objective.

use nalgebra::{DMatrix, DVector};

use crate::entropy::{quantum_cross_entropy, von_neumann, ExtendedReal};
use crate::error::{Error, Result};
use crate::matfun::{c, eig_hermitian, log_frechet, CMatrix, DEFAULT_SUPPORT_TOL};
use crate::measurement::TomographicSet;
use crate::states::{trace_product, DensityMatrix};

/// Lower-triangular parameterization of a density matrix:
/// `σ(T) = TT*/tr(TT*)`.
///
/// The diagonal of `T` is real and nonnegative (the canonical gauge; column
/// phases do not change `σ`), and `σ(T)` is full rank exactly when no
/// diagonal entry is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyParam {
    t: CMatrix,
}

impl CholeskyParam {
    /// Validate a lower-triangular factor with real nonnegative diagonal.
    pub fn new(t: CMatrix) -> Result<Self> {
        let n = t.nrows();
        if n != t.ncols() {
            return Err(Error::DimensionMismatch { left: n, right: t.ncols() });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if t[(i, j)].norm() != 0.0 {
                    return Err(Error::InvalidDensity {
                        reason: format!("parameter factor has upper-triangular entry at ({i},{j})"),
                    });
                }
            }
            if t[(i, i)].im != 0.0 || t[(i, i)].re < 0.0 {
                return Err(Error::InvalidDensity {
                    reason: format!("diagonal entry {i} must be real and nonnegative"),
                });
            }
        }
        if t.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::ZeroMatrix);
        }
        Ok(Self { t })
    }

    /// The default initialization `T = I/√dim`, i.e. the maximally mixed
    /// state.
    pub fn identity_init(dim: usize) -> Self {
        Self { t: CMatrix::identity(dim, dim).scale(1.0 / (dim as f64).sqrt()) }
    }

    /// Cholesky factor of a full-rank state; fails on singular input.
    pub fn from_density(sigma: &DensityMatrix) -> Result<Self> {
        let chol = nalgebra::Cholesky::new(sigma.data().clone())
            .ok_or(Error::Singular { min_eigenvalue: sigma.eigenvalues()[0] })?;
        Ok(Self { t: chol.l() })
    }

    /// Rebuild from the packed real parameter vector (column-major lower
    /// triangle: one real per diagonal entry, a real/imaginary pair per
    /// off-diagonal entry). Negative diagonal entries are folded back into
    /// the canonical gauge by flipping their column sign, which leaves
    /// `σ(T)` unchanged.
    pub fn from_vector(dim: usize, x: &[f64]) -> Result<Self> {
        if x.len() != dim * dim {
            return Err(Error::DimensionMismatch { left: x.len(), right: dim * dim });
        }
        let mut t = build_factor(dim, x);
        for j in 0..dim {
            if t[(j, j)].re < 0.0 {
                for i in j..dim {
                    t[(i, j)] = -t[(i, j)];
                }
            }
        }
        Self::new(t)
    }

    /// Pack into the real parameter vector. Inverse of [`Self::from_vector`]
    /// on the canonical gauge.
    pub fn to_vector(&self) -> Vec<f64> {
        let n = self.t.nrows();
        let mut x = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in j..n {
                if i == j {
                    x.push(self.t[(i, j)].re);
                } else {
                    x.push(self.t[(i, j)].re);
                    x.push(self.t[(i, j)].im);
                }
            }
        }
        x
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn factor(&self) -> &CMatrix {
        &self.t
    }

    /// The raw matrix `TT*/tr(TT*)`.
    pub fn sigma_matrix(&self) -> CMatrix {
        sigma_of_factor(&self.t)
    }

    /// The parameterized state, validated.
    pub fn density(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_matrix(self.sigma_matrix())
    }
}

fn build_factor(dim: usize, x: &[f64]) -> CMatrix {
    let mut t = CMatrix::zeros(dim, dim);
    let mut idx = 0;
    for j in 0..dim {
        for i in j..dim {
            if i == j {
                t[(i, j)] = c(x[idx], 0.0);
                idx += 1;
            } else {
                t[(i, j)] = c(x[idx], x[idx + 1]);
                idx += 2;
            }
        }
    }
    t
}

fn sigma_of_factor(t: &CMatrix) -> CMatrix {
    let m = t * t.adjoint();
    let trace = m.trace().re;
    m.unscale(trace)
}

/// Pull a gradient on `σ` back through `σ(T) = TT*/tr(TT*)`.
///
/// For `df = tr(Ĝ dσ)` with Hermitian `Ĝ`, the gradient with respect to the
/// packed parameters of `T` is read off `W = (Ĝ - tr(Ĝσ) I) T / tr(TT*)`:
/// `∂f/∂Re T_ij = 2 Re W_ij` and `∂f/∂Im T_ij = 2 Im W_ij`.
fn pack_gradient(t: &CMatrix, g_hat: &CMatrix) -> Vec<f64> {
    let n = t.nrows();
    let tau = (t * t.adjoint()).trace().re;
    let sigma = sigma_of_factor(t);
    let beta = trace_product(g_hat, &sigma).re;
    let shifted = g_hat - CMatrix::identity(n, n).scale(beta);
    let w = (&shifted * t).unscale(tau);
    let mut grad = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in j..n {
            if i == j {
                grad.push(2.0 * w[(i, j)].re);
            } else {
                grad.push(2.0 * w[(i, j)].re);
                grad.push(2.0 * w[(i, j)].im);
            }
        }
    }
    grad
}

/// Gradient of `S(ρ, σ(T))` with respect to the packed real parameters of
/// `T`. Requires `σ(T)` full rank so the log derivative exists.
pub fn cross_entropy_gradient(rho: &DensityMatrix, param: &CholeskyParam) -> Result<Vec<f64>> {
    if rho.dim() != param.dim() {
        return Err(Error::DimensionMismatch { left: rho.dim(), right: param.dim() });
    }
    let sigma = param.sigma_matrix();
    let dlog = log_frechet(&sigma, rho.data(), DEFAULT_SUPPORT_TOL)?;
    Ok(pack_gradient(param.factor(), &(-dlog)))
}

/// Stopping and line-search controls for the first-order optimizers.
#[derive(Debug, Clone, Copy)]
pub struct OptimizerOptions {
    /// Gradient-norm stopping threshold.
    pub gtol: f64,
    /// Iteration cap.
    pub max_iters: usize,
    /// Step shrink factor for backtracking.
    pub backtrack: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self { gtol: 1e-7, max_iters: 5000, backtrack: 0.5, armijo: 1e-4 }
    }
}

/// Outcome of one optimization run.
#[derive(Debug, Clone)]
pub struct OptimizerReport {
    /// Accepted iterations.
    pub iterations: usize,
    /// Final objective value (the minimized quantity; for likelihood runs
    /// this is `-l(σ)`).
    pub objective: f64,
    /// Gradient norm at the final iterate.
    pub gradient_norm: f64,
    /// The estimated state `σ*`.
    pub estimate: DensityMatrix,
    /// Whether the gradient norm fell below `gtol`.
    pub converged: bool,
    /// Objective value at the start and after each accepted step;
    /// non-increasing by construction.
    pub objective_trace: Vec<f64>,
}

trait Objective {
    /// Objective value at a raw parameter vector; `+∞` encodes infeasible.
    fn value(&self, t: &CMatrix) -> f64;
    /// Gradient at a feasible point.
    fn gradient(&self, t: &CMatrix) -> Result<Vec<f64>>;
}

struct CrossEntropyObjective<'a> {
    rho: &'a DensityMatrix,
}

impl Objective for CrossEntropyObjective<'_> {
    fn value(&self, t: &CMatrix) -> f64 {
        let sigma = match DensityMatrix::from_matrix(sigma_of_factor(t)) {
            Ok(s) => s,
            Err(_) => return f64::INFINITY,
        };
        match quantum_cross_entropy(self.rho, &sigma) {
            Ok(ExtendedReal::Finite(v)) => v,
            _ => f64::INFINITY,
        }
    }

    fn gradient(&self, t: &CMatrix) -> Result<Vec<f64>> {
        let sigma = sigma_of_factor(t);
        let dlog = log_frechet(&sigma, self.rho.data(), DEFAULT_SUPPORT_TOL)?;
        Ok(pack_gradient(t, &(-dlog)))
    }
}

struct LikelihoodObjective<'a> {
    set: &'a TomographicSet,
    freqs: &'a [Vec<f64>],
}

impl LikelihoodObjective<'_> {
    /// Weighted terms `(w_jk, E_jk)` with `w_jk = n_j q_jk > 0`.
    fn terms(&self) -> impl Iterator<Item = (f64, &CMatrix)> {
        self.set.groups().iter().zip(self.set.weights()).zip(self.freqs).flat_map(
            |((group, &n_j), row)| {
                group
                    .projectors()
                    .iter()
                    .zip(row.iter())
                    .filter(|(_, &q)| q > 0.0)
                    .map(move |(e, &q)| (n_j * q, e))
            },
        )
    }
}

impl Objective for LikelihoodObjective<'_> {
    fn value(&self, t: &CMatrix) -> f64 {
        let sigma = sigma_of_factor(t);
        let mut total = 0.0;
        for (w, e) in self.terms() {
            let p = trace_product(e, &sigma).re;
            if p <= 0.0 {
                return f64::INFINITY;
            }
            total -= w * p.ln();
        }
        total
    }

    fn gradient(&self, t: &CMatrix) -> Result<Vec<f64>> {
        let sigma = sigma_of_factor(t);
        let n = sigma.nrows();
        let mut g_hat = CMatrix::zeros(n, n);
        for (w, e) in self.terms() {
            let p = trace_product(e, &sigma).re;
            if p <= 0.0 {
                return Err(Error::ZeroProbability);
            }
            g_hat -= e.scale(w / p);
        }
        Ok(pack_gradient(t, &g_hat))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn run_optimizer(
    objective: &dyn Objective,
    init: &CholeskyParam,
    opts: &OptimizerOptions,
) -> Result<OptimizerReport> {
    let dim = init.dim();
    let mut x = init.to_vector();
    let mut t = build_factor(dim, &x);
    let mut f = objective.value(&t);
    if !f.is_finite() {
        return Err(Error::InvalidDensity {
            reason: "objective is infinite at the initial point".into(),
        });
    }
    let mut g = objective.gradient(&t)?;
    let mut trace = vec![f];
    let mut step = 1.0 / norm(&g).max(1.0);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iters {
        let gnorm = norm(&g);
        if gnorm < opts.gtol {
            converged = true;
            break;
        }
        // Armijo backtracking along the negative gradient
        let mut accepted = None;
        let mut trial = step;
        while trial > 1e-18 {
            let x_new: Vec<f64> =
                x.iter().zip(g.iter()).map(|(xi, gi)| xi - trial * gi).collect();
            let t_new = build_factor(dim, &x_new);
            let f_new = objective.value(&t_new);
            if f_new <= f - opts.armijo * trial * gnorm * gnorm {
                accepted = Some((x_new, t_new, f_new, trial));
                break;
            }
            trial *= opts.backtrack;
        }
        let Some((x_new, t_new, f_new, used)) = accepted else {
            // no step of any length makes progress; the gradient norm is the
            // honest convergence report
            break;
        };
        let g_new = objective.gradient(&t_new)?;
        // Barzilai-Borwein step seed for the next iteration
        let mut s_dot_s = 0.0;
        let mut s_dot_y = 0.0;
        for ((xn, xo), (gn, go)) in x_new.iter().zip(&x).zip(g_new.iter().zip(&g)) {
            let s = xn - xo;
            let y = gn - go;
            s_dot_s += s * s;
            s_dot_y += s * y;
        }
        step = if s_dot_y > 0.0 && s_dot_s.is_finite() {
            (s_dot_s / s_dot_y).clamp(1e-12, 1e6)
        } else {
            used
        };
        x = x_new;
        t = t_new;
        f = f_new;
        g = g_new;
        trace.push(f);
        iterations += 1;
    }

    let estimate = DensityMatrix::from_matrix(sigma_of_factor(&t))?;
    Ok(OptimizerReport {
        iterations,
        objective: f,
        gradient_norm: norm(&g),
        estimate,
        converged,
        objective_trace: trace,
    })
}

/// Minimize `S(ρ, σ(T))` over the parameterized states.
///
/// For full-rank `ρ` the unique minimizer is `σ = ρ`. Rank-deficient targets
/// put the minimizer on the cone boundary where the objective is non-smooth;
/// they are outside this routine's contract.
pub fn minimize_cross_entropy(
    rho: &DensityMatrix,
    init: &CholeskyParam,
    opts: &OptimizerOptions,
) -> Result<OptimizerReport> {
    if rho.dim() != init.dim() {
        return Err(Error::DimensionMismatch { left: rho.dim(), right: init.dim() });
    }
    run_optimizer(&CrossEntropyObjective { rho }, init, opts)
}

/// Minimize the relative entropy `S(ρ‖σ(T))`.
///
/// This is the same optimization as [`minimize_cross_entropy`] because the
/// two objectives differ by the constant `S(ρ)`; the run is shared iterate
/// for iterate and only the reported objective values are shifted.
pub fn minimize_relative_entropy(
    rho: &DensityMatrix,
    init: &CholeskyParam,
    opts: &OptimizerOptions,
) -> Result<OptimizerReport> {
    let mut report = minimize_cross_entropy(rho, init, opts)?;
    let shift = von_neumann(rho);
    report.objective -= shift;
    for v in &mut report.objective_trace {
        *v -= shift;
    }
    Ok(report)
}

/// Maximize the grouped average log-likelihood
/// `l(σ) = Σ_j n_j Σ_k q_jk log tr(E_jk σ(T))` for supplied frequencies.
///
/// Internally minimizes `-l`; the report's objective fields refer to the
/// minimized quantity.
pub fn maximize_likelihood(
    set: &TomographicSet,
    freqs: &[Vec<f64>],
    init: &CholeskyParam,
    opts: &OptimizerOptions,
) -> Result<OptimizerReport> {
    validate_freqs(set, freqs)?;
    if set.dim() != init.dim() {
        return Err(Error::DimensionMismatch { left: set.dim(), right: init.dim() });
    }
    run_optimizer(&LikelihoodObjective { set, freqs }, init, opts)
}

fn validate_freqs(set: &TomographicSet, freqs: &[Vec<f64>]) -> Result<()> {
    if freqs.len() != set.len() {
        return Err(Error::DimensionMismatch { left: freqs.len(), right: set.len() });
    }
    for (j, (group, row)) in set.groups().iter().zip(freqs).enumerate() {
        if row.len() != group.len() {
            return Err(Error::DimensionMismatch { left: row.len(), right: group.len() });
        }
        if row.iter().any(|&q| q.is_nan() || q < 0.0) {
            return Err(Error::InvalidDistribution {
                reason: format!("negative or NaN frequency in group {j}"),
            });
        }
    }
    Ok(())
}

/// Least-squares solution of `tr(E_jk X) = q_jk` over Hermitian `X` with
/// `tr X = 1`. The result may have negative eigenvalues when the
/// frequencies carry sampling noise; see [`project_to_density`].
pub fn linear_inversion(set: &TomographicSet, freqs: &[Vec<f64>]) -> Result<CMatrix> {
    validate_freqs(set, freqs)?;
    let dim = set.dim();
    let basis = traceless_hermitian_basis(dim);
    let rows: usize = set.groups().iter().map(|g| g.len()).sum();
    let mut a = DMatrix::<f64>::zeros(rows, basis.len());
    let mut b = DVector::<f64>::zeros(rows);
    let mut r = 0;
    for (group, row) in set.groups().iter().zip(freqs) {
        for (e, &q) in group.projectors().iter().zip(row.iter()) {
            for (col, basis_el) in basis.iter().enumerate() {
                a[(r, col)] = trace_product(e, basis_el).re;
            }
            b[r] = q - e.trace().re / dim as f64;
            r += 1;
        }
    }
    let svd = a.svd(true, true);
    let y = svd
        .solve(&b, 1e-12)
        .map_err(|_| Error::IncompleteSet { rank: 0, required: dim * dim })?;
    let mut x = CMatrix::identity(dim, dim).scale(1.0 / dim as f64);
    for (coeff, basis_el) in y.iter().zip(&basis) {
        x += basis_el.scale(*coeff);
    }
    Ok(x)
}

/// Orthonormal (in the trace inner product) basis of traceless Hermitian
/// matrices: generalized Gell-Mann construction.
fn traceless_hermitian_basis(dim: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(dim * dim - 1);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..dim {
        for i in (j + 1)..dim {
            let mut sym = CMatrix::zeros(dim, dim);
            sym[(i, j)] = c(s, 0.0);
            sym[(j, i)] = c(s, 0.0);
            basis.push(sym);
            let mut asym = CMatrix::zeros(dim, dim);
            asym[(i, j)] = c(0.0, s);
            asym[(j, i)] = c(0.0, -s);
            basis.push(asym);
        }
    }
    for k in 1..dim {
        let norm = 1.0 / ((k * (k + 1)) as f64).sqrt();
        let mut d = CMatrix::zeros(dim, dim);
        for i in 0..k {
            d[(i, i)] = c(norm, 0.0);
        }
        d[(k, k)] = c(-(k as f64) * norm, 0.0);
        basis.push(d);
    }
    basis
}

/// Repair a Hermitian matrix into a state: clip negative eigenvalues at zero
/// and renormalize the trace to one.
pub fn project_to_density(x: &CMatrix) -> Result<DensityMatrix> {
    let eig = eig_hermitian(x)?;
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let mut m = CMatrix::zeros(x.nrows(), x.ncols());
    for (i, &v) in clipped.iter().enumerate() {
        if v > 0.0 {
            let col = eig.eigenvectors.column(i);
            m += (col * col.adjoint()).scale(v / total);
        }
    }
    DensityMatrix::from_matrix(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::max_abs_diff;
    use crate::states::{random_density, stream_rng, trace_distance, PureState};

    fn finite_difference_gradient(
        value: impl Fn(&[f64]) -> f64,
        x: &[f64],
        eps: f64,
    ) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut plus = x.to_vec();
                plus[i] += eps;
                let mut minus = x.to_vec();
                minus[i] -= eps;
                (value(&plus) - value(&minus)) / (2.0 * eps)
            })
            .collect()
    }

    fn cross_entropy_value(rho: &DensityMatrix) -> impl Fn(&[f64]) -> f64 + '_ {
        move |x: &[f64]| {
            let t = build_factor(rho.dim(), x);
            CrossEntropyObjective { rho }.value(&t)
        }
    }

    #[test]
    fn parameter_vector_roundtrip() {
        let mut rng = stream_rng(61, 0);
        let sigma = random_density(3, 3, &mut rng);
        let param = CholeskyParam::from_density(&sigma).unwrap();
        let x = param.to_vector();
        let back = CholeskyParam::from_vector(3, &x).unwrap();
        assert!(max_abs_diff(back.factor(), param.factor()) < 1e-14);
        assert!(max_abs_diff(&param.sigma_matrix(), sigma.data()) < 1e-12);
    }

    #[test]
    fn from_vector_canonicalizes_column_signs() {
        let x = vec![-0.5, 0.3, -0.2, 0.7];
        let param = CholeskyParam::from_vector(2, &x).unwrap();
        assert!(param.factor()[(0, 0)].re > 0.0);
        let raw = build_factor(2, &x);
        assert!(max_abs_diff(&sigma_of_factor(&raw), &param.sigma_matrix()) < 1e-15);
    }

    #[test]
    fn identity_init_is_maximally_mixed() {
        let param = CholeskyParam::identity_init(4);
        let sigma = param.density().unwrap();
        assert!(max_abs_diff(sigma.data(), DensityMatrix::maximally_mixed(4).data()) < 1e-15);
    }

    #[test]
    fn sigma_is_full_rank_iff_no_zero_diagonal() {
        let full = CholeskyParam::identity_init(3).density().unwrap();
        assert_eq!(full.support_rank(), 3);

        let mut t = CMatrix::identity(3, 3);
        t[(1, 1)] = c(0.0, 0.0); // one zero diagonal entry
        let param = CholeskyParam::new(t).unwrap();
        assert_eq!(param.density().unwrap().support_rank(), 2);
    }

    #[test]
    fn gradient_vanishes_at_the_minimum() {
        let mut rng = stream_rng(62, 0);
        let rho = random_density(3, 3, &mut rng);
        let param = CholeskyParam::from_density(&rho).unwrap();
        let g = cross_entropy_gradient(&rho, &param).unwrap();
        assert!(norm(&g) < 1e-7, "gradient norm {:e} at the stationary point", norm(&g));

        let mixed = DensityMatrix::maximally_mixed(3);
        let at_mixed = CholeskyParam::from_density(&mixed).unwrap();
        let g = cross_entropy_gradient(&mixed, &at_mixed).unwrap();
        assert!(norm(&g) < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = stream_rng(63, 0);
        for trial in 0..100 {
            let dim = 2 + trial % 3;
            let rho = random_density(dim, dim, &mut rng);
            let sigma = random_density(dim, dim, &mut rng);
            let param = CholeskyParam::from_density(&sigma).unwrap();
            let g = cross_entropy_gradient(&rho, &param).unwrap();
            let fd = finite_difference_gradient(cross_entropy_value(&rho), &param.to_vector(), 1e-6);
            let diff: f64 =
                g.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let rel = diff / norm(&fd).max(1e-12);
            assert!(rel < 1e-5, "trial {trial}: relative gradient error {rel:e}");
        }
    }

    #[test]
    fn likelihood_gradient_matches_finite_differences() {
        let mut rng = stream_rng(64, 0);
        let set = TomographicSet::pauli(1);
        for _ in 0..20 {
            let rho = random_density(2, 2, &mut rng);
            let freqs = set.exact_probabilities(&rho).unwrap();
            let sigma = random_density(2, 2, &mut rng);
            let param = CholeskyParam::from_density(&sigma).unwrap();
            let objective = LikelihoodObjective { set: &set, freqs: &freqs };
            let g = objective.gradient(param.factor()).unwrap();
            let fd = finite_difference_gradient(
                |x| objective.value(&build_factor(2, x)),
                &param.to_vector(),
                1e-6,
            );
            let diff: f64 =
                g.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            assert!(diff / norm(&fd).max(1e-12) < 1e-5);
        }
    }

    #[test]
    fn minimize_cross_entropy_recovers_the_state() {
        let mut rng = stream_rng(65, 0);
        let rho = random_density(2, 2, &mut rng);
        let init = CholeskyParam::from_density(&random_density(2, 2, &mut rng)).unwrap();
        let report =
            minimize_cross_entropy(&rho, &init, &OptimizerOptions::default()).unwrap();
        assert!(report.converged, "did not converge: gnorm {:e}", report.gradient_norm);
        assert!(report.gradient_norm < OptimizerOptions::default().gtol);
        let dist = trace_distance(&report.estimate, &rho).unwrap();
        assert!(dist < 1e-4, "estimate misses the target by {dist:e}");
    }

    #[test]
    fn minimize_cross_entropy_fixed_point_mixed() {
        let rho = DensityMatrix::maximally_mixed(2);
        let report = minimize_cross_entropy(
            &rho,
            &CholeskyParam::identity_init(2),
            &OptimizerOptions::default(),
        )
        .unwrap();
        assert!(report.converged);
        assert!(trace_distance(&report.estimate, &rho).unwrap() < 1e-9);
    }

    #[test]
    fn minimize_cross_entropy_dim_four() {
        let mut rng = stream_rng(66, 0);
        let rho = random_density(4, 4, &mut rng);
        let report = minimize_cross_entropy(
            &rho,
            &CholeskyParam::identity_init(4),
            &OptimizerOptions::default(),
        )
        .unwrap();
        let dist = trace_distance(&report.estimate, &rho).unwrap();
        assert!(dist < 1e-3, "dim-4 estimate misses by {dist:e}");
    }

    #[test]
    fn objective_trace_is_monotone() {
        let mut rng = stream_rng(67, 0);
        let rho = random_density(3, 3, &mut rng);
        let init = CholeskyParam::from_density(&random_density(3, 3, &mut rng)).unwrap();
        let report =
            minimize_cross_entropy(&rho, &init, &OptimizerOptions::default()).unwrap();
        for w in report.objective_trace.windows(2) {
            assert!(w[1] <= w[0], "objective increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn relative_entropy_run_shares_iterates() {
        let mut rng = stream_rng(68, 0);
        let rho = random_density(2, 2, &mut rng);
        let init = CholeskyParam::from_density(&random_density(2, 2, &mut rng)).unwrap();
        let opts = OptimizerOptions::default();
        let a = minimize_cross_entropy(&rho, &init, &opts).unwrap();
        let b = minimize_relative_entropy(&rho, &init, &opts).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.estimate.data(), b.estimate.data(), "iterates must be identical");
        let shift = von_neumann(&rho);
        for (x, y) in a.objective_trace.iter().zip(&b.objective_trace) {
            assert!((x - shift - y).abs() < 1e-15);
        }
    }

    #[test]
    fn maximize_likelihood_exact_probabilities() {
        let mut rng = stream_rng(69, 0);
        let set = TomographicSet::pauli(1);
        let rho = random_density(2, 2, &mut rng);
        let freqs = set.exact_probabilities(&rho).unwrap();
        let report = maximize_likelihood(
            &set,
            &freqs,
            &CholeskyParam::identity_init(2),
            &OptimizerOptions::default(),
        )
        .unwrap();
        let dist = trace_distance(&report.estimate, &rho).unwrap();
        assert!(dist < 1e-4, "MLE misses the target by {dist:e}");

        let mixed = DensityMatrix::maximally_mixed(2);
        let freqs = set.exact_probabilities(&mixed).unwrap();
        let report = maximize_likelihood(
            &set,
            &freqs,
            &CholeskyParam::identity_init(2),
            &OptimizerOptions::default(),
        )
        .unwrap();
        assert!(trace_distance(&report.estimate, &mixed).unwrap() < 1e-6);
    }

    #[test]
    fn the_two_estimators_agree() {
        let mut rng = stream_rng(70, 0);
        let set = TomographicSet::pauli(1);
        let rho = random_density(2, 2, &mut rng);
        let freqs = set.exact_probabilities(&rho).unwrap();
        let opts = OptimizerOptions::default();
        let ml =
            maximize_likelihood(&set, &freqs, &CholeskyParam::identity_init(2), &opts).unwrap();
        let ce =
            minimize_cross_entropy(&rho, &CholeskyParam::identity_init(2), &opts).unwrap();
        let dist = trace_distance(&ml.estimate, &ce.estimate).unwrap();
        assert!(dist < 1e-3, "estimators disagree by {dist:e}");
    }

    #[test]
    fn linear_inversion_exact_cases() {
        let set = TomographicSet::pauli(1);
        let zero = PureState::basis(2, 0).density();
        let freqs = set.exact_probabilities(&zero).unwrap();
        let x = linear_inversion(&set, &freqs).unwrap();
        assert!(max_abs_diff(&x, zero.data()) < 1e-10);

        let mut rng = stream_rng(71, 0);
        let rho = random_density(2, 2, &mut rng);
        let freqs = set.exact_probabilities(&rho).unwrap();
        let x = linear_inversion(&set, &freqs).unwrap();
        assert!(max_abs_diff(&x, rho.data()) < 1e-9);
    }

    #[test]
    fn linear_inversion_from_sampled_frequencies() {
        let mut rng = stream_rng(72, 0);
        let set = TomographicSet::pauli(1);
        let rho = random_density(2, 2, &mut rng);
        let ds = crate::empirical::MeasurementDataset::sample_tomographic(
            &set, &rho, 10_000, None, &mut rng,
        )
        .unwrap();
        let x = linear_inversion(&set, &ds.frequencies()).unwrap();
        let estimate = project_to_density(&x).unwrap();
        let dist = trace_distance(&estimate, &rho).unwrap();
        assert!(dist < 0.05, "sampled inversion misses by {dist}");
    }

    #[test]
    fn project_to_density_cases() {
        let mut rng = stream_rng(73, 0);
        let rho = random_density(3, 3, &mut rng);
        let projected = project_to_density(rho.data()).unwrap();
        assert!(trace_distance(&projected, &rho).unwrap() < 1e-9);

        let x = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.1, 0.0),
            c(-0.1, 0.0),
        ]));
        let projected = project_to_density(&x).unwrap();
        assert!(max_abs_diff(projected.data(), PureState::basis(2, 0).density().data()) < 1e-12);

        let noisy = rho.data() + CMatrix::identity(3, 3).scale(-0.05);
        let repaired = project_to_density(&noisy).unwrap();
        assert!(repaired.eigenvalues()[0] >= -1e-12);
        assert!((repaired.data().trace().re - 1.0).abs() < 1e-9);
    }
}
