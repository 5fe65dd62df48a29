//! Observables, projective measurements, POVMs, and outcome sampling.
//!
//! A projective measurement is a complete orthogonal set of projectors
//! `{Π_m}`; measuring a state `ρ` yields outcome `m` with probability
//! `tr(Π_m ρ)`. An observable `A = Σ_m m Π_m` induces one projector per
//! eigenvalue cluster, so degenerate eigenspaces become projectors of rank
//! above one — a distinction the two post-measurement perspectives treat
//! differently:
//!
//! - operator perspective: `Π/tr(Π)`, the maximally mixed state on the
//!   outcome eigenspace;
//! - state perspective: `ΠσΠ/tr(Πσ)`, the projection of a model state `σ`
//!   onto that eigenspace.
//!
//! For rank-1 projectors the two coincide. POVMs generalize both but a POVM
//! element only determines the post-measurement system state together with
//! its operator decomposition, which is why they get a separate type.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matfun::{
    c, eig_hermitian, hermitian_deviation, max_abs_diff, max_norm, numerical_rank, CMatrix,
    CVector,
};
use crate::states::{trace_product, DensityMatrix};

/// Validation tolerance for measurement invariants (idempotence,
/// orthogonality, completeness).
pub const MEASUREMENT_TOL: f64 = 1e-9;

/// Default relative eigenvalue-clustering tolerance for
/// [`ProjectiveMeasurement::from_observable`]. Degenerate eigenspaces matter
/// for the likelihood equality conditions, so merging is deliberate and
/// configurable rather than an accident of floating point.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Probabilities below this are treated as zero when conditioning on an
/// outcome.
pub const ZERO_PROB_TOL: f64 = 1e-12;

/// A complete set of orthogonal projectors with real outcome labels.
#[derive(Debug, Clone)]
pub struct ProjectiveMeasurement {
    projectors: Vec<CMatrix>,
    eigenvalues: Vec<f64>,
    dim: usize,
}

impl ProjectiveMeasurement {
    /// Validate a projector set: each `Π` Hermitian and idempotent, pairwise
    /// products zero, and `Σ Π = I`, all to [`MEASUREMENT_TOL`]. Labels
    /// default to the outcome index.
    pub fn new(projectors: Vec<CMatrix>, eigenvalues: Option<Vec<f64>>) -> Result<Self> {
        if projectors.is_empty() {
            return Err(Error::InvalidMeasurement { reason: "no projectors".into() });
        }
        let dim = projectors[0].nrows();
        for (m, p) in projectors.iter().enumerate() {
            if p.nrows() != dim || p.ncols() != dim {
                return Err(Error::InvalidMeasurement {
                    reason: format!("projector {m} is {}x{}, expected {dim}x{dim}", p.nrows(), p.ncols()),
                });
            }
            let dev = hermitian_deviation(p);
            if dev > MEASUREMENT_TOL {
                return Err(Error::InvalidMeasurement {
                    reason: format!("projector {m} is not Hermitian (deviation {dev:.3e})"),
                });
            }
            let idem = max_abs_diff(&(p * p), p);
            if idem > MEASUREMENT_TOL {
                return Err(Error::InvalidMeasurement {
                    reason: format!("projector {m} is not idempotent (|Π² - Π| = {idem:.3e})"),
                });
            }
            if p.trace().re < 0.5 {
                return Err(Error::InvalidMeasurement {
                    reason: format!("projector {m} is zero"),
                });
            }
        }
        for i in 0..projectors.len() {
            for j in (i + 1)..projectors.len() {
                let cross = max_norm(&(&projectors[i] * &projectors[j]));
                if cross > MEASUREMENT_TOL {
                    return Err(Error::InvalidMeasurement {
                        reason: format!("projectors {i} and {j} overlap (|ΠᵢΠⱼ| = {cross:.3e})"),
                    });
                }
            }
        }
        let mut total = CMatrix::zeros(dim, dim);
        for p in &projectors {
            total += p;
        }
        let complete = max_abs_diff(&total, &CMatrix::identity(dim, dim));
        if complete > MEASUREMENT_TOL {
            return Err(Error::InvalidMeasurement {
                reason: format!("projectors do not sum to identity (deviation {complete:.3e})"),
            });
        }
        let eigenvalues = match eigenvalues {
            Some(e) => {
                if e.len() != projectors.len() {
                    return Err(Error::InvalidMeasurement {
                        reason: format!("{} labels for {} projectors", e.len(), projectors.len()),
                    });
                }
                e
            }
            None => (0..projectors.len()).map(|m| m as f64).collect(),
        };
        Ok(Self { projectors, eigenvalues, dim })
    }

    /// The computational-basis measurement `{|k⟩⟨k|}`.
    pub fn computational(dim: usize) -> Self {
        let projectors = (0..dim)
            .map(|k| {
                let mut p = CMatrix::zeros(dim, dim);
                p[(k, k)] = c(1.0, 0.0);
                p
            })
            .collect();
        Self::new(projectors, None).expect("basis projectors are valid")
    }

    /// Measurement induced by a Hermitian observable: one projector per
    /// eigenvalue cluster.
    ///
    /// Ascending eigenvalues are merged into one cluster while consecutive
    /// gaps stay within `cluster_tol` times the spectral range; each cluster
    /// contributes a projector whose rank is the cluster multiplicity,
    /// labeled by the cluster mean.
    pub fn from_observable(observable: &CMatrix, cluster_tol: f64) -> Result<Self> {
        let eig = eig_hermitian(observable)?;
        let n = observable.nrows();
        let range = eig.max_eigenvalue() - eig.min_eigenvalue();
        let threshold = cluster_tol * range;
        let mut projectors = Vec::new();
        let mut labels = Vec::new();
        let mut start = 0;
        for i in 1..=n {
            let split = i == n || eig.eigenvalues[i] - eig.eigenvalues[i - 1] > threshold;
            if split {
                let mut p = CMatrix::zeros(n, n);
                let mut mean = 0.0;
                for k in start..i {
                    let col = eig.eigenvectors.column(k);
                    p += col * col.adjoint();
                    mean += eig.eigenvalues[k];
                }
                projectors.push(p);
                labels.push(mean / (i - start) as f64);
                start = i;
            }
        }
        Self::new(projectors, Some(labels))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of outcomes.
    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn projector(&self, outcome: usize) -> &CMatrix {
        &self.projectors[outcome]
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Born-rule outcome probabilities `tr(Π_m ρ)`, clamped at zero and
    /// renormalized when the sum drifts within [`MEASUREMENT_TOL`] of one.
    pub fn outcome_probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: rho.dim() });
        }
        let mut probs: Vec<f64> = self
            .projectors
            .iter()
            .map(|p| trace_product(p, rho.data()).re.max(0.0))
            .collect();
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MEASUREMENT_TOL {
            return Err(Error::InvalidMeasurement {
                reason: format!("outcome probabilities sum to {total}"),
            });
        }
        for p in &mut probs {
            *p /= total;
        }
        Ok(probs)
    }

    /// Draw one outcome index from the Born distribution by inverse CDF over
    /// the ordered outcome list.
    pub fn sample(&self, rho: &DensityMatrix, rng: &mut impl Rng) -> Result<usize> {
        let probs = self.outcome_probabilities(rho)?;
        Ok(draw(&probs, rng))
    }

    /// Draw `n` outcome indices, computing the Born distribution once.
    pub fn sample_n(&self, rho: &DensityMatrix, n: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
        let probs = self.outcome_probabilities(rho)?;
        Ok((0..n).map(|_| draw(&probs, rng)).collect())
    }
}

fn draw(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return k;
        }
    }
    probs.len() - 1
}

/// Post-measurement state in the operator perspective: `Π/tr(Π)`.
pub fn post_state_operator(projector: &CMatrix) -> Result<DensityMatrix> {
    let trace = projector.trace().re;
    if trace < 0.5 {
        return Err(Error::ZeroProbability);
    }
    DensityMatrix::from_matrix(projector.unscale(trace))
}

/// Post-measurement state in the state perspective: `ΠσΠ/tr(Πσ)`.
pub fn post_state_state(projector: &CMatrix, sigma: &DensityMatrix) -> Result<DensityMatrix> {
    if projector.nrows() != sigma.dim() {
        return Err(Error::DimensionMismatch { left: projector.nrows(), right: sigma.dim() });
    }
    let prob = trace_product(projector, sigma.data()).re;
    if prob <= ZERO_PROB_TOL {
        return Err(Error::ZeroProbability);
    }
    let conditioned = projector * sigma.data() * projector;
    DensityMatrix::from_matrix(conditioned.unscale(prob))
}

/// Post-measurement state for a POVM element: `MσM*/tr(M*Mσ)`.
pub fn povm_post_state(operator: &CMatrix, sigma: &DensityMatrix) -> Result<DensityMatrix> {
    if operator.nrows() != sigma.dim() || operator.ncols() != sigma.dim() {
        return Err(Error::DimensionMismatch { left: operator.nrows(), right: sigma.dim() });
    }
    let prob = trace_product(&(operator.adjoint() * operator), sigma.data()).re;
    if prob <= ZERO_PROB_TOL {
        return Err(Error::ZeroProbability);
    }
    let conditioned = operator * sigma.data() * operator.adjoint();
    DensityMatrix::from_matrix(conditioned.unscale(prob))
}

/// A generalized measurement: operators `{M_i}` with `Σ M_i* M_i = I`.
#[derive(Debug, Clone)]
pub struct Povm {
    operators: Vec<CMatrix>,
    dim: usize,
}

impl Povm {
    pub fn new(operators: Vec<CMatrix>) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::InvalidMeasurement { reason: "no POVM operators".into() });
        }
        let dim = operators[0].nrows();
        for m in &operators {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidMeasurement {
                    reason: "POVM operators must be square with equal dimensions".into(),
                });
            }
        }
        let mut total = CMatrix::zeros(dim, dim);
        for m in &operators {
            total += m.adjoint() * m;
        }
        let deviation = max_abs_diff(&total, &CMatrix::identity(dim, dim));
        if deviation > MEASUREMENT_TOL {
            return Err(Error::InvalidPovm { deviation });
        }
        Ok(Self { operators, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn operator(&self, i: usize) -> &CMatrix {
        &self.operators[i]
    }

    /// Outcome probabilities `tr(M_i* M_i σ)`.
    pub fn outcome_probabilities(&self, sigma: &DensityMatrix) -> Result<Vec<f64>> {
        if sigma.dim() != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: sigma.dim() });
        }
        Ok(self
            .operators
            .iter()
            .map(|m| trace_product(&(m.adjoint() * m), sigma.data()).re.max(0.0))
            .collect())
    }

    /// Draw one outcome index.
    pub fn sample(&self, sigma: &DensityMatrix, rng: &mut impl Rng) -> Result<usize> {
        let probs = self.outcome_probabilities(sigma)?;
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MEASUREMENT_TOL {
            return Err(Error::InvalidPovm { deviation: (total - 1.0).abs() });
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut cumulative = 0.0;
        for (k, &p) in probs.iter().enumerate() {
            cumulative += p;
            if u < cumulative {
                return Ok(k);
            }
        }
        Ok(probs.len() - 1)
    }
}

/// A tomographically complete collection of projective measurements.
///
/// Group `j` is used with relative frequency `weights[j]`; the stacked
/// vectorized projectors must span the full space of Hermitian matrices, so
/// linear inversion of outcome frequencies is well posed by construction.
#[derive(Debug, Clone)]
pub struct TomographicSet {
    groups: Vec<ProjectiveMeasurement>,
    weights: Vec<f64>,
    dim: usize,
}

impl TomographicSet {
    pub fn new(groups: Vec<ProjectiveMeasurement>, weights: Vec<f64>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidMeasurement { reason: "no measurement groups".into() });
        }
        if weights.len() != groups.len() {
            return Err(Error::InvalidMeasurement {
                reason: format!("{} weights for {} groups", weights.len(), groups.len()),
            });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidMeasurement {
                reason: format!("group weights must be nonnegative and sum to 1, got {total}"),
            });
        }
        let dim = groups[0].dim();
        if groups.iter().any(|g| g.dim() != dim) {
            return Err(Error::InvalidMeasurement {
                reason: "measurement groups have mixed dimensions".into(),
            });
        }
        let rank = spanning_rank(&groups, dim);
        if rank < dim * dim {
            return Err(Error::IncompleteSet { rank, required: dim * dim });
        }
        Ok(Self { groups, weights, dim })
    }

    /// Uniformly weighted set.
    pub fn uniform(groups: Vec<ProjectiveMeasurement>) -> Result<Self> {
        let n = groups.len();
        Self::new(groups, vec![1.0 / n as f64; n])
    }

    /// All `3^n` single-qubit Pauli-string product bases with uniform
    /// weights: the standard complete set for `n`-qubit tomography.
    pub fn pauli(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1, "need at least one qubit");
        let axes = pauli_axes();
        let mut groups = Vec::new();
        let mut choice = vec![0usize; n_qubits];
        loop {
            groups.push(pauli_product_basis(&choice, &axes));
            // odometer over {X, Y, Z}^n
            let mut q = 0;
            loop {
                if q == n_qubits {
                    let weights = vec![1.0 / groups.len() as f64; groups.len()];
                    return Self::new(groups, weights)
                        .expect("Pauli product bases are tomographically complete");
                }
                choice[q] += 1;
                if choice[q] < 3 {
                    break;
                }
                choice[q] = 0;
                q += 1;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> &[ProjectiveMeasurement] {
        &self.groups
    }

    pub fn group(&self, j: usize) -> &ProjectiveMeasurement {
        &self.groups[j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Exact Born probabilities `p_jk = tr(E_jk ρ)` for every group.
    pub fn exact_probabilities(&self, rho: &DensityMatrix) -> Result<Vec<Vec<f64>>> {
        self.groups.iter().map(|g| g.outcome_probabilities(rho)).collect()
    }
}

/// Rank of the stacked vectorized projectors of all groups.
fn spanning_rank(groups: &[ProjectiveMeasurement], dim: usize) -> usize {
    let rows: usize = groups.iter().map(|g| g.len()).sum();
    let mut stacked = CMatrix::zeros(rows, dim * dim);
    let mut r = 0;
    for g in groups {
        for p in g.projectors() {
            for col in 0..dim {
                for row in 0..dim {
                    stacked[(r, col * dim + row)] = p[(row, col)];
                }
            }
            r += 1;
        }
    }
    numerical_rank(&stacked, 1e-10)
}

/// Eigenvector pairs (for outcomes +1, -1) of the three Pauli operators.
fn pauli_axes() -> [[CVector; 2]; 3] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x_plus = CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]);
    let x_minus = CVector::from_vec(vec![c(s, 0.0), c(-s, 0.0)]);
    let y_plus = CVector::from_vec(vec![c(s, 0.0), c(0.0, s)]);
    let y_minus = CVector::from_vec(vec![c(s, 0.0), c(0.0, -s)]);
    let z_plus = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
    let z_minus = CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]);
    [[x_plus, x_minus], [y_plus, y_minus], [z_plus, z_minus]]
}

/// Product basis for one Pauli string. Outcome `k` assigns qubit `q` the
/// sign bit `(k >> q) & 1`, and the outcome label is the product of signs.
fn pauli_product_basis(choice: &[usize], axes: &[[CVector; 2]; 3]) -> ProjectiveMeasurement {
    let n = choice.len();
    let outcomes = 1usize << n;
    let mut projectors = Vec::with_capacity(outcomes);
    let mut labels = Vec::with_capacity(outcomes);
    for k in 0..outcomes {
        let mut vec = CVector::from_vec(vec![c(1.0, 0.0)]);
        let mut sign = 1.0;
        for q in 0..n {
            let bit = (k >> q) & 1;
            if bit == 1 {
                sign = -sign;
            }
            let factor = &axes[choice[q]][bit];
            vec = vec.kronecker(factor);
        }
        let p = &vec * vec.adjoint();
        projectors.push(DMatrix::from(p));
        labels.push(sign);
    }
    ProjectiveMeasurement::new(projectors, Some(labels))
        .expect("product-basis projectors are valid")
}

/// Measurement groups for a named preset: `"pauli"` (all Pauli product
/// bases) or `"computational"` (the single standard basis).
pub fn preset_groups(name: &str, dim: usize) -> Result<Vec<ProjectiveMeasurement>> {
    match name {
        "pauli" => {
            let n_qubits = dim.trailing_zeros() as usize;
            if dim == 0 || dim != 1 << n_qubits {
                return Err(Error::InvalidMeasurement {
                    reason: format!("pauli preset needs a power-of-two dimension, got {dim}"),
                });
            }
            Ok(TomographicSet::pauli(n_qubits).groups().to_vec())
        }
        "computational" => Ok(vec![ProjectiveMeasurement::computational(dim)]),
        other => Err(Error::InvalidMeasurement {
            reason: format!("unknown measurement preset {other:?}"),
        }),
    }
}

/// A preset as a tomographically complete set. The `"computational"` preset
/// is a valid measurement literal but a single basis cannot span Hermitian
/// space, so it fails the completeness test here (for any `dim > 1`).
pub fn preset(name: &str, dim: usize) -> Result<TomographicSet> {
    TomographicSet::uniform(preset_groups(name, dim)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::kron;
    use crate::states::{random_density, random_pure, stream_rng, PureState};

    fn pauli_z() -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]))
    }

    #[test]
    fn observable_z_splits_into_basis_projectors() {
        let m = ProjectiveMeasurement::from_observable(&pauli_z(), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.eigenvalues(), &[-1.0, 1.0]);
        assert!((m.projector(0)[(1, 1)].re - 1.0).abs() < 1e-12);
        assert!((m.projector(1)[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn observable_identity_is_fully_degenerate() {
        let m =
            ProjectiveMeasurement::from_observable(&CMatrix::identity(3, 3), DEFAULT_CLUSTER_TOL)
                .unwrap();
        assert_eq!(m.len(), 1);
        assert!(max_abs_diff(m.projector(0), &CMatrix::identity(3, 3)) < 1e-12);
    }

    #[test]
    fn observable_clusters_near_degenerate_eigenvalues() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![
            c(1.0, 0.0),
            c(1.0 + 1e-14, 0.0),
            c(2.0, 0.0),
        ]));
        let m = ProjectiveMeasurement::from_observable(&a, 1e-10).unwrap();
        assert_eq!(m.len(), 2);
        assert!((m.projector(0).trace().re - 2.0).abs() < 1e-12);
        assert!((m.projector(1).trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_broken_sets() {
        // missing projector: does not sum to identity
        let mut p = CMatrix::zeros(2, 2);
        p[(0, 0)] = c(1.0, 0.0);
        assert!(ProjectiveMeasurement::new(vec![p.clone()], None).is_err());
        // overlapping projectors
        assert!(ProjectiveMeasurement::new(vec![p.clone(), p], None).is_err());
    }

    #[test]
    fn sampling_certain_outcome() {
        let z = ProjectiveMeasurement::computational(2);
        let rho = PureState::basis(2, 0).density();
        let mut rng = stream_rng(31, 0);
        for _ in 0..100 {
            assert_eq!(z.sample(&rho, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn sampling_matches_born_rule() {
        let z = ProjectiveMeasurement::computational(2);
        let mut rng = stream_rng(32, 0);

        let plus = PureState::normalized(CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]))
            .unwrap()
            .density();
        let n = 10_000;
        let zeros = (0..n).filter(|_| z.sample(&plus, &mut rng).unwrap() == 0).count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.02, "frequency {freq}");

        let biased = DensityMatrix::from_diagonal(&[2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let zeros = (0..n).filter(|_| z.sample(&biased, &mut rng).unwrap() == 0).count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 2.0 / 3.0).abs() < 0.02, "frequency {freq}");
    }

    #[test]
    fn born_frequencies_converge() {
        let mut rng = stream_rng(33, 0);
        let rho = random_density(3, 3, &mut rng);
        let obs = {
            let g = crate::states::random_unitary(3, &mut rng);
            let lam = CMatrix::from_diagonal(&CVector::from_vec(vec![
                c(-1.0, 0.0),
                c(0.3, 0.0),
                c(1.2, 0.0),
            ]));
            &g * lam * g.adjoint()
        };
        let m = ProjectiveMeasurement::from_observable(&obs, DEFAULT_CLUSTER_TOL).unwrap();
        let probs = m.outcome_probabilities(&rho).unwrap();
        let n = 100_000usize;
        let mut counts = vec![0usize; m.len()];
        for _ in 0..n {
            counts[m.sample(&rho, &mut rng).unwrap()] += 1;
        }
        for (k, &p) in probs.iter().enumerate() {
            let freq = counts[k] as f64 / n as f64;
            let bound = 5.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-3;
            assert!((freq - p).abs() < bound, "outcome {k}: freq {freq} vs p {p}");
        }
    }

    #[test]
    fn completeness_of_probabilities() {
        let mut rng = stream_rng(34, 0);
        for _ in 0..20 {
            let rho = random_density(4, 4, &mut rng);
            let u = crate::states::random_unitary(4, &mut rng);
            let lam = CMatrix::from_diagonal(&CVector::from_fn(4, |i, _| c(i as f64, 0.0)));
            let m = ProjectiveMeasurement::from_observable(&(&u * lam * u.adjoint()), DEFAULT_CLUSTER_TOL)
                .unwrap();
            let total: f64 = m.outcome_probabilities(&rho).unwrap().iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn operator_post_states() {
        let mut rng = stream_rng(35, 0);
        let psi = random_pure(3, &mut rng);
        let p = psi.density().data().clone();
        let post = post_state_operator(&p).unwrap();
        assert!(max_abs_diff(post.data(), &p) < 1e-9);

        let half = post_state_operator(&CMatrix::identity(2, 2)).unwrap();
        assert!(max_abs_diff(half.data(), &CMatrix::identity(2, 2).scale(0.5)) < 1e-12);

        let mut rank2 = CMatrix::zeros(4, 4);
        rank2[(0, 0)] = c(1.0, 0.0);
        rank2[(2, 2)] = c(1.0, 0.0);
        let post = post_state_operator(&rank2).unwrap();
        let eigs = post.eigenvalues();
        assert!(eigs[3] - 0.5 < 1e-12 && eigs[2] - 0.5 < 1e-12);
        assert!(eigs[0].abs() < 1e-12 && eigs[1].abs() < 1e-12);
        assert!((post.data().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn state_post_states() {
        let mut rng = stream_rng(36, 0);
        let sigma = random_density(3, 3, &mut rng);

        let psi = random_pure(3, &mut rng);
        let p = psi.density().data().clone();
        let post = post_state_state(&p, &sigma).unwrap();
        assert!(max_abs_diff(post.data(), &p) < 1e-9);

        let all = post_state_state(&CMatrix::identity(3, 3), &sigma).unwrap();
        assert!(max_abs_diff(all.data(), sigma.data()) < 1e-12);

        let biased = DensityMatrix::from_diagonal(&[2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let mut proj = CMatrix::zeros(2, 2);
        proj[(0, 0)] = c(1.0, 0.0);
        let post = post_state_state(&proj, &biased).unwrap();
        assert!(max_abs_diff(post.data(), PureState::basis(2, 0).density().data()) < 1e-12);
    }

    #[test]
    fn post_state_state_rejects_zero_probability() {
        let sigma = PureState::basis(2, 0).density();
        let mut proj = CMatrix::zeros(2, 2);
        proj[(1, 1)] = c(1.0, 0.0);
        assert!(matches!(post_state_state(&proj, &sigma), Err(Error::ZeroProbability)));
    }

    #[test]
    fn povm_post_states() {
        let sigma = DensityMatrix::from_diagonal(&[2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let zero = PureState::basis(2, 0).density();

        let mut flip = CMatrix::zeros(2, 2);
        flip[(0, 1)] = c(1.0, 0.0); // |0⟩⟨1|
        let post = povm_post_state(&flip, &sigma).unwrap();
        assert!(max_abs_diff(post.data(), zero.data()) < 1e-12);

        let keep = zero.data().clone(); // |0⟩⟨0|
        let post = povm_post_state(&keep, &sigma).unwrap();
        assert!(max_abs_diff(post.data(), zero.data()) < 1e-12);

        let mut rng = stream_rng(37, 0);
        let u = crate::states::random_unitary(3, &mut rng);
        let s3 = random_density(3, 3, &mut rng);
        let post = povm_post_state(&u, &s3).unwrap();
        let rotated = &u * s3.data() * u.adjoint();
        assert!(max_abs_diff(post.data(), &rotated) < 1e-9);
    }

    #[test]
    fn povm_validation() {
        let mut m1 = CMatrix::zeros(2, 2);
        m1[(0, 0)] = c(1.0, 0.0);
        let mut m2 = CMatrix::zeros(2, 2);
        m2[(0, 1)] = c(1.0, 0.0);
        assert!(Povm::new(vec![m1.clone(), m2]).is_ok());
        assert!(matches!(Povm::new(vec![m1.clone(), m1]), Err(Error::InvalidPovm { .. })));
    }

    #[test]
    fn rank_one_projectors_make_perspectives_agree() {
        let mut rng = stream_rng(38, 0);
        for _ in 0..100 {
            let psi = random_pure(3, &mut rng);
            let p = psi.density().data().clone();
            let sigma = random_density(3, 3, &mut rng);
            let a = post_state_operator(&p).unwrap();
            let b = post_state_state(&p, &sigma).unwrap();
            assert!(max_abs_diff(a.data(), b.data()) < 1e-9);
        }
    }

    #[test]
    fn pauli_set_single_qubit() {
        let set = TomographicSet::pauli(1);
        assert_eq!(set.len(), 3);
        let projector_count: usize = set.groups().iter().map(|g| g.len()).sum();
        assert_eq!(projector_count, 6);
        for g in set.groups() {
            assert_eq!(g.eigenvalues(), &[1.0, -1.0]);
            for p in g.projectors() {
                assert!((p.trace().re - 1.0).abs() < 1e-12);
            }
        }
        for &w in set.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pauli_set_spans_hermitian_space() {
        for n in 1..=2 {
            let set = TomographicSet::pauli(n);
            let dim = 1usize << n;
            assert_eq!(spanning_rank(set.groups(), dim), dim * dim);
        }
    }

    #[test]
    fn pauli_product_projectors_match_kron_structure() {
        let set = TomographicSet::pauli(2);
        // group 0 is the X⊗X product basis; its first projector is |++⟩⟨++|
        let axes = pauli_axes();
        let plus = &axes[0][0];
        let expect = {
            let v = plus.kronecker(plus);
            &v * v.adjoint()
        };
        assert!(max_abs_diff(set.group(0).projector(0), &DMatrix::from(expect)) < 1e-12);
        let _ = kron(&CMatrix::identity(2, 2), &CMatrix::identity(2, 2));
    }

    #[test]
    fn incomplete_sets_are_rejected()  {
        let z = ProjectiveMeasurement::computational(2);
        let err = TomographicSet::uniform(vec![z]).unwrap_err();
        assert!(matches!(err, Error::IncompleteSet { rank: 2, required: 4 }));
    }

    #[test]
    fn presets() {
        assert!(preset("pauli", 4).is_ok());
        assert!(preset("pauli", 3).is_err());
        assert!(preset("bogus", 2).is_err());
        // the computational preset is a valid literal but not complete
        assert_eq!(preset_groups("computational", 2).unwrap().len(), 1);
        assert!(matches!(preset("computational", 2), Err(Error::IncompleteSet { .. })));
    }
}
