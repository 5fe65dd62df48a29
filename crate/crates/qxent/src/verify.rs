//! Named, reportable check suites.
//!
//! Every claim the library implements — positivity and convexity of the
//! cross entropy, the lower-bound chain, the likelihood bound and its
//! equality conditions, the POVM counterexample, the rank and commutator
//! lemmas behind the equality proof — is bound to a [`CheckResult`]: a check
//! id, a trial count, a signed worst-case margin, a tolerance, and a pass
//! flag.
//!
//! Margins are oriented so that correct behavior is nonnegative:
//!
//! - inequality checks pass when `worst_margin >= -tolerance`;
//! - identity checks pass when `|worst_margin| <= tolerance`;
//! - strictness sub-cases fold in as `observed_gap - MIN_SEPARATION`, so a
//!   claim that something must be *strictly* violated fails the same way a
//!   slack inequality does.
//!
//! The pass criterion is always the worst margin, never a mean: the claims
//! are universally quantified, so one bad trial is a failure.
//!
//! Every result is reproducible from `(check id, seed, parameters)`: trial
//! `i` draws from an RNG stream derived from the check's seed and `i`, so
//! results are independent of thread count and trial order. The worst trial's
//! inputs are serialized into a [`Witness`], and [`replay`] re-evaluates a
//! witness through the same margin code path, reproducing the stored margin.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::empirical::{
    avg_log_likelihood, classical_avg_log_likelihood, empirical_distribution, empirical_operator,
    empirical_state, MeasurementDataset, Record,
};
use crate::entropy::{
    bound_chain, classical_cross_entropy, classical_fidelity, quantum_cross_entropy,
    quantum_relative_entropy, von_neumann, ClassicalDist, ExtendedReal,
};
use crate::error::{Error, Result};
use crate::matfun::{
    c, commutator_norm, matrix_log, max_abs_diff, numerical_rank, CMatrix, CVector,
    DEFAULT_SUPPORT_TOL,
};
use crate::measurement::{
    post_state_operator, post_state_state, povm_post_state, Povm, ProjectiveMeasurement,
    DEFAULT_CLUSTER_TOL,
};
use crate::states::{
    random_density, random_pure, random_unitary, stream_rng, tensor, trace_distance,
    trace_product, DensityMatrix,
};

/// Absolute slack for inequality margins.
pub const INEQ_TOL: f64 = 1e-9;
/// Default tolerance for identity margins.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Tolerance for identities that are exact algebraic rearrangements.
pub const EXACT_IDENTITY_TOL: f64 = 1e-12;
/// Minimum gap demanded where a claim requires strict violation.
pub const MIN_SEPARATION: f64 = 1e-6;
/// Rank comparisons use this relative singular-value threshold.
pub const RANK_TOL: f64 = 1e-8;

/// How a margin is judged against its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginKind {
    /// Pass iff `worst_margin >= -tolerance`.
    Inequality,
    /// Pass iff `|worst_margin| <= tolerance`.
    Identity,
}

/// One typed input captured for witness replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessValue {
    Scalar(f64),
    Int(u64),
    Ints(Vec<u64>),
    Reals(Vec<f64>),
    Text(String),
    /// Dense complex matrix as nested rows of `[re, im]` pairs.
    Matrix(Vec<Vec<[f64; 2]>>),
}

impl WitnessValue {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        WitnessValue::Matrix(rows)
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        match self {
            WitnessValue::Matrix(rows) => {
                let nrows = rows.len();
                let ncols = rows.first().map_or(0, Vec::len);
                if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
                    return Err(Error::MalformedWitness { reason: "ragged matrix".into() });
                }
                Ok(CMatrix::from_fn(nrows, ncols, |i, j| c(rows[i][j][0], rows[i][j][1])))
            }
            _ => Err(Error::MalformedWitness { reason: "expected a matrix".into() }),
        }
    }
}

/// Serialized inputs of the worst trial of a check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    /// RNG stream index of the worst trial.
    pub trial: u64,
    /// The margin the inputs produced.
    pub margin: ExtendedReal,
    /// Named inputs, sufficient to re-evaluate the margin.
    pub inputs: BTreeMap<String, WitnessValue>,
}

impl Witness {
    fn get(&self, key: &str) -> Result<&WitnessValue> {
        self.inputs
            .get(key)
            .ok_or_else(|| Error::MalformedWitness { reason: format!("missing input {key:?}") })
    }

    pub fn matrix(&self, key: &str) -> Result<CMatrix> {
        self.get(key)?.to_matrix()
    }

    pub fn density(&self, key: &str) -> Result<DensityMatrix> {
        DensityMatrix::from_matrix(self.matrix(key)?)
    }

    pub fn int(&self, key: &str) -> Result<u64> {
        match self.get(key)? {
            WitnessValue::Int(v) => Ok(*v),
            _ => Err(Error::MalformedWitness { reason: format!("{key:?} is not an int") }),
        }
    }

    pub fn ints(&self, key: &str) -> Result<Vec<u64>> {
        match self.get(key)? {
            WitnessValue::Ints(v) => Ok(v.clone()),
            _ => Err(Error::MalformedWitness { reason: format!("{key:?} is not an int list") }),
        }
    }

    pub fn reals(&self, key: &str) -> Result<Vec<f64>> {
        match self.get(key)? {
            WitnessValue::Reals(v) => Ok(v.clone()),
            _ => Err(Error::MalformedWitness { reason: format!("{key:?} is not a real list") }),
        }
    }

    pub fn text(&self, key: &str) -> Result<&str> {
        match self.get(key)? {
            WitnessValue::Text(s) => Ok(s),
            _ => Err(Error::MalformedWitness { reason: format!("{key:?} is not text") }),
        }
    }

    /// All projectors stored as `projector_0 .. projector_{n-1}`.
    pub fn projectors(&self) -> Result<Vec<CMatrix>> {
        let count = self.int("projector_count")? as usize;
        (0..count).map(|k| self.matrix(&format!("projector_{k}"))).collect()
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub check_id: String,
    pub trials: usize,
    /// Signed worst-case margin over all trials and sub-cases.
    pub worst_margin: f64,
    pub tolerance: f64,
    pub kind: MarginKind,
    pub pass: bool,
    pub witness: Option<Witness>,
}

impl CheckResult {
    fn from_worst(
        check_id: &str,
        kind: MarginKind,
        tolerance: f64,
        trials: usize,
        worst: Option<(u64, f64, BTreeMap<String, WitnessValue>)>,
    ) -> Self {
        match worst {
            None => Self {
                check_id: check_id.into(),
                trials,
                worst_margin: 0.0,
                tolerance,
                kind,
                pass: true, // vacuous: no trials ran
                witness: None,
            },
            Some((trial, margin, inputs)) => {
                let pass = match kind {
                    MarginKind::Inequality => margin >= -tolerance,
                    MarginKind::Identity => margin.abs() <= tolerance,
                };
                Self {
                    check_id: check_id.into(),
                    trials,
                    worst_margin: margin,
                    tolerance,
                    kind,
                    pass,
                    witness: Some(Witness {
                        trial,
                        margin: ExtendedReal::from_f64(margin),
                        inputs,
                    }),
                }
            }
        }
    }
}

/// Stable 64-bit label hash (FNV-1a) mixing a master seed with a check or
/// task label, so distinct checks draw from decorrelated streams while
/// staying reproducible from the master seed alone.
pub fn derive_check_seed(master: u64, label: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ master.wrapping_mul(0x0000_0100_0000_01b3);
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Is `b` a worse margin than `a` under this kind?
fn worse(kind: MarginKind, a: f64, b: f64) -> bool {
    match kind {
        MarginKind::Inequality => b < a,
        MarginKind::Identity => b.abs() > a.abs(),
    }
}

type TrialInputs = BTreeMap<String, WitnessValue>;

/// Run seeded trials in parallel and keep the worst margin. Results are
/// independent of thread count: each trial owns stream `i` of the derived
/// seed, and ties break toward the lowest trial index.
fn run_check(
    check_id: &str,
    kind: MarginKind,
    tolerance: f64,
    trials: usize,
    seed: u64,
    body: impl Fn(u64, &mut rand_chacha::ChaCha8Rng) -> (f64, TrialInputs) + Sync,
) -> CheckResult {
    let base = derive_check_seed(seed, check_id);
    let outcomes: Vec<(f64, TrialInputs)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(base, trial);
            body(trial, &mut rng)
        })
        .collect();
    let mut worst: Option<(u64, f64, TrialInputs)> = None;
    for (trial, (margin, inputs)) in outcomes.into_iter().enumerate() {
        let replace = match &worst {
            None => true,
            Some((_, m, _)) => worse(kind, *m, margin),
        };
        if replace {
            worst = Some((trial as u64, margin, inputs));
        }
    }
    CheckResult::from_worst(check_id, kind, tolerance, trials, worst)
}

/// Like [`run_check`] for paired checks that share trial inputs (the two
/// post-measurement perspectives).
fn run_paired_check(
    label: &str,
    ids: [&str; 2],
    kind: MarginKind,
    tolerance: f64,
    trials: usize,
    seed: u64,
    body: impl Fn(u64, &mut rand_chacha::ChaCha8Rng) -> ([f64; 2], [TrialInputs; 2]) + Sync,
) -> [CheckResult; 2] {
    let base = derive_check_seed(seed, label);
    let outcomes: Vec<([f64; 2], [TrialInputs; 2])> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(base, trial);
            body(trial, &mut rng)
        })
        .collect();
    let mut worst: [Option<(u64, f64, TrialInputs)>; 2] = [None, None];
    for (trial, (margins, inputs)) in outcomes.into_iter().enumerate() {
        for (side, (margin, input)) in margins.into_iter().zip(inputs).enumerate() {
            let replace = match &worst[side] {
                None => true,
                Some((_, m, _)) => worse(kind, *m, margin),
            };
            if replace {
                worst[side] = Some((trial as u64, margin, input));
            }
        }
    }
    let [w0, w1] = worst;
    [
        CheckResult::from_worst(ids[0], kind, tolerance, trials, w0),
        CheckResult::from_worst(ids[1], kind, tolerance, trials, w1),
    ]
}

// ---------------------------------------------------------------------------
// Shared margin computations (used by both the checks and witness replay)
// ---------------------------------------------------------------------------

fn store_measurement(inputs: &mut TrialInputs, group: &ProjectiveMeasurement) {
    inputs.insert("projector_count".into(), WitnessValue::Int(group.len() as u64));
    for (k, p) in group.projectors().iter().enumerate() {
        inputs.insert(format!("projector_{k}"), WitnessValue::from_matrix(p));
    }
}

fn load_measurement(witness: &Witness) -> Result<ProjectiveMeasurement> {
    ProjectiveMeasurement::new(witness.projectors()?, None)
}

/// Margins `S(ρᴼ, σ) + l(σ)` and `S(ρˢ, σ) + l(σ)` for one sampled dataset
/// over a single measurement group.
fn likelihood_bound_margins(
    sigma: &DensityMatrix,
    group: &ProjectiveMeasurement,
    outcomes: &[u64],
) -> Result<(f64, f64)> {
    let records: Vec<Record> =
        outcomes.iter().map(|&k| Record { j: 0, k: k as usize }).collect();
    let ds = MeasurementDataset::new(vec![group.clone()], records, None)?;
    let l = avg_log_likelihood(&ds, sigma)?.as_f64();
    let operator = empirical_operator(&ds)?;
    let state = empirical_state(&ds, sigma)?;
    let s_op = quantum_cross_entropy(operator.matrix(), sigma)?.as_f64();
    let s_state = state.cross_entropy_vs(sigma)?.as_f64();
    Ok((s_op + l, s_state + l))
}

/// `S(ρᵡ, σ) + l(σ)` evaluated at exact outcome frequencies, for one
/// perspective. The frequency-weighted mixtures make the margin a
/// deterministic function of the construction.
fn equality_margin(
    perspective: &str,
    sigma: &DensityMatrix,
    group: &ProjectiveMeasurement,
    freqs: &[f64],
) -> Result<f64> {
    let dim = sigma.dim();
    let mut mixture = CMatrix::zeros(dim, dim);
    let mut log_likelihood = 0.0;
    for (k, &f) in freqs.iter().enumerate() {
        if f <= 0.0 {
            continue;
        }
        let post = match perspective {
            "operator" => post_state_operator(group.projector(k))?,
            "state" => post_state_state(group.projector(k), sigma)?,
            other => {
                return Err(Error::MalformedWitness {
                    reason: format!("unknown perspective {other:?}"),
                })
            }
        };
        mixture += post.data().scale(f);
        log_likelihood += f * trace_product(group.projector(k), sigma.data()).re.ln();
    }
    let mixture = DensityMatrix::from_matrix(mixture)?;
    Ok(quantum_cross_entropy(&mixture, sigma)?.as_f64() + log_likelihood)
}

/// Equivalence margin for the commutator lemma on a rank-1-condition
/// instance: positive when `[ΠσΠ, σ] ≈ 0` and `[Π, σ] ≈ 0` agree (both hold
/// or both fail), negative by the size of the inconsistency otherwise.
fn commutator_equivalence_margin(projector: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let conditioned = projector * sigma * projector;
    let a = commutator_norm(&conditioned, sigma)?;
    let b = commutator_norm(projector, sigma)?;
    let threshold = IDENTITY_TOL;
    Ok(match (a <= threshold, b <= threshold) {
        (true, true) => threshold - a.max(b),
        (false, false) => a.min(b) - threshold,
        _ => -(a.max(b) - a.min(b)),
    })
}

/// Rank-difference margin for the support lemma.
fn support_rank_margin(projector: &CMatrix, sigma: &DensityMatrix) -> f64 {
    let p_sigma = sigma.support_projector(DEFAULT_SUPPORT_TOL);
    let left = numerical_rank(&(projector * &p_sigma), RANK_TOL);
    let right = numerical_rank(&(projector * sigma.data() * projector), RANK_TOL);
    left as f64 - right as f64
}

// ---------------------------------------------------------------------------
// Random instance generators
// ---------------------------------------------------------------------------

fn random_full_rank(dim: usize, rng: &mut impl rand::Rng) -> DensityMatrix {
    random_density(dim, dim, rng)
}

/// Random observable `U diag(m) U*`. With `degenerate` set, eigenvalues are
/// drawn from a small integer alphabet so repeated values (and therefore
/// projectors of rank above one) occur by construction.
fn random_observable(dim: usize, degenerate: bool, rng: &mut impl rand::Rng) -> CMatrix {
    let u = random_unitary(dim, rng);
    let values: Vec<f64> = if degenerate {
        let alphabet = 1 + rng.random_range(0..dim.max(2) - 1);
        (0..dim).map(|_| rng.random_range(0..alphabet) as f64).collect()
    } else {
        (0..dim).map(|i| i as f64 + rng.random::<f64>() * 0.5).collect()
    };
    let lam = CMatrix::from_diagonal(&CVector::from_iterator(
        dim,
        values.iter().map(|&v| c(v, 0.0)),
    ));
    &u * lam * u.adjoint()
}

/// Random rank-`r` orthogonal projector from Haar unitary columns.
fn random_projector(dim: usize, rank: usize, rng: &mut impl rand::Rng) -> CMatrix {
    let u = random_unitary(dim, rng);
    let mut p = CMatrix::zeros(dim, dim);
    for k in 0..rank {
        let col = u.column(k);
        p += col * col.adjoint();
    }
    p
}

fn random_simplex(n: usize, rng: &mut impl rand::Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

// ---------------------------------------------------------------------------
// The checks
// ---------------------------------------------------------------------------

/// Samples per trial when checking the likelihood bound.
pub const LIKELIHOOD_BOUND_SAMPLES: usize = 200;

/// Check that both empirical cross entropies dominate the negative average
/// log-likelihood, `S(ρᵡ, σ) ≥ -l(σ)`, over random states and observables.
///
/// Returns the operator- and state-perspective results. With
/// `allow_degenerate` set, every other trial draws an observable with
/// repeated eigenvalues so projectors of rank above one participate.
pub fn check_likelihood_bound(
    dim: usize,
    trials: usize,
    allow_degenerate: bool,
    seed: u64,
) -> [CheckResult; 2] {
    run_paired_check(
        "likelihood-bound",
        ["likelihood-bound-operator", "likelihood-bound-state"],
        MarginKind::Inequality,
        INEQ_TOL,
        trials,
        seed,
        |trial, rng| {
            let rho = random_full_rank(dim, rng);
            let sigma = random_full_rank(dim, rng);
            let degenerate = allow_degenerate && trial % 2 == 1;
            let observable = random_observable(dim, degenerate, rng);
            let group = ProjectiveMeasurement::from_observable(&observable, DEFAULT_CLUSTER_TOL)
                .expect("random observables are Hermitian");
            let outcomes: Vec<u64> = group
                .sample_n(&rho, LIKELIHOOD_BOUND_SAMPLES, rng)
                .expect("sampling valid states cannot fail")
                .into_iter()
                .map(|k| k as u64)
                .collect();
            let (op, state) = likelihood_bound_margins(&sigma, &group, &outcomes)
                .expect("full-rank models give finite margins");
            let mut inputs = TrialInputs::new();
            inputs.insert("rho".into(), WitnessValue::from_matrix(rho.data()));
            inputs.insert("sigma".into(), WitnessValue::from_matrix(sigma.data()));
            store_measurement(&mut inputs, &group);
            inputs.insert("outcomes".into(), WitnessValue::Ints(outcomes));
            ([op, state], [inputs.clone(), inputs])
        },
    )
}

/// Sub-cases for the equality conditions of the likelihood bound. Per trial:
///
/// - `basis`: rank-1 projectors commuting with a diagonal `σ` — equality in
///   both perspectives;
/// - `slice`: a rank-2 eigenspace in which `σ` occupies one dimension —
///   equality for the state perspective only, strict for the operator one;
/// - `block`: the same eigenspace with `σ` full rank and non-uniform inside
///   it — strict in both;
/// - `rotated`: projectors not commuting with `σ` — strict in both.
///
/// Equality sub-cases contribute `-|S + l|`; strictness sub-cases contribute
/// `(S + l) - MIN_SEPARATION`.
pub fn check_equality_conditions(dim: usize, trials: usize, seed: u64) -> [CheckResult; 2] {
    run_paired_check(
        "likelihood-equality",
        ["likelihood-equality-operator", "likelihood-equality-state"],
        MarginKind::Inequality,
        IDENTITY_TOL,
        trials,
        seed,
        |_, rng| {
            let mut worst: [Option<(f64, TrialInputs)>; 2] = [None, None];
            for case in equality_cases(dim, rng) {
                for (side, perspective) in ["operator", "state"].iter().enumerate() {
                    let raw = equality_margin(perspective, &case.sigma, &case.group, &case.freqs)
                        .expect("constructed equality cases evaluate");
                    let is_equality = case.equality[side];
                    let margin = if is_equality { -raw.abs() } else { raw - MIN_SEPARATION };
                    let replace = match &worst[side] {
                        None => true,
                        Some((m, _)) => margin < *m,
                    };
                    if replace {
                        let mut inputs = TrialInputs::new();
                        inputs.insert("case".into(), WitnessValue::Text(case.name.into()));
                        inputs.insert(
                            "perspective".into(),
                            WitnessValue::Text((*perspective).into()),
                        );
                        inputs.insert(
                            "transform".into(),
                            WitnessValue::Text(
                                if is_equality { "equality" } else { "separation" }.into(),
                            ),
                        );
                        inputs.insert("sigma".into(), WitnessValue::from_matrix(case.sigma.data()));
                        store_measurement(&mut inputs, &case.group);
                        inputs.insert("freqs".into(), WitnessValue::Reals(case.freqs.clone()));
                        worst[side] = Some((margin, inputs));
                    }
                }
            }
            let [a, b] = worst;
            let (ma, ia) = a.expect("at least one sub-case ran");
            let (mb, ib) = b.expect("at least one sub-case ran");
            ([ma, mb], [ia, ib])
        },
    )
}

struct EqualityCase {
    name: &'static str,
    sigma: DensityMatrix,
    group: ProjectiveMeasurement,
    freqs: Vec<f64>,
    /// Whether [operator, state] perspectives are equality cases.
    equality: [bool; 2],
}

fn equality_cases(dim: usize, rng: &mut impl rand::Rng) -> Vec<EqualityCase> {
    let dim = dim.max(2);
    let mut cases = Vec::new();

    // rank-1 commuting: computational basis against a diagonal model
    let basis = ProjectiveMeasurement::computational(dim);
    let sigma = DensityMatrix::from_diagonal(&random_simplex(dim, rng)).unwrap();
    let truth = random_full_rank(dim, rng);
    let freqs = basis.outcome_probabilities(&truth).unwrap();
    cases.push(EqualityCase { name: "basis", sigma, group: basis, freqs, equality: [true, true] });

    // degenerate eigenspace constructions need a third dimension
    let d3 = dim.max(3);
    let group = degenerate_group(d3);

    // σ occupies a single ray of the rank-2 eigenspace: the support slice is
    // one-dimensional, so the state perspective reaches equality while the
    // operator perspective leaks outside supp(σ)
    let mut diag = random_simplex(d3 - 1, rng);
    diag.insert(1, 0.0);
    let sigma = DensityMatrix::from_diagonal(&diag).unwrap();
    let truth = random_full_rank(d3, rng);
    let freqs = group.outcome_probabilities(&truth).unwrap();
    cases.push(EqualityCase {
        name: "slice",
        sigma,
        group: group.clone(),
        freqs,
        equality: [false, true],
    });

    // σ full rank and non-uniform inside the degenerate eigenspace: strict
    // in both perspectives
    let mut diag = random_simplex(d3, rng);
    if (diag[0] - diag[1]).abs() < 0.05 {
        diag[0] += 0.05;
        let total: f64 = diag.iter().sum();
        for x in &mut diag {
            *x /= total;
        }
    }
    let sigma = DensityMatrix::from_diagonal(&diag).unwrap();
    let truth = random_full_rank(d3, rng);
    let freqs = group.outcome_probabilities(&truth).unwrap();
    cases.push(EqualityCase { name: "block", sigma, group, freqs, equality: [false, false] });

    // non-commuting rank-1 projectors: a fixed rotation in the (0,1) plane
    let rotated = rotated_basis(dim);
    let sigma = {
        let mut diag = random_simplex(dim, rng);
        if (diag[0] - diag[1]).abs() < 0.05 {
            diag[0] += 0.05;
            let total: f64 = diag.iter().sum();
            for x in &mut diag {
                *x /= total;
            }
        }
        DensityMatrix::from_diagonal(&diag).unwrap()
    };
    let truth = random_full_rank(dim, rng);
    let freqs = rotated.outcome_probabilities(&truth).unwrap();
    cases.push(EqualityCase {
        name: "rotated",
        sigma,
        group: rotated,
        freqs,
        equality: [false, false],
    });

    cases
}

/// Measurement whose first projector spans `{e0, e1}` (rank 2), with rank-1
/// projectors on the remaining basis directions.
fn degenerate_group(dim: usize) -> ProjectiveMeasurement {
    let mut first = CMatrix::zeros(dim, dim);
    first[(0, 0)] = c(1.0, 0.0);
    first[(1, 1)] = c(1.0, 0.0);
    let mut projectors = vec![first];
    for i in 2..dim {
        let mut p = CMatrix::zeros(dim, dim);
        p[(i, i)] = c(1.0, 0.0);
        projectors.push(p);
    }
    ProjectiveMeasurement::new(projectors, None).expect("block projectors are valid")
}

/// Computational basis rotated by a fixed angle in the `(0, 1)` plane.
fn rotated_basis(dim: usize) -> ProjectiveMeasurement {
    let theta = std::f64::consts::PI / 5.0;
    let mut u = CMatrix::identity(dim, dim);
    u[(0, 0)] = c(theta.cos(), 0.0);
    u[(0, 1)] = c(-theta.sin(), 0.0);
    u[(1, 0)] = c(theta.sin(), 0.0);
    u[(1, 1)] = c(theta.cos(), 0.0);
    let projectors = (0..dim)
        .map(|k| {
            let col = u.column(k);
            col * col.adjoint()
        })
        .collect();
    ProjectiveMeasurement::new(projectors, None).expect("rotated basis is valid")
}

/// The POVM fixture on which the state-perspective likelihood bound fails.
///
/// For `σ = diag(2/3, 1/3)`, `M₁ = |0⟩⟨1|`-free keep and `M₂ = |0⟩⟨1|`:
/// both post-measurement states equal `|0⟩⟨0|`, both score
/// `tr(ρ log σ) = log(2/3)`, but outcome 2 has probability `1/3`, so the
/// per-record bound `tr(ρ₂ log σ) ≤ log tr(M₂*M₂σ)` is strictly violated by
/// `log 2`.
pub fn check_povm_counterexample() -> CheckResult {
    let (margin, inputs) = povm_counterexample_margin();
    CheckResult::from_worst(
        "povm-counterexample",
        MarginKind::Inequality,
        EXACT_IDENTITY_TOL,
        1,
        Some((0, margin, inputs)),
    )
}

fn povm_counterexample_margin() -> (f64, TrialInputs) {
    let sigma = DensityMatrix::from_diagonal(&[2.0 / 3.0, 1.0 / 3.0]).unwrap();
    let mut m1 = CMatrix::zeros(2, 2);
    m1[(0, 0)] = c(1.0, 0.0);
    let mut m2 = CMatrix::zeros(2, 2);
    m2[(0, 1)] = c(1.0, 0.0);
    let povm = Povm::new(vec![m1.clone(), m2.clone()]).expect("fixture is a valid POVM");

    let completeness = {
        let sum = m1.adjoint() * &m1 + m2.adjoint() * &m2;
        max_abs_diff(&sum, &CMatrix::identity(2, 2))
    };
    let rho1 = povm_post_state(&m1, &sigma).unwrap();
    let rho2 = povm_post_state(&m2, &sigma).unwrap();
    let post_states_identical = max_abs_diff(rho1.data(), rho2.data());

    let log_sigma = matrix_log(sigma.data(), DEFAULT_SUPPORT_TOL).unwrap().matrix;
    let score1 = trace_product(rho1.data(), &log_sigma).re;
    let score2 = trace_product(rho2.data(), &log_sigma).re;
    let probs = povm.outcome_probabilities(&sigma).unwrap();
    let log_p1 = probs[0].ln();
    let log_p2 = probs[1].ln();

    let expect_23 = (2.0f64 / 3.0).ln();
    let expect_13 = (1.0f64 / 3.0).ln();
    // per-record bound for outcome 2 must be strictly violated:
    // tr(ρ₂ log σ) = log 2/3 > log 1/3 = log tr(M₂*M₂ σ)
    let violation_gap = score2 - log_p2;

    let sub_margins = [
        -completeness,
        -post_states_identical,
        -(score1 - expect_23).abs(),
        -(score2 - expect_23).abs(),
        -(log_p1 - expect_23).abs(),
        -(log_p2 - expect_13).abs(),
        violation_gap - MIN_SEPARATION,
    ];
    let margin = sub_margins.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut inputs = TrialInputs::new();
    inputs.insert("sigma".into(), WitnessValue::from_matrix(sigma.data()));
    inputs.insert("m1".into(), WitnessValue::from_matrix(&m1));
    inputs.insert("m2".into(), WitnessValue::from_matrix(&m2));
    inputs.insert("tr_rho1_log_sigma".into(), WitnessValue::Scalar(score1));
    inputs.insert("tr_rho2_log_sigma".into(), WitnessValue::Scalar(score2));
    inputs.insert("log_prob_1".into(), WitnessValue::Scalar(log_p1));
    inputs.insert("log_prob_2".into(), WitnessValue::Scalar(log_p2));
    inputs.insert("violation_gap".into(), WitnessValue::Scalar(violation_gap));
    (margin, inputs)
}

/// Check `rank(Π P_σ) = rank(ΠσΠ)` over random projectors and states of
/// assorted ranks.
pub fn check_support_rank(dim: usize, trials: usize, seed: u64) -> CheckResult {
    run_check(
        "support-rank-equality",
        MarginKind::Identity,
        IDENTITY_TOL,
        trials,
        seed,
        |trial, rng| {
            let rank_p = 1 + (trial as usize) % dim;
            let rank_s = 1 + rng.random_range(0..dim);
            let projector = random_projector(dim, rank_p, rng);
            let sigma = random_density(dim, rank_s, rng);
            let margin = support_rank_margin(&projector, &sigma);
            let mut inputs = TrialInputs::new();
            inputs.insert("projector".into(), WitnessValue::from_matrix(&projector));
            inputs.insert("sigma".into(), WitnessValue::from_matrix(sigma.data()));
            (margin, inputs)
        },
    )
}

/// Check that `[ΠσΠ, σ] = 0` and `[Π, σ] = 0` are equivalent on instances
/// with `rank(ΠσΠ) = 1`, mixing commuting, tilted, and random families.
pub fn check_commutator_equivalence(dim: usize, trials: usize, seed: u64) -> CheckResult {
    run_check(
        "commutator-equivalence",
        MarginKind::Inequality,
        IDENTITY_TOL,
        trials,
        seed,
        |trial, rng| {
            let dim = dim.max(2);
            let (projector, sigma) = match trial % 4 {
                0 => {
                    // commuting: basis projector against a diagonal state
                    let i = rng.random_range(0..dim);
                    let mut p = CMatrix::zeros(dim, dim);
                    p[(i, i)] = c(1.0, 0.0);
                    let sigma = DensityMatrix::from_diagonal(&random_simplex(dim, rng)).unwrap();
                    (p, sigma)
                }
                1 => {
                    // tilted rank-1 projector against a diagonal state
                    let psi = random_pure(dim, rng);
                    let sigma = DensityMatrix::from_diagonal(&random_simplex(dim, rng)).unwrap();
                    (psi.density().data().clone(), sigma)
                }
                2 => {
                    // higher-rank projector against a pure state: ΠσΠ is
                    // rank 1 whenever Πψ ≠ 0
                    let rank = 1 + rng.random_range(0..dim);
                    let p = random_projector(dim, rank, rng);
                    let sigma = random_density(dim, 1, rng);
                    (p, sigma)
                }
                _ => {
                    // generic rank-1 projector against a generic state
                    let psi = random_pure(dim, rng);
                    let rank = 1 + rng.random_range(0..dim);
                    let sigma = random_density(dim, rank, rng);
                    (psi.density().data().clone(), sigma)
                }
            };
            // the lemma's precondition
            let conditioned = &projector * sigma.data() * &projector;
            let margin = if numerical_rank(&conditioned, RANK_TOL) != 1 {
                0.0 // instance outside the rank-1 condition: vacuous
            } else {
                commutator_equivalence_margin(&projector, sigma.data())
                    .expect("square inputs commute-check")
            };
            let mut inputs = TrialInputs::new();
            inputs.insert("projector".into(), WitnessValue::from_matrix(&projector));
            inputs.insert("sigma".into(), WitnessValue::from_matrix(sigma.data()));
            (margin, inputs)
        },
    )
}

/// All scalar-quantity checks: positivity and the zero case, unitary
/// invariance, linearity, the convexity family, extensivity, the
/// decomposition into relative entropy plus entropy, the lower-bound chain
/// with its equality diagnostics, the measure-without-readout identity, and
/// the classical identities.
pub fn check_propositions(dim: usize, trials: usize, seed: u64) -> Vec<CheckResult> {
    let mut results = Vec::new();

    results.push(run_check(
        "cross-entropy-positivity",
        MarginKind::Inequality,
        INEQ_TOL,
        trials,
        seed,
        |_, rng| {
            let rho = random_full_rank(dim, rng);
            let sigma = random_full_rank(dim, rng);
            let margin = quantum_cross_entropy(&rho, &sigma).unwrap().as_f64();
            let mut inputs = TrialInputs::new();
            inputs.insert("rho".into(), WitnessValue::from_matrix(rho.data()));
            inputs.insert("sigma".into(), WitnessValue::from_matrix(sigma.data()));
            (margin, inputs)
        },
    ));

    results.push(run_check(
        "cross-entropy-zero-iff-pure",
        MarginKind::Inequality,
        INEQ_TOL,
        trials,
        seed,
        |_, rng| {
            let psi = random_pure(dim, rng);
            let other = random_pure(dim, rng);
            let margin = zero_iff_pure_margin(psi.density().data(), other.density().data())
                .expect("constructed states are valid");
            let mut inputs = TrialInputs::new();
            inputs.insert("pure".into(), WitnessValue::from_matrix(psi.density().data()));
            inputs.insert("other_pure".into(), WitnessValue::from_matrix(other.density().data()));
            (margin, inputs)
        },
    ));

    results.push(run_check(
        "unitary-invariance",
        MarginKind::Identity,
        IDENTITY_TOL,
        trials,
        seed,
        |_, rng| {
            let rho = random_full_rank(dim, rng);
            let sigma = random_full_rank(dim, rng);
            let u = random_unitary(dim, rng);
            let margin = unitary_invariance_margin(&rho, &sigma, &u)
                .expect("rotated states stay valid");
            let mut inputs = TrialInputs::new();
            inputs.insert("rho".into(), WitnessValue::from_matrix(rho.data()));
            inputs.insert("sigma".into(), WitnessValue::from_matrix(sigma.data()));
            inputs.insert("unitary".into(), WitnessValue::from_matrix(&u));
            (margin, inputs)
        },
    ));

    results.push(run_check(
        "linearity-first-argument",
        MarginKind::Identity,
        1e-10,
        trials,
        seed,
        |_, rng| {
            let parts: Vec<DensityMatrix> =
                (0..3).map(|_| random_full_rank(dim, rng)).collect();
            let weights = random_simplex(3, rng);
            let sigma = random_full_rank(dim, rng);
            let margin = linearity_margin(&parts, &weights, &sigma).expect("mixtures are valid");
            let mut inputs = TrialInputs::new();
            for (i, p) in parts.iter().enumerate() {
                inputs.insert(format!("rho_{i}"), WitnessValue::from_matrix(p.data()));
            }
            inputs.insert("weights".into(), WitnessValue::Reals(weights));
            inputs.insert("sigma".into(), WitnessValue::from_matrix(sigma.data()));
            (margin, inputs)
        },
    ));

    results.push(run_check(
        "convexity-second-argument",
        MarginKind::Inequality,
        INEQ_TOL,
        trials,
        seed,
        |_, rng| {
            let rho = random_full_rank(dim, rng);
            let parts: Vec<DensityMatrix> =
                (0..3).map(|_| random_full_rank(dim, rng)).collect();
            let weights = random_simplex(3, rng);
            let margin = convexity_margin(&rho, &parts, &weights).expect("mixtures are valid");
            let mut inputs = TrialInputs::new();
            inputs.insert("rho".into(), WitnessValue::from_matrix(rho.data()));
            for (i, p) in parts.iter().enumerate() {
                inputs.insert(format!("sigma_{i}"), WitnessValue::from_matrix(p.data()));
            }
            inputs.insert("weights".into(), WitnessValue::Reals(weights));
            (margin, inputs)
        },
    ));

    results.push(run_check(
        "joint-convexity",
        MarginKind::Inequality,
        INEQ_TOL,
        trials,
        seed,
        |_, rng| {
            let rhos: Vec<DensityMatrix> = (0..2).map(|_| random_full_rank(dim, rng)).collect();
            let sigmas: Vec<DensityMatrix> =
                (0..2).map(|_| random_full_rank(dim, rng)).collect();
            let p = random_simplex(2, rng);
            let q = random_simplex(2, rng);
            let margin =
                joint_convexity_margin(&rhos, &p, &sigmas, &q).expect("mixtures are valid");
            let mut inputs = TrialInputs::new();
            for (i, r) in rhos.iter().enumerate() {
                inputs.insert(format!("rho_{i}"), WitnessValue::from_matrix(r.data()));
            }
            for (i, s) in sigmas.iter().enumerate() {
                inputs.insert(format!("sigma_{i}"), WitnessValue::from_matrix(s.data()));
            }
            inputs.insert("p".into(), WitnessValue::Reals(p));
            inputs.insert("q".into(), WitnessValue::Reals(q));
            (margin, inputs)
        },
    ));

    results.push(run_check(
        "extensivity",
        MarginKind::Identity,
        IDENTITY_TOL,
        trials,
        seed,
        |_, rng| {
            let rho1 = random_full_rank(dim, rng);
            let sigma1 = random_full_rank(dim, rng);
            let rho2 = random_full_rank(2, rng);
            let sigma2 = random_full_rank(2, rng);
            let margin = extensivity_margin(&rho1, &sigma1, &rho2, &sigma2)
                .expect("tensor products are valid");
            let mut inputs = TrialInputs::new();
            inputs.insert("rho_1".into(), WitnessValue::from_matrix(rho1.data()));
            inputs.insert("sigma_1".into(), WitnessValue::from_matrix(sigma1.data()));
            inputs.insert("rho_2".into(), WitnessValue::from_matrix(rho2.data()));
            inputs.insert("sigma_2".into(), WitnessValue::from_matrix(sigma2.data()));
            (margin, inputs)
        },
    ));

    results.push(run_check(
        "cross-entropy-decomposition",
        MarginKind::Identity,
        1e-10,
        trials,
        seed,
        |_, rng| {
            let rho = random_full_rank(dim, rng);
            let sigma = random_full_rank(dim, rng);
            let margin = decomposition_margin(&rho, &sigma).expect("full-rank pairs are finite");
            let mut inputs = TrialInputs::new();
            inputs.insert("rho".into(), WitnessValue::from_matrix(rho.data()));
            inputs.insert("sigma".into(), WitnessValue::from_matrix(sigma.data()));
            (margin, inputs)
        },
    ));

    results.push(run_check(
        "bound-chain",
        MarginKind::Inequality,
        INEQ_TOL,
        trials,
        seed,
        |trial, rng| {
            let rank_r = 1 + (trial as usize) % dim;
            let rho = random_density(dim, rank_r, rng);
            let sigma = random_full_rank(dim, rng);
            let margin = bound_chain_margin(&rho, &sigma).expect("chains evaluate");
            let mut inputs = TrialInputs::new();
            inputs.insert("rho".into(), WitnessValue::from_matrix(rho.data()));
            inputs.insert("sigma".into(), WitnessValue::from_matrix(sigma.data()));
            (margin, inputs)
        },
    ));

    results.push(run_check(
        "bound-chain-equality",
        MarginKind::Inequality,
        INEQ_TOL,
        trials,
        seed,
        |_, rng| {
            let rho = random_full_rank(dim, rng);
            let psi = random_pure(dim, rng);
            let basis_index = rng.random_range(0..dim);
            let diag = random_simplex(dim, rng);
            let margin = bound_chain_equality_margin(&rho, &psi.density(), basis_index, &diag)
                .expect("equality fixtures evaluate");
            let mut inputs = TrialInputs::new();
            inputs.insert("rho".into(), WitnessValue::from_matrix(rho.data()));
            inputs.insert("pure".into(), WitnessValue::from_matrix(psi.density().data()));
            inputs.insert("basis_index".into(), WitnessValue::Int(basis_index as u64));
            inputs.insert("diag".into(), WitnessValue::Reals(diag));
            (margin, inputs)
        },
    ));

    results.push(run_check(
        "measurement-no-readout",
        MarginKind::Identity,
        IDENTITY_TOL,
        trials,
        seed,
        |trial, rng| {
            let rho = random_full_rank(dim, rng);
            let observable = random_observable(dim, trial % 2 == 1, rng);
            let group = ProjectiveMeasurement::from_observable(&observable, DEFAULT_CLUSTER_TOL)
                .expect("random observables are Hermitian");
            let margin = no_readout_margin(&rho, &group).expect("averaged states are valid");
            let mut inputs = TrialInputs::new();
            inputs.insert("rho".into(), WitnessValue::from_matrix(rho.data()));
            store_measurement(&mut inputs, &group);
            (margin, inputs)
        },
    ));

    results.push(run_check(
        "classical-likelihood-identity",
        MarginKind::Identity,
        EXACT_IDENTITY_TOL,
        trials,
        seed,
        |_, rng| {
            let probs = random_simplex(5, rng);
            let outcomes: Vec<u64> = (0..200)
                .map(|_| {
                    let u: f64 = rng.random();
                    let mut cumulative = 0.0;
                    for (i, &p) in probs.iter().enumerate() {
                        cumulative += p;
                        if u < cumulative {
                            return i as u64;
                        }
                    }
                    probs.len() as u64 - 1
                })
                .collect();
            let margin = classical_identity_margin(&probs, &outcomes)
                .expect("sampled outcomes are in support");
            let mut inputs = TrialInputs::new();
            inputs.insert("model".into(), WitnessValue::Reals(probs));
            inputs.insert("outcomes".into(), WitnessValue::Ints(outcomes));
            (margin, inputs)
        },
    ));

    results.push(run_check(
        "classical-bound-chain",
        MarginKind::Inequality,
        INEQ_TOL,
        trials,
        seed,
        |_, rng| {
            let p = random_simplex(5, rng);
            let q = random_simplex(5, rng);
            let margin = classical_chain_margin(&p, &q).expect("distributions are valid");
            let mut inputs = TrialInputs::new();
            inputs.insert("p".into(), WitnessValue::Reals(p));
            inputs.insert("q".into(), WitnessValue::Reals(q));
            (margin, inputs)
        },
    ));

    results
}

// margin bodies shared with replay -----------------------------------------

fn zero_iff_pure_margin(pure: &CMatrix, other_pure: &CMatrix) -> Result<f64> {
    let psi = DensityMatrix::from_matrix(pure.clone())?;
    let phi = DensityMatrix::from_matrix(other_pure.clone())?;
    let mut margins = Vec::new();

    // identical pure states score zero
    let s_same = quantum_cross_entropy(&psi, &psi)?.as_f64();
    margins.push(-s_same.abs());
    // and whenever the score is zero the states must coincide and be pure
    if s_same < IDENTITY_TOL {
        margins.push(1e-5 - trace_distance(&psi, &psi)?);
        margins.push(1e-6 - von_neumann(&psi));
    }
    // distinct pure states score strictly positive (usually +inf)
    let s_diff = quantum_cross_entropy(&psi, &phi)?.as_f64();
    margins.push(s_diff - MIN_SEPARATION);
    // identical mixed states score their own entropy, strictly positive
    let mixed = DensityMatrix::from_diagonal(&[2.0 / 3.0, 1.0 / 3.0])?;
    let s_mixed = quantum_cross_entropy(&mixed, &mixed)?.as_f64();
    margins.push(s_mixed - MIN_SEPARATION);

    Ok(margins.into_iter().fold(f64::INFINITY, f64::min))
}

fn unitary_invariance_margin(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    u: &CMatrix,
) -> Result<f64> {
    let rho_rot = DensityMatrix::from_matrix(u * rho.data() * u.adjoint())?;
    let sigma_rot = DensityMatrix::from_matrix(u * sigma.data() * u.adjoint())?;
    let a = quantum_cross_entropy(rho, sigma)?.as_f64();
    let b = quantum_cross_entropy(&rho_rot, &sigma_rot)?.as_f64();
    Ok(a - b)
}

fn linearity_margin(
    parts: &[DensityMatrix],
    weights: &[f64],
    sigma: &DensityMatrix,
) -> Result<f64> {
    let dim = sigma.dim();
    let mut mix = CMatrix::zeros(dim, dim);
    let mut weighted = 0.0;
    for (rho, &w) in parts.iter().zip(weights) {
        mix += rho.data().scale(w);
        weighted += w * quantum_cross_entropy(rho, sigma)?.as_f64();
    }
    let mix = DensityMatrix::from_matrix(mix)?;
    Ok(quantum_cross_entropy(&mix, sigma)?.as_f64() - weighted)
}

fn convexity_margin(
    rho: &DensityMatrix,
    sigmas: &[DensityMatrix],
    weights: &[f64],
) -> Result<f64> {
    let dim = rho.dim();
    let mut mix = CMatrix::zeros(dim, dim);
    let mut weighted = 0.0;
    for (sigma, &w) in sigmas.iter().zip(weights) {
        mix += sigma.data().scale(w);
        weighted += w * quantum_cross_entropy(rho, sigma)?.as_f64();
    }
    let mix = DensityMatrix::from_matrix(mix)?;
    Ok(weighted - quantum_cross_entropy(rho, &mix)?.as_f64())
}

fn joint_convexity_margin(
    rhos: &[DensityMatrix],
    p: &[f64],
    sigmas: &[DensityMatrix],
    q: &[f64],
) -> Result<f64> {
    let dim = rhos[0].dim();
    let mut rho_mix = CMatrix::zeros(dim, dim);
    for (rho, &w) in rhos.iter().zip(p) {
        rho_mix += rho.data().scale(w);
    }
    let mut sigma_mix = CMatrix::zeros(dim, dim);
    for (sigma, &w) in sigmas.iter().zip(q) {
        sigma_mix += sigma.data().scale(w);
    }
    let rho_mix = DensityMatrix::from_matrix(rho_mix)?;
    let sigma_mix = DensityMatrix::from_matrix(sigma_mix)?;
    let mut weighted = 0.0;
    for (rho, &pi) in rhos.iter().zip(p) {
        for (sigma, &qj) in sigmas.iter().zip(q) {
            weighted += pi * qj * quantum_cross_entropy(rho, sigma)?.as_f64();
        }
    }
    Ok(weighted - quantum_cross_entropy(&rho_mix, &sigma_mix)?.as_f64())
}

fn extensivity_margin(
    rho1: &DensityMatrix,
    sigma1: &DensityMatrix,
    rho2: &DensityMatrix,
    sigma2: &DensityMatrix,
) -> Result<f64> {
    let joint = quantum_cross_entropy(&tensor(rho1, rho2), &tensor(sigma1, sigma2))?.as_f64();
    let split = quantum_cross_entropy(rho1, sigma1)?.as_f64()
        + quantum_cross_entropy(rho2, sigma2)?.as_f64();
    Ok(joint - split)
}

fn decomposition_margin(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let cross = quantum_cross_entropy(rho, sigma)?.as_f64();
    let relative = quantum_relative_entropy(rho, sigma)?.as_f64();
    Ok(cross - relative - von_neumann(rho))
}

fn bound_chain_margin(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let chain = bound_chain(rho, sigma)?;
    Ok(chain.gap_overlap.as_f64().min(chain.gap_fidelity.as_f64()))
}

fn bound_chain_equality_margin(
    rho: &DensityMatrix,
    pure: &DensityMatrix,
    basis_index: usize,
    diag: &[f64],
) -> Result<f64> {
    let dim = rho.dim();
    let mut margins = Vec::new();

    // a maximally mixed model meets the overlap bound with equality
    let mixed = DensityMatrix::maximally_mixed(dim);
    let chain = bound_chain(rho, &mixed)?;
    margins.push(-chain.gap_overlap.as_f64().abs());

    // identical pure states collapse the whole chain to zero
    let chain = bound_chain(pure, pure)?;
    margins.push(-chain.cross_entropy.as_f64().abs());
    margins.push(-chain.neg_log_overlap.as_f64().abs());
    margins.push(-chain.neg_log_fidelity.as_f64().abs());

    // a rank-1 state commuting with the model also meets the overlap bound
    let basis = crate::states::PureState::basis(dim, basis_index % dim).density();
    let sigma = DensityMatrix::from_diagonal(diag)?;
    let chain = bound_chain(&basis, &sigma)?;
    margins.push(-chain.gap_overlap.as_f64().abs());

    Ok(margins.into_iter().fold(f64::INFINITY, f64::min))
}

fn no_readout_margin(rho: &DensityMatrix, group: &ProjectiveMeasurement) -> Result<f64> {
    let dim = rho.dim();
    let mut averaged = CMatrix::zeros(dim, dim);
    for q in group.projectors() {
        averaged += q * rho.data() * q;
    }
    let sigma = DensityMatrix::from_matrix(averaged)?;
    Ok(quantum_cross_entropy(rho, &sigma)?.as_f64() - von_neumann(&sigma))
}

fn classical_identity_margin(model: &[f64], outcomes: &[u64]) -> Result<f64> {
    let labels: Vec<String> = (0..model.len()).map(|i| i.to_string()).collect();
    let dist = ClassicalDist::new(labels.clone(), model.to_vec())?;
    let data: Vec<String> = outcomes.iter().map(|&k| k.to_string()).collect();
    let empirical = empirical_distribution(&data, &labels)?;
    let h = classical_cross_entropy(&empirical, &dist)?.as_f64();
    let l = classical_avg_log_likelihood(&data, &dist)?.as_f64();
    Ok(h + l)
}

fn classical_chain_margin(p: &[f64], q: &[f64]) -> Result<f64> {
    let pd = ClassicalDist::from_probs(p.to_vec())?;
    let qd = ClassicalDist::from_probs(q.to_vec())?;
    let h = classical_cross_entropy(&pd, &qd)?.as_f64();
    let overlap: f64 = p.iter().zip(q).map(|(&a, &b)| a * b).sum();
    let fidelity = classical_fidelity(&pd, &qd)?;
    let first = h - (-overlap.ln());
    let second = -overlap.ln() - (-fidelity.ln());
    Ok(first.min(second))
}

// ---------------------------------------------------------------------------
// Witness replay
// ---------------------------------------------------------------------------

/// Re-evaluate a stored witness through the margin code path of its check.
/// The returned margin reproduces the stored one.
pub fn replay(check_id: &str, witness: &Witness) -> Result<f64> {
    match check_id {
        "likelihood-bound-operator" | "likelihood-bound-state" => {
            let sigma = witness.density("sigma")?;
            let group = load_measurement(witness)?;
            let outcomes = witness.ints("outcomes")?;
            let (op, state) = likelihood_bound_margins(&sigma, &group, &outcomes)?;
            Ok(if check_id.ends_with("operator") { op } else { state })
        }
        "likelihood-equality-operator" | "likelihood-equality-state" => {
            let sigma = witness.density("sigma")?;
            let group = load_measurement(witness)?;
            let freqs = witness.reals("freqs")?;
            let perspective = witness.text("perspective")?.to_string();
            let raw = equality_margin(&perspective, &sigma, &group, &freqs)?;
            Ok(match witness.text("transform")? {
                "equality" => -raw.abs(),
                _ => raw - MIN_SEPARATION,
            })
        }
        "povm-counterexample" => Ok(povm_counterexample_margin().0),
        "support-rank-equality" => {
            let projector = witness.matrix("projector")?;
            let sigma = witness.density("sigma")?;
            Ok(support_rank_margin(&projector, &sigma))
        }
        "commutator-equivalence" => {
            let projector = witness.matrix("projector")?;
            let sigma = witness.matrix("sigma")?;
            let conditioned = &projector * &sigma * &projector;
            if numerical_rank(&conditioned, RANK_TOL) != 1 {
                Ok(0.0)
            } else {
                commutator_equivalence_margin(&projector, &sigma)
            }
        }
        "cross-entropy-positivity" => {
            let rho = witness.density("rho")?;
            let sigma = witness.density("sigma")?;
            Ok(quantum_cross_entropy(&rho, &sigma)?.as_f64())
        }
        "cross-entropy-zero-iff-pure" => {
            zero_iff_pure_margin(&witness.matrix("pure")?, &witness.matrix("other_pure")?)
        }
        "unitary-invariance" => {
            let rho = witness.density("rho")?;
            let sigma = witness.density("sigma")?;
            unitary_invariance_margin(&rho, &sigma, &witness.matrix("unitary")?)
        }
        "linearity-first-argument" => {
            let parts = (0..3)
                .map(|i| witness.density(&format!("rho_{i}")))
                .collect::<Result<Vec<_>>>()?;
            linearity_margin(&parts, &witness.reals("weights")?, &witness.density("sigma")?)
        }
        "convexity-second-argument" => {
            let sigmas = (0..3)
                .map(|i| witness.density(&format!("sigma_{i}")))
                .collect::<Result<Vec<_>>>()?;
            convexity_margin(&witness.density("rho")?, &sigmas, &witness.reals("weights")?)
        }
        "joint-convexity" => {
            let rhos = (0..2)
                .map(|i| witness.density(&format!("rho_{i}")))
                .collect::<Result<Vec<_>>>()?;
            let sigmas = (0..2)
                .map(|i| witness.density(&format!("sigma_{i}")))
                .collect::<Result<Vec<_>>>()?;
            joint_convexity_margin(&rhos, &witness.reals("p")?, &sigmas, &witness.reals("q")?)
        }
        "extensivity" => extensivity_margin(
            &witness.density("rho_1")?,
            &witness.density("sigma_1")?,
            &witness.density("rho_2")?,
            &witness.density("sigma_2")?,
        ),
        "cross-entropy-decomposition" => {
            decomposition_margin(&witness.density("rho")?, &witness.density("sigma")?)
        }
        "bound-chain" => bound_chain_margin(&witness.density("rho")?, &witness.density("sigma")?),
        "bound-chain-equality" => bound_chain_equality_margin(
            &witness.density("rho")?,
            &witness.density("pure")?,
            witness.int("basis_index")? as usize,
            &witness.reals("diag")?,
        ),
        "measurement-no-readout" => {
            no_readout_margin(&witness.density("rho")?, &load_measurement(witness)?)
        }
        "classical-likelihood-identity" => {
            classical_identity_margin(&witness.reals("model")?, &witness.ints("outcomes")?)
        }
        "classical-bound-chain" => {
            classical_chain_margin(&witness.reals("p")?, &witness.reals("q")?)
        }
        other => Err(Error::MalformedWitness { reason: format!("unknown check id {other:?}") }),
    }
}

// ---------------------------------------------------------------------------
// Suite registry
// ---------------------------------------------------------------------------

/// Parameters shared by every suite invocation.
#[derive(Debug, Clone, Copy)]
pub struct SuiteParams {
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Names accepted by [`run_suite`], in canonical order.
pub const SUITE_NAMES: [&str; 6] = [
    "propositions",
    "likelihood-bound",
    "equality-conditions",
    "povm-counterexample",
    "support-rank",
    "commutator-equivalence",
];

/// Run one named suite.
pub fn run_suite(name: &str, params: SuiteParams) -> Result<Vec<CheckResult>> {
    let SuiteParams { dim, trials, seed } = params;
    match name {
        "propositions" => Ok(check_propositions(dim, trials, seed)),
        "likelihood-bound" => Ok(check_likelihood_bound(dim, trials, true, seed).to_vec()),
        "equality-conditions" => Ok(check_equality_conditions(dim, trials, seed).to_vec()),
        "povm-counterexample" => Ok(vec![check_povm_counterexample()]),
        "support-rank" => Ok(vec![check_support_rank(dim, trials, seed)]),
        "commutator-equivalence" => Ok(vec![check_commutator_equivalence(dim, trials, seed)]),
        other => Err(Error::MalformedWitness { reason: format!("unknown suite {other:?}") }),
    }
}
