//! Measurement datasets, empirical distributions, empirical density
//! matrices, and log-likelihoods.
//!
//! A dataset is an ordered list of records `(j, k)`: outcome `k` of
//! measurement group `j`. Every record points at a projector `Π_n`, and two
//! empirical reconstructions average over them:
//!
//! ```text
//! ρᴼ = (1/N) Σ_n Π_n / tr(Π_n)          (operator perspective)
//! ρˢ = (1/N) Σ_n Π_n σ Π_n / tr(Π_n σ)  (state perspective, model σ)
//! ```
//!
//! The state perspective depends on the model it conditions on, so an
//! [`EmpiricalState`] built that way remembers its `σ` and refuses to be
//! scored against a different one.
//!
//! Average log-likelihoods are `(1/N) Σ log tr(Π_n σ)`, `-∞` when a record
//! has zero probability — a legal model outcome, not an error. Long record
//! sums use compensated summation so the grouped form
//! `Σ_j Σ_k (N_jk/N) log tr(E_jk σ)` agrees with the record form to
//! addition-order noise.
//!
//! Dataset files store projector indices plus a manifest hash of the
//! measurement set, not matrices; re-reading requires the same measurement
//! set and both the CSV and the line-delimited JSON forms round-trip
//! bit-exactly.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::entropy::{classical_cross_entropy, quantum_cross_entropy, ClassicalDist, ExtendedReal};
use crate::error::{Error, Result};
use crate::matfun::max_abs_diff;
use crate::measurement::{Povm, ProjectiveMeasurement, TomographicSet, ZERO_PROB_TOL};
use crate::numeric::compensated_sum;
use crate::states::{trace_product, DensityMatrix};

/// One measurement record: outcome `k` of group `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub j: usize,
    pub k: usize,
}

/// An ordered collection of measurement outcomes over a fixed set of
/// projective measurement groups.
#[derive(Debug, Clone)]
pub struct MeasurementDataset {
    groups: Vec<ProjectiveMeasurement>,
    records: Vec<Record>,
    seed: Option<u64>,
    manifest: String,
}

impl MeasurementDataset {
    /// Bind records to their measurement groups, validating that every
    /// record's projector exists in its group.
    pub fn new(
        groups: Vec<ProjectiveMeasurement>,
        records: Vec<Record>,
        seed: Option<u64>,
    ) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidMeasurement { reason: "no measurement groups".into() });
        }
        let dim = groups[0].dim();
        if groups.iter().any(|g| g.dim() != dim) {
            return Err(Error::InvalidMeasurement {
                reason: "measurement groups have mixed dimensions".into(),
            });
        }
        for (n, r) in records.iter().enumerate() {
            if r.j >= groups.len() || r.k >= groups[r.j].len() {
                return Err(Error::RecordOutOfRange { record: n, group: r.j, outcome: r.k });
            }
        }
        let manifest = manifest_hash(&groups);
        Ok(Self { groups, records, seed, manifest })
    }

    /// Sample a dataset from a true state: `shots[j]` outcomes drawn from
    /// group `j`, recorded in group order.
    pub fn sample(
        groups: Vec<ProjectiveMeasurement>,
        rho: &DensityMatrix,
        shots: &[usize],
        seed: Option<u64>,
        rng: &mut impl rand::Rng,
    ) -> Result<Self> {
        if shots.len() != groups.len() {
            return Err(Error::DimensionMismatch { left: shots.len(), right: groups.len() });
        }
        let mut records = Vec::with_capacity(shots.iter().sum());
        for (j, (group, &n)) in groups.iter().zip(shots.iter()).enumerate() {
            for k in group.sample_n(rho, n, rng)? {
                records.push(Record { j, k });
            }
        }
        Self::new(groups, records, seed)
    }

    /// Sample from a tomographic set with shots split by its group weights.
    pub fn sample_tomographic(
        set: &TomographicSet,
        rho: &DensityMatrix,
        shots_per_group: usize,
        seed: Option<u64>,
        rng: &mut impl rand::Rng,
    ) -> Result<Self> {
        let shots = vec![shots_per_group; set.len()];
        Self::sample(set.groups().to_vec(), rho, &shots, seed, rng)
    }

    pub fn dim(&self) -> usize {
        self.groups[0].dim()
    }

    /// Total record count `N`.
    pub fn total(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn groups(&self) -> &[ProjectiveMeasurement] {
        &self.groups
    }

    /// Seed recorded when the dataset was sampled, if any.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Hash of the measurement-set manifest this dataset indexes into.
    pub fn manifest(&self) -> &str {
        &self.manifest
    }

    /// Per-group record counts `N_j`.
    pub fn group_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.groups.len()];
        for r in &self.records {
            counts[r.j] += 1;
        }
        counts
    }

    /// Per-group, per-outcome counts `N_jk`.
    pub fn outcome_counts(&self) -> Vec<Vec<usize>> {
        let mut counts: Vec<Vec<usize>> =
            self.groups.iter().map(|g| vec![0usize; g.len()]).collect();
        for r in &self.records {
            counts[r.j][r.k] += 1;
        }
        counts
    }

    /// Observed conditional frequencies `q_jk = N_jk / N_j` (zero for groups
    /// with no records).
    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        let group_counts = self.group_counts();
        self.outcome_counts()
            .into_iter()
            .enumerate()
            .map(|(j, row)| {
                let n_j = group_counts[j];
                row.into_iter()
                    .map(|n_jk| if n_j == 0 { 0.0 } else { n_jk as f64 / n_j as f64 })
                    .collect()
            })
            .collect()
    }

    /// Projector referenced by one record.
    pub fn projector(&self, r: Record) -> &nalgebra::DMatrix<num_complex::Complex64> {
        self.groups[r.j].projector(r.k)
    }

    /// Merge datasets over the same measurement set. All derived quantities
    /// are order-insensitive; record order is kept for audit only.
    pub fn merge(mut self, other: MeasurementDataset) -> Result<Self> {
        if self.manifest != other.manifest {
            return Err(Error::ManifestMismatch {
                expected: self.manifest.clone(),
                found: other.manifest,
            });
        }
        self.records.extend(other.records);
        Ok(self)
    }
}

/// Stable content hash of a measurement set: dimensions, outcome labels, and
/// projector entries (exact f64 bit patterns), in group order.
pub fn manifest_hash(groups: &[ProjectiveMeasurement]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"qxent-measurement-manifest-v1");
    hasher.update((groups.len() as u64).to_le_bytes());
    for g in groups {
        hasher.update((g.dim() as u64).to_le_bytes());
        hasher.update((g.len() as u64).to_le_bytes());
        for &label in g.eigenvalues() {
            hasher.update(label.to_bits().to_le_bytes());
        }
        for p in g.projectors() {
            for z in p.iter() {
                hasher.update(z.re.to_bits().to_le_bytes());
                hasher.update(z.im.to_bits().to_le_bytes());
            }
        }
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Which reconstruction an empirical state came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Perspective {
    /// `Π/tr(Π)` per record: maximally mixed on each outcome eigenspace.
    Operator,
    /// `ΠσΠ/tr(Πσ)` per record: the model conditioned on each outcome.
    State,
}

/// An empirical density matrix together with its provenance.
#[derive(Debug, Clone)]
pub struct EmpiricalState {
    perspective: Perspective,
    matrix: DensityMatrix,
    model: Option<DensityMatrix>,
    source_manifest: String,
    source_records: usize,
}

impl EmpiricalState {
    pub fn perspective(&self) -> Perspective {
        self.perspective
    }

    pub fn matrix(&self) -> &DensityMatrix {
        &self.matrix
    }

    /// The model the state perspective conditioned on.
    pub fn model(&self) -> Option<&DensityMatrix> {
        self.model.as_ref()
    }

    pub fn source_records(&self) -> usize {
        self.source_records
    }

    pub fn source_manifest(&self) -> &str {
        &self.source_manifest
    }

    /// Cross entropy of a model against this empirical state.
    ///
    /// A state-perspective reconstruction is a function of the `σ` it was
    /// built from; scoring it against any other model is rejected rather
    /// than silently answering a different question.
    pub fn cross_entropy_vs(&self, sigma: &DensityMatrix) -> Result<ExtendedReal> {
        if let Some(model) = &self.model {
            if model.dim() != sigma.dim() || max_abs_diff(model.data(), sigma.data()) > 1e-12 {
                return Err(Error::ModelMismatch);
            }
        }
        quantum_cross_entropy(&self.matrix, sigma)
    }
}

/// Empirical density matrix in the operator perspective:
/// `(1/N) Σ_n Π_n / tr(Π_n)`.
pub fn empirical_operator(ds: &MeasurementDataset) -> Result<EmpiricalState> {
    let n = ds.total();
    if n == 0 {
        return Err(Error::MalformedDataset { reason: "dataset has no records".into() });
    }
    let dim = ds.dim();
    let mut sum = crate::matfun::CMatrix::zeros(dim, dim);
    for (j, row) in ds.outcome_counts().into_iter().enumerate() {
        for (k, n_jk) in row.into_iter().enumerate() {
            if n_jk == 0 {
                continue;
            }
            let p = ds.groups()[j].projector(k);
            let weight = n_jk as f64 / (n as f64 * p.trace().re);
            sum += p.scale(weight);
        }
    }
    Ok(EmpiricalState {
        perspective: Perspective::Operator,
        matrix: DensityMatrix::from_matrix(sum)?,
        model: None,
        source_manifest: ds.manifest().to_string(),
        source_records: n,
    })
}

/// Empirical density matrix in the state perspective:
/// `(1/N) Σ_n Π_n σ Π_n / tr(Π_n σ)`.
///
/// Every observed record must have `tr(Π_n σ) >` [`ZERO_PROB_TOL`]; the first
/// offending record index is reported otherwise.
pub fn empirical_state(ds: &MeasurementDataset, sigma: &DensityMatrix) -> Result<EmpiricalState> {
    let n = ds.total();
    if n == 0 {
        return Err(Error::MalformedDataset { reason: "dataset has no records".into() });
    }
    if sigma.dim() != ds.dim() {
        return Err(Error::DimensionMismatch { left: ds.dim(), right: sigma.dim() });
    }
    for (idx, r) in ds.records().iter().enumerate() {
        let prob = trace_product(ds.projector(*r), sigma.data()).re;
        if prob <= ZERO_PROB_TOL {
            return Err(Error::ZeroProbabilityRecord { record: idx });
        }
    }
    let dim = ds.dim();
    let mut sum = crate::matfun::CMatrix::zeros(dim, dim);
    for (j, row) in ds.outcome_counts().into_iter().enumerate() {
        for (k, n_jk) in row.into_iter().enumerate() {
            if n_jk == 0 {
                continue;
            }
            let p = ds.groups()[j].projector(k);
            let prob = trace_product(p, sigma.data()).re;
            let conditioned = p * sigma.data() * p;
            sum += conditioned.scale(n_jk as f64 / (n as f64 * prob));
        }
    }
    Ok(EmpiricalState {
        perspective: Perspective::State,
        matrix: DensityMatrix::from_matrix(sum)?,
        model: Some(sigma.clone()),
        source_manifest: ds.manifest().to_string(),
        source_records: n,
    })
}

/// Average log-likelihood of the dataset under a model:
/// `l(σ) = (1/N) Σ_n log tr(Π_n σ)`, `-∞` if any record has zero probability.
pub fn avg_log_likelihood(ds: &MeasurementDataset, sigma: &DensityMatrix) -> Result<ExtendedReal> {
    if sigma.dim() != ds.dim() {
        return Err(Error::DimensionMismatch { left: ds.dim(), right: sigma.dim() });
    }
    let n = ds.total();
    if n == 0 {
        return Err(Error::MalformedDataset { reason: "dataset has no records".into() });
    }
    let mut terms = Vec::with_capacity(n);
    for r in ds.records() {
        let prob = trace_product(ds.projector(*r), sigma.data()).re.max(0.0);
        if prob == 0.0 {
            return Ok(ExtendedReal::NegInf);
        }
        terms.push(prob.ln());
    }
    Ok(ExtendedReal::Finite(compensated_sum(terms) / n as f64))
}

/// The same likelihood evaluated from grouped counts:
/// `Σ_j Σ_k (N_jk/N) log tr(E_jk σ)`. Agrees with [`avg_log_likelihood`] up
/// to addition-order noise.
pub fn avg_log_likelihood_grouped(
    ds: &MeasurementDataset,
    sigma: &DensityMatrix,
) -> Result<ExtendedReal> {
    if sigma.dim() != ds.dim() {
        return Err(Error::DimensionMismatch { left: ds.dim(), right: sigma.dim() });
    }
    let n = ds.total();
    if n == 0 {
        return Err(Error::MalformedDataset { reason: "dataset has no records".into() });
    }
    let mut terms = Vec::new();
    for (j, row) in ds.outcome_counts().into_iter().enumerate() {
        for (k, n_jk) in row.into_iter().enumerate() {
            if n_jk == 0 {
                continue;
            }
            let prob = trace_product(ds.groups()[j].projector(k), sigma.data()).re.max(0.0);
            if prob == 0.0 {
                return Ok(ExtendedReal::NegInf);
            }
            terms.push(n_jk as f64 / n as f64 * prob.ln());
        }
    }
    Ok(ExtendedReal::Finite(compensated_sum(terms)))
}

/// Average log-likelihood of POVM outcomes, `(1/N) Σ log tr(M_i* M_i σ)`.
///
/// POVM data supports likelihood scoring only; no empirical density matrix
/// is defined for it, because a POVM element does not pin down a
/// post-measurement system state the averaging construction could use.
pub fn povm_avg_log_likelihood(
    povm: &Povm,
    outcomes: &[usize],
    sigma: &DensityMatrix,
) -> Result<ExtendedReal> {
    if sigma.dim() != povm.dim() {
        return Err(Error::DimensionMismatch { left: povm.dim(), right: sigma.dim() });
    }
    if outcomes.is_empty() {
        return Err(Error::MalformedDataset { reason: "no outcomes".into() });
    }
    let probs = povm.outcome_probabilities(sigma)?;
    let mut terms = Vec::with_capacity(outcomes.len());
    for (n, &i) in outcomes.iter().enumerate() {
        if i >= probs.len() {
            return Err(Error::RecordOutOfRange { record: n, group: 0, outcome: i });
        }
        if probs[i] <= 0.0 {
            return Ok(ExtendedReal::NegInf);
        }
        terms.push(probs[i].ln());
    }
    Ok(ExtendedReal::Finite(compensated_sum(terms) / outcomes.len() as f64))
}

/// Empirical distribution of classical outcomes over an explicit support:
/// `P(x) = (1/N) Σ_i 1{x = x_i}`.
pub fn empirical_distribution<S: AsRef<str>>(data: &[S], support: &[S]) -> Result<ClassicalDist> {
    if data.is_empty() {
        return Err(Error::InvalidDistribution { reason: "no outcomes observed".into() });
    }
    let labels: Vec<String> = support.iter().map(|s| s.as_ref().to_string()).collect();
    let mut counts = vec![0usize; labels.len()];
    for x in data {
        let x = x.as_ref();
        match labels.iter().position(|l| l == x) {
            Some(i) => counts[i] += 1,
            None => {
                return Err(Error::InvalidDistribution {
                    reason: format!("outcome {x:?} is not in the support"),
                })
            }
        }
    }
    let n = data.len() as f64;
    ClassicalDist::new(labels, counts.into_iter().map(|cnt| cnt as f64 / n).collect())
}

/// Average log-likelihood of classical outcomes under a model distribution:
/// `l(θ) = (1/N) Σ_i log P(x_i | θ)`.
pub fn classical_avg_log_likelihood<S: AsRef<str>>(
    data: &[S],
    model: &ClassicalDist,
) -> Result<ExtendedReal> {
    if data.is_empty() {
        return Err(Error::InvalidDistribution { reason: "no outcomes observed".into() });
    }
    let mut terms = Vec::with_capacity(data.len());
    for x in data {
        let x = x.as_ref();
        match model.prob_of(x) {
            Some(p) if p > 0.0 => terms.push(p.ln()),
            Some(_) => return Ok(ExtendedReal::NegInf),
            None => {
                return Err(Error::InvalidDistribution {
                    reason: format!("outcome {x:?} is not in the model support"),
                })
            }
        }
    }
    Ok(ExtendedReal::Finite(compensated_sum(terms) / data.len() as f64))
}

/// Cross entropy between the empirical distribution of a classical dataset
/// and a model; equal to the negative average log-likelihood.
pub fn classical_cross_entropy_of_data<S: AsRef<str>>(
    data: &[S],
    model: &ClassicalDist,
) -> Result<ExtendedReal> {
    let labels: Vec<String> = model.labels().to_vec();
    let empirical = empirical_distribution(
        &data.iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>(),
        &labels,
    )?;
    classical_cross_entropy(&empirical, model)
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

const CSV_MAGIC: &str = "# qxent-dataset v1";

#[derive(Serialize, Deserialize)]
struct JsonlHeader {
    dataset: String,
    version: u32,
    dim: usize,
    groups: usize,
    manifest: String,
    seed: Option<u64>,
}

impl MeasurementDataset {
    /// Write the CSV form: hash-comment header, a `j,k` column header, one
    /// record per row.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{CSV_MAGIC}")?;
        writeln!(w, "# dim={}", self.dim())?;
        writeln!(w, "# groups={}", self.groups.len())?;
        writeln!(w, "# manifest={}", self.manifest)?;
        match self.seed {
            Some(s) => writeln!(w, "# seed={s}")?,
            None => writeln!(w, "# seed=none")?,
        }
        writeln!(w, "j,k")?;
        for r in &self.records {
            writeln!(w, "{},{}", r.j, r.k)?;
        }
        Ok(())
    }

    /// Read the CSV form back against the measurement set it was written
    /// with; the manifest hash must match.
    pub fn read_csv(r: impl BufRead, groups: Vec<ProjectiveMeasurement>) -> Result<Self> {
        let mut lines = r.lines();
        let magic = next_line(&mut lines)?;
        if magic != CSV_MAGIC {
            return Err(Error::MalformedDataset { reason: format!("bad magic line {magic:?}") });
        }
        let dim: usize = parse_header_field(&next_line(&mut lines)?, "dim")?;
        let group_count: usize = parse_header_field(&next_line(&mut lines)?, "groups")?;
        let manifest_line = next_line(&mut lines)?;
        let manifest = manifest_line
            .strip_prefix("# manifest=")
            .ok_or_else(|| Error::MalformedDataset { reason: "missing manifest".into() })?
            .to_string();
        let seed_line = next_line(&mut lines)?;
        let seed_str = seed_line
            .strip_prefix("# seed=")
            .ok_or_else(|| Error::MalformedDataset { reason: "missing seed".into() })?;
        let seed = match seed_str {
            "none" => None,
            s => Some(s.parse::<u64>().map_err(|_| Error::MalformedDataset {
                reason: format!("bad seed {s:?}"),
            })?),
        };
        let header = next_line(&mut lines)?;
        if header != "j,k" {
            return Err(Error::MalformedDataset { reason: format!("bad column header {header:?}") });
        }
        let mut records = Vec::new();
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (j, k) = line.split_once(',').ok_or_else(|| Error::MalformedDataset {
                reason: format!("bad record line {line:?}"),
            })?;
            let j = j.parse().map_err(|_| Error::MalformedDataset {
                reason: format!("bad group index {j:?}"),
            })?;
            let k = k.parse().map_err(|_| Error::MalformedDataset {
                reason: format!("bad outcome index {k:?}"),
            })?;
            records.push(Record { j, k });
        }
        check_manifest(&groups, dim, group_count, &manifest)?;
        Self::new(groups, records, seed)
    }

    /// Write the line-delimited JSON form: one header object then one object
    /// per record.
    pub fn write_jsonl(&self, w: &mut impl Write) -> Result<()> {
        let header = JsonlHeader {
            dataset: "qxent-dataset".into(),
            version: 1,
            dim: self.dim(),
            groups: self.groups.len(),
            manifest: self.manifest.clone(),
            seed: self.seed,
        };
        writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes"))?;
        for r in &self.records {
            writeln!(w, "{}", serde_json::to_string(r).expect("record serializes"))?;
        }
        Ok(())
    }

    /// Read the line-delimited JSON form against its measurement set.
    pub fn read_jsonl(r: impl BufRead, groups: Vec<ProjectiveMeasurement>) -> Result<Self> {
        let mut lines = r.lines();
        let header_line = next_line(&mut lines)?;
        let header: JsonlHeader = serde_json::from_str(&header_line)
            .map_err(|e| Error::MalformedDataset { reason: format!("bad header: {e}") })?;
        if header.dataset != "qxent-dataset" || header.version != 1 {
            return Err(Error::MalformedDataset {
                reason: format!("unsupported dataset header {}/{}", header.dataset, header.version),
            });
        }
        let mut records = Vec::new();
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let r: Record = serde_json::from_str(&line)
                .map_err(|e| Error::MalformedDataset { reason: format!("bad record: {e}") })?;
            records.push(r);
        }
        check_manifest(&groups, header.dim, header.groups, &header.manifest)?;
        Self::new(groups, records, header.seed)
    }
}

fn next_line(lines: &mut impl Iterator<Item = std::io::Result<String>>) -> Result<String> {
    lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::MalformedDataset { reason: "unexpected end of file".into() })
}

fn parse_header_field(line: &str, field: &str) -> Result<usize> {
    line.strip_prefix(&format!("# {field}="))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::MalformedDataset { reason: format!("bad {field} line {line:?}") })
}

fn check_manifest(
    groups: &[ProjectiveMeasurement],
    dim: usize,
    group_count: usize,
    manifest: &str,
) -> Result<()> {
    if groups.is_empty() || groups[0].dim() != dim || groups.len() != group_count {
        return Err(Error::MalformedDataset {
            reason: format!(
                "measurement set shape mismatch: file says dim {dim}, {group_count} groups"
            ),
        });
    }
    let expected = manifest_hash(groups);
    if expected != manifest {
        return Err(Error::ManifestMismatch { expected, found: manifest.to_string() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::von_neumann;
    use crate::matfun::{c, CMatrix};
    use crate::measurement::post_state_operator;
    use crate::states::{random_density, stream_rng, trace_distance, PureState};
    use rand::Rng;

    fn z_basis_dataset(records: &[(usize, usize)]) -> MeasurementDataset {
        let groups = vec![ProjectiveMeasurement::computational(2)];
        let records = records.iter().map(|&(j, k)| Record { j, k }).collect();
        MeasurementDataset::new(groups, records, None).unwrap()
    }

    #[test]
    fn empirical_distribution_cases() {
        let support = ["H", "T"];
        let d = empirical_distribution(&["H", "H", "T", "H"], &support).unwrap();
        assert_eq!(d.probs(), &[0.75, 0.25]);

        let single = empirical_distribution(&["T"], &support).unwrap();
        assert_eq!(single.probs(), &[0.0, 1.0]);

        let mut rng = stream_rng(41, 0);
        let n = 10_000;
        let flips: Vec<&str> =
            (0..n).map(|_| if rng.random::<f64>() < 2.0 / 3.0 { "H" } else { "T" }).collect();
        let d = empirical_distribution(&flips, &support).unwrap();
        assert!((d.probs()[0] - 2.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn empirical_distribution_rejects_unknown_outcomes() {
        assert!(empirical_distribution(&["X"], &["H", "T"]).is_err());
    }

    #[test]
    fn empirical_operator_cases() {
        let ds = z_basis_dataset(&[(0, 0), (0, 0), (0, 0)]);
        let state = empirical_operator(&ds).unwrap();
        assert!(max_abs_diff(state.matrix().data(), PureState::basis(2, 0).density().data()) < 1e-15);

        let ds = z_basis_dataset(&[(0, 0), (0, 1)]);
        let state = empirical_operator(&ds).unwrap();
        assert!(max_abs_diff(state.matrix().data(), &CMatrix::identity(2, 2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn empirical_operator_equals_observed_frequencies() {
        let mut rng = stream_rng(42, 0);
        let rho = DensityMatrix::from_diagonal(&[2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let groups = vec![ProjectiveMeasurement::computational(2)];
        let ds = MeasurementDataset::sample(groups, &rho, &[10_000], None, &mut rng).unwrap();
        let state = empirical_operator(&ds).unwrap();
        let freqs = &ds.frequencies()[0];
        let diag = DensityMatrix::from_diagonal(&[freqs[0], freqs[1]]).unwrap();
        assert!(trace_distance(state.matrix(), &diag).unwrap() < 1e-15);
    }

    #[test]
    fn empirical_state_cases() {
        let mut rng = stream_rng(43, 0);
        let sigma = random_density(2, 2, &mut rng);

        // all rank-1 projectors: perspectives agree
        let ds = z_basis_dataset(&[(0, 0), (0, 1), (0, 0)]);
        let op = empirical_operator(&ds).unwrap();
        let st = empirical_state(&ds, &sigma).unwrap();
        assert!(max_abs_diff(op.matrix().data(), st.matrix().data()) < 1e-9);

        // trivial measurement {I}: the state perspective returns σ itself
        let trivial = ProjectiveMeasurement::new(vec![CMatrix::identity(2, 2)], None).unwrap();
        let ds = MeasurementDataset::new(
            vec![trivial],
            vec![Record { j: 0, k: 0 }, Record { j: 0, k: 0 }],
            None,
        )
        .unwrap();
        let st = empirical_state(&ds, &sigma).unwrap();
        assert!(max_abs_diff(st.matrix().data(), sigma.data()) < 1e-12);
    }

    #[test]
    fn degenerate_projector_separates_perspectives() {
        // one rank-2 projector; σ is non-uniform inside that subspace
        let mut p01 = CMatrix::zeros(3, 3);
        p01[(0, 0)] = c(1.0, 0.0);
        p01[(1, 1)] = c(1.0, 0.0);
        let mut p2 = CMatrix::zeros(3, 3);
        p2[(2, 2)] = c(1.0, 0.0);
        let group = ProjectiveMeasurement::new(vec![p01, p2], None).unwrap();
        let sigma = DensityMatrix::from_diagonal(&[0.6, 0.15, 0.25]).unwrap();
        let ds = MeasurementDataset::new(vec![group], vec![Record { j: 0, k: 0 }], None).unwrap();
        let op = empirical_operator(&ds).unwrap();
        let st = empirical_state(&ds, &sigma).unwrap();
        let gap = max_abs_diff(op.matrix().data(), st.matrix().data());
        assert!(gap > 1e-3, "expected the perspectives to differ, gap {gap:e}");
    }

    #[test]
    fn state_perspective_rejects_zero_probability_records() {
        let sigma = PureState::basis(2, 0).density();
        let ds = z_basis_dataset(&[(0, 0), (0, 1)]);
        assert!(matches!(
            empirical_state(&ds, &sigma),
            Err(Error::ZeroProbabilityRecord { record: 1 })
        ));
    }

    #[test]
    fn state_perspective_refuses_other_models() {
        let mut rng = stream_rng(44, 0);
        let sigma = random_density(2, 2, &mut rng);
        let other = random_density(2, 2, &mut rng);
        let ds = z_basis_dataset(&[(0, 0), (0, 1)]);
        let st = empirical_state(&ds, &sigma).unwrap();
        assert!(st.cross_entropy_vs(&sigma).is_ok());
        assert!(matches!(st.cross_entropy_vs(&other), Err(Error::ModelMismatch)));
    }

    #[test]
    fn likelihood_cases() {
        // certain records: probability one each
        let trivial = ProjectiveMeasurement::new(vec![CMatrix::identity(2, 2)], None).unwrap();
        let ds = MeasurementDataset::new(
            vec![trivial],
            vec![Record { j: 0, k: 0 }; 3],
            None,
        )
        .unwrap();
        let sigma = DensityMatrix::maximally_mixed(2);
        assert_eq!(avg_log_likelihood(&ds, &sigma).unwrap(), ExtendedReal::Finite(0.0));

        // two outcomes with probability 1/2 each
        let ds = z_basis_dataset(&[(0, 0), (0, 1)]);
        let l = avg_log_likelihood(&ds, &sigma).unwrap().value().unwrap();
        assert!((l - 0.5f64.ln()).abs() < 1e-15);

        // zero-probability record is -inf, not an error
        let pure = PureState::basis(2, 0).density();
        assert_eq!(avg_log_likelihood(&ds, &pure).unwrap(), ExtendedReal::NegInf);
    }

    #[test]
    fn grouped_likelihood_matches_record_form() {
        let mut rng = stream_rng(45, 0);
        let rho = random_density(2, 2, &mut rng);
        let sigma = random_density(2, 2, &mut rng);
        let set = TomographicSet::pauli(1);
        let ds =
            MeasurementDataset::sample_tomographic(&set, &rho, 3000, None, &mut rng).unwrap();
        let record = avg_log_likelihood(&ds, &sigma).unwrap().value().unwrap();
        let grouped = avg_log_likelihood_grouped(&ds, &sigma).unwrap().value().unwrap();
        assert!((record - grouped).abs() < 1e-12, "gap {:e}", (record - grouped).abs());
    }

    #[test]
    fn classical_identity_between_cross_entropy_and_likelihood() {
        let mut rng = stream_rng(46, 0);
        let labels: Vec<String> = (0..5).map(|i| format!("x{i}")).collect();
        for _ in 0..20 {
            let raw: Vec<f64> = (0..5).map(|_| rng.random::<f64>() + 0.05).collect();
            let total: f64 = raw.iter().sum();
            let model =
                ClassicalDist::new(labels.clone(), raw.iter().map(|x| x / total).collect())
                    .unwrap();
            let data: Vec<String> = (0..400)
                .map(|_| {
                    let u: f64 = rng.random();
                    let mut cum = 0.0;
                    for (i, &p) in model.probs().iter().enumerate() {
                        cum += p;
                        if u < cum {
                            return labels[i].clone();
                        }
                    }
                    labels[4].clone()
                })
                .collect();
            let empirical = empirical_distribution(&data, &labels).unwrap();
            let h = classical_cross_entropy(&empirical, &model).unwrap().value().unwrap();
            let l = classical_avg_log_likelihood(&data, &model).unwrap().value().unwrap();
            assert!((h + l).abs() < 1e-12, "identity gap {:e}", (h + l).abs());
        }
    }

    #[test]
    fn parallel_composition_consistency() {
        // Σ_n S(ρ_n^O, σ) = N · S(ρ^O, σ) by linearity of the first argument
        let mut rng = stream_rng(47, 0);
        let rho = random_density(2, 2, &mut rng);
        let sigma = random_density(2, 2, &mut rng);
        let set = TomographicSet::pauli(1);
        let ds = MeasurementDataset::sample_tomographic(&set, &rho, 40, None, &mut rng).unwrap();
        let n = ds.total() as f64;

        let per_record: f64 = ds
            .records()
            .iter()
            .map(|r| {
                let post = post_state_operator(ds.projector(*r)).unwrap();
                quantum_cross_entropy(&post, &sigma).unwrap().value().unwrap()
            })
            .sum();
        let combined = empirical_operator(&ds).unwrap();
        let s = quantum_cross_entropy(combined.matrix(), &sigma).unwrap().value().unwrap();
        assert!((per_record - n * s).abs() < 1e-9, "gap {:e}", (per_record - n * s).abs());
    }

    #[test]
    fn povm_likelihood_only() {
        let mut m1 = CMatrix::zeros(2, 2);
        m1[(0, 0)] = c(1.0, 0.0);
        let mut m2 = CMatrix::zeros(2, 2);
        m2[(0, 1)] = c(1.0, 0.0);
        let povm = Povm::new(vec![m1, m2]).unwrap();
        let sigma = DensityMatrix::from_diagonal(&[2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let l = povm_avg_log_likelihood(&povm, &[0, 1], &sigma).unwrap().value().unwrap();
        let expect = 0.5 * ((2.0f64 / 3.0).ln() + (1.0f64 / 3.0).ln());
        assert!((l - expect).abs() < 1e-15);
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let mut rng = stream_rng(48, 0);
        let rho = random_density(2, 2, &mut rng);
        let set = TomographicSet::pauli(1);
        let ds =
            MeasurementDataset::sample_tomographic(&set, &rho, 50, Some(48), &mut rng).unwrap();

        let mut bytes = Vec::new();
        ds.write_csv(&mut bytes).unwrap();
        let back =
            MeasurementDataset::read_csv(bytes.as_slice(), set.groups().to_vec()).unwrap();
        assert_eq!(back.records(), ds.records());
        assert_eq!(back.seed(), Some(48));
        let mut again = Vec::new();
        back.write_csv(&mut again).unwrap();
        assert_eq!(bytes, again, "write-read-write must be bit-exact");
    }

    #[test]
    fn jsonl_roundtrip_is_bit_exact() {
        let mut rng = stream_rng(49, 0);
        let rho = random_density(2, 2, &mut rng);
        let set = TomographicSet::pauli(1);
        let ds = MeasurementDataset::sample_tomographic(&set, &rho, 50, None, &mut rng).unwrap();

        let mut bytes = Vec::new();
        ds.write_jsonl(&mut bytes).unwrap();
        let back =
            MeasurementDataset::read_jsonl(bytes.as_slice(), set.groups().to_vec()).unwrap();
        let mut again = Vec::new();
        back.write_jsonl(&mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn reading_against_wrong_measurement_set_fails() {
        let mut rng = stream_rng(50, 0);
        let rho = random_density(2, 2, &mut rng);
        let set = TomographicSet::pauli(1);
        let ds = MeasurementDataset::sample_tomographic(&set, &rho, 10, None, &mut rng).unwrap();
        let mut bytes = Vec::new();
        ds.write_csv(&mut bytes).unwrap();

        let wrong = vec![ProjectiveMeasurement::computational(2)];
        let err = MeasurementDataset::read_csv(bytes.as_slice(), wrong).unwrap_err();
        assert!(matches!(err, Error::MalformedDataset { .. } | Error::ManifestMismatch { .. }));
    }

    #[test]
    fn record_bounds_are_validated() {
        let groups = vec![ProjectiveMeasurement::computational(2)];
        let err =
            MeasurementDataset::new(groups, vec![Record { j: 0, k: 5 }], None).unwrap_err();
        assert!(matches!(err, Error::RecordOutOfRange { record: 0, group: 0, outcome: 5 }));
    }

    #[test]
    fn merged_datasets_agree_on_derived_quantities() {
        let mut rng = stream_rng(52, 0);
        let rho = random_density(2, 2, &mut rng);
        let sigma = random_density(2, 2, &mut rng);
        let set = TomographicSet::pauli(1);

        let a = MeasurementDataset::sample_tomographic(&set, &rho, 30, None, &mut rng).unwrap();
        let b = MeasurementDataset::sample_tomographic(&set, &rho, 30, None, &mut rng).unwrap();
        let ab = a.clone().merge(b.clone()).unwrap();
        let ba = b.merge(a).unwrap();
        assert_eq!(ab.total(), 180);
        // merge order cannot matter for counts or likelihoods
        assert_eq!(ab.outcome_counts(), ba.outcome_counts());
        let l_ab = avg_log_likelihood_grouped(&ab, &sigma).unwrap().value().unwrap();
        let l_ba = avg_log_likelihood_grouped(&ba, &sigma).unwrap().value().unwrap();
        assert_eq!(l_ab, l_ba);

        let other = MeasurementDataset::new(
            vec![ProjectiveMeasurement::computational(2)],
            vec![],
            None,
        )
        .unwrap();
        assert!(matches!(ab.merge(other), Err(Error::ManifestMismatch { .. })));
    }

    #[test]
    fn measurement_without_readout_yields_entropy_of_average() {
        // measuring without reading the outcome maps ρ to σ' = Σ Q ρ Q, and
        // the cross entropy S(ρ, σ') collapses to the entropy of σ'
        let mut rng = stream_rng(51, 0);
        let rho = random_density(3, 3, &mut rng);
        let u = crate::states::random_unitary(3, &mut rng);
        let lam = CMatrix::from_diagonal(&crate::matfun::CVector::from_fn(3, |i, _| {
            c(i as f64, 0.0)
        }));
        let meas =
            ProjectiveMeasurement::from_observable(&(&u * lam * u.adjoint()), 1e-8).unwrap();
        let mut after = CMatrix::zeros(3, 3);
        for q in meas.projectors() {
            after += q * rho.data() * q;
        }
        let sigma = DensityMatrix::from_matrix(after).unwrap();
        let s = quantum_cross_entropy(&rho, &sigma).unwrap().value().unwrap();
        assert!((s - von_neumann(&sigma)).abs() < 1e-9);
    }
}
