use thiserror::Error;

/// Errors produced by state construction, matrix functions, measurements,
/// datasets, and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A*| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue = {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("eigensolver did not converge")]
    NoConvergence,

    #[error("all eigenvalues fall below the support threshold")]
    ZeroMatrix,

    #[error("matrix is singular: min eigenvalue = {min_eigenvalue:.3e} below support threshold")]
    Singular { min_eigenvalue: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid density matrix: {reason}")]
    InvalidDensity { reason: String },

    #[error("invalid pure state: {reason}")]
    InvalidState { reason: String },

    #[error("invalid probability distribution: {reason}")]
    InvalidDistribution { reason: String },

    #[error("distributions have different outcome labels")]
    LabelMismatch,

    #[error("invalid projective measurement: {reason}")]
    InvalidMeasurement { reason: String },

    #[error("invalid POVM: operators do not resolve the identity (deviation {deviation:.3e})")]
    InvalidPovm { deviation: f64 },

    #[error("measurement set is not tomographically complete: span rank {rank} < {required}")]
    IncompleteSet { rank: usize, required: usize },

    #[error("outcome has zero probability under the given state")]
    ZeroProbability,

    #[error("dataset record {record} has zero probability under the model")]
    ZeroProbabilityRecord { record: usize },

    #[error("dataset record {record} is out of range: group {group}, outcome {outcome}")]
    RecordOutOfRange { record: usize, group: usize, outcome: usize },

    #[error("dataset manifest hash mismatch: file has {found}, measurement set has {expected}")]
    ManifestMismatch { expected: String, found: String },

    #[error("malformed dataset file: {reason}")]
    MalformedDataset { reason: String },

    #[error("empirical state was built against a different model state")]
    ModelMismatch,

    #[error("malformed witness: {reason}")]
    MalformedWitness { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
