//! Run configuration: TOML config files merged with command-line flags.
//!
//! A config file provides defaults; flags override it. The master seed is
//! mandatory and has no wall-clock fallback, so every run is reproducible by
//! construction. Unknown keys anywhere in the file are rejected.
//!
//! State literals are dense complex matrices as nested `[re, im]` pairs:
//!
//! ```toml
//! seed = 7
//! dim = 2
//!
//! [state]
//! rho = [[[0.6666666666666666, 0.0], [0.0, 0.0]],
//!        [[0.0, 0.0], [0.3333333333333333, 0.0]]]
//!
//! [measurement]
//! preset = "pauli"
//! ```
//!
//! Measurements are either a named preset (`"pauli"`, `"computational"`) or
//! explicit projector groups under `[[measurement.groups]]`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::matfun::{c, CMatrix};
use crate::measurement::{self, ProjectiveMeasurement, TomographicSet};
use crate::states::DensityMatrix;

/// Configuration problems; the CLI maps these to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type ConfigResult<T> = std::result::Result<T, ConfigError>;

/// Nested `[re, im]` rows.
pub type MatrixLiteral = Vec<Vec<[f64; 2]>>;

/// The config-file schema. Every field is optional here; requiredness is
/// enforced after merging with flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub dim: Option<usize>,
    pub trials: Option<usize>,
    pub suites: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<String>>,
    pub parallel: Option<usize>,
    pub shots: Option<usize>,
    /// Report entropy-valued columns in bits instead of nats
    /// (reporting-only; all internal math stays in natural log).
    pub bits: Option<bool>,
    pub measurement: Option<MeasurementConfig>,
    pub state: Option<StateConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub preset: Option<String>,
    pub groups: Option<Vec<MeasurementGroupConfig>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementGroupConfig {
    pub projectors: Vec<MatrixLiteral>,
    pub eigenvalues: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub rho: Option<MatrixLiteral>,
}

impl FileConfig {
    pub fn load(path: &Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }
}

/// Flag values, as parsed from the command line.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub dim: Option<usize>,
    pub trials: Option<usize>,
    pub suites: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub parallel: Option<usize>,
    pub shots: Option<usize>,
    pub bits: bool,
}

/// What a measurement literal resolved to.
#[derive(Debug, Clone)]
pub enum MeasurementChoice {
    Preset(String),
    Explicit(Vec<ProjectiveMeasurement>),
}

/// A fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub dim: usize,
    pub trials: usize,
    pub suites: Vec<String>,
    pub out: PathBuf,
    pub formats: Vec<String>,
    pub parallel: usize,
    pub shots: usize,
    /// Report entropy-valued columns in bits (log base 2). Reporting-only:
    /// internal computation and check margins stay in nats.
    pub bits: bool,
    pub measurement: MeasurementChoice,
    pub rho: Option<DensityMatrix>,
}

/// Deterministic echo of the experiment-defining fields. Execution-only
/// knobs (output directory, parallelism degree) are excluded so reports stay
/// byte-identical across thread counts and target directories.
#[derive(Debug, Clone, Serialize)]
struct ConfigEcho<'a> {
    seed: u64,
    dim: usize,
    trials: usize,
    suites: &'a [String],
    formats: &'a [String],
    shots: usize,
    units: &'static str,
    measurement: String,
    state: &'static str,
}

impl RunConfig {
    /// Merge a config file (if any) with flag overrides and validate.
    /// `require_seed` is true for every command whose outputs depend on
    /// randomness.
    pub fn resolve(
        file: Option<FileConfig>,
        flags: FlagOverrides,
        require_seed: bool,
    ) -> ConfigResult<Self> {
        let file = file.unwrap_or_default();
        let seed = match flags.seed.or(file.seed) {
            Some(s) => s,
            None if require_seed => {
                return Err(ConfigError(
                    "a master seed is required (pass --seed or set `seed` in the config file); \
                     there is no wall-clock default"
                        .into(),
                ))
            }
            None => 0,
        };
        let dim = flags.dim.or(file.dim).unwrap_or(2);
        if dim == 0 || dim > 256 {
            return Err(ConfigError(format!("dimension {dim} is out of range (1..=256)")));
        }
        let trials = flags.trials.or(file.trials).unwrap_or(100);
        let suites = flags.suites.or(file.suites).unwrap_or_else(|| vec!["all".into()]);
        let suites = expand_suites(&suites)?;
        let out = flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("reports"));
        let formats = file.formats.unwrap_or_else(|| vec!["csv".into(), "json".into()]);
        for f in &formats {
            if f != "csv" && f != "json" {
                return Err(ConfigError(format!(
                    "unknown output format {f:?} (expected \"csv\" or \"json\")"
                )));
            }
        }
        let parallel = flags.parallel.or(file.parallel).unwrap_or(1);
        let shots = flags.shots.or(file.shots).unwrap_or(2000);
        if shots == 0 {
            return Err(ConfigError("shots must be at least 1".into()));
        }
        let bits = flags.bits || file.bits.unwrap_or(false);
        let measurement = resolve_measurement(file.measurement, dim)?;
        let rho = match file.state.and_then(|s| s.rho) {
            Some(lit) => {
                let m = literal_to_matrix(&lit)
                    .map_err(|e| ConfigError(format!("state.rho: {e}")))?;
                if m.nrows() != dim {
                    return Err(ConfigError(format!(
                        "state.rho is {}x{} but dim is {dim}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                Some(
                    DensityMatrix::from_matrix(m)
                        .map_err(|e| ConfigError(format!("state.rho: {e}")))?,
                )
            }
            None => None,
        };
        Ok(Self { seed, dim, trials, suites, out, formats, parallel, shots, bits, measurement, rho })
    }

    /// Compact JSON echo embedded in every report.
    pub fn echo(&self) -> String {
        let echo = ConfigEcho {
            seed: self.seed,
            dim: self.dim,
            trials: self.trials,
            suites: &self.suites,
            formats: &self.formats,
            shots: self.shots,
            units: if self.bits { "bits" } else { "nats" },
            measurement: match &self.measurement {
                MeasurementChoice::Preset(name) => name.clone(),
                MeasurementChoice::Explicit(groups) => format!("explicit({})", groups.len()),
            },
            state: if self.rho.is_some() { "literal" } else { "derived-from-seed" },
        };
        serde_json::to_string(&echo).expect("echo serializes")
    }

    /// Build the tomographically complete set this config asks for.
    pub fn tomographic_set(&self) -> ConfigResult<TomographicSet> {
        match &self.measurement {
            MeasurementChoice::Preset(name) => measurement::preset(name, self.dim)
                .map_err(|e| ConfigError(format!("measurement preset: {e}"))),
            MeasurementChoice::Explicit(groups) => TomographicSet::uniform(groups.clone())
                .map_err(|e| ConfigError(format!("measurement groups: {e}"))),
        }
    }
}

fn expand_suites(names: &[String]) -> ConfigResult<Vec<String>> {
    let mut expanded = Vec::new();
    for name in names {
        if name == "all" {
            for s in crate::verify::SUITE_NAMES {
                if !expanded.iter().any(|e| e == s) {
                    expanded.push(s.to_string());
                }
            }
        } else if crate::verify::SUITE_NAMES.contains(&name.as_str()) {
            if !expanded.contains(name) {
                expanded.push(name.clone());
            }
        } else {
            return Err(ConfigError(format!(
                "unknown suite {name:?}; valid suites: all, {}",
                crate::verify::SUITE_NAMES.join(", ")
            )));
        }
    }
    Ok(expanded)
}

fn resolve_measurement(
    cfg: Option<MeasurementConfig>,
    dim: usize,
) -> ConfigResult<MeasurementChoice> {
    match cfg {
        None => Ok(MeasurementChoice::Preset("pauli".into())),
        Some(MeasurementConfig { preset: Some(name), groups: None }) => {
            Ok(MeasurementChoice::Preset(name))
        }
        Some(MeasurementConfig { preset: None, groups: Some(groups) }) => {
            let mut parsed = Vec::new();
            for (j, g) in groups.iter().enumerate() {
                let projectors = g
                    .projectors
                    .iter()
                    .map(literal_to_matrix)
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| ConfigError(format!("measurement.groups[{j}]: {e}")))?;
                if projectors.iter().any(|p| p.nrows() != dim) {
                    return Err(ConfigError(format!(
                        "measurement.groups[{j}]: projector dimension does not match dim {dim}"
                    )));
                }
                let group = ProjectiveMeasurement::new(projectors, g.eigenvalues.clone())
                    .map_err(|e| ConfigError(format!("measurement.groups[{j}]: {e}")))?;
                parsed.push(group);
            }
            Ok(MeasurementChoice::Explicit(parsed))
        }
        Some(MeasurementConfig { preset: Some(_), groups: Some(_) }) => Err(ConfigError(
            "measurement: give either a preset or explicit groups, not both".into(),
        )),
        Some(MeasurementConfig { preset: None, groups: None }) => {
            Err(ConfigError("measurement: empty table; give a preset or groups".into()))
        }
    }
}

fn literal_to_matrix(lit: &MatrixLiteral) -> std::result::Result<CMatrix, String> {
    let nrows = lit.len();
    let ncols = lit.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err("empty matrix literal".into());
    }
    if lit.iter().any(|row| row.len() != ncols) {
        return Err("ragged matrix literal".into());
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| c(lit[i][j][0], lit[i][j][1])))
}
