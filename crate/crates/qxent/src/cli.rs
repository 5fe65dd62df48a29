//! The `qxent` command line: a seeded, configurable experiment runner.
//!
//! Four subcommands share one configuration surface (flags override a TOML
//! config file; `QXENT_OUT` overrides the output directory):
//!
//! - `check` runs verification suites and writes pass/fail reports; exit
//!   code 0 iff every check passes, 1 on any failure, 2 on a config error.
//! - `tomography` samples a dataset from a true state, runs linear
//!   inversion and both optimizers, and reports distances and scores per
//!   estimator.
//! - `bounds` sweeps the lower-bound chain over random pairs and writes
//!   plot-ready per-trial CSV.
//! - `counterexample` prints and persists the POVM fixture on which the
//!   state-perspective likelihood bound fails.
//!
//! Identical `(config, seed)` produce byte-identical reports at any
//! `--parallel` degree: trials own RNG streams indexed by trial number, and
//! result reduction is associative with deterministic tie-breaks.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{ConfigError, FileConfig, FlagOverrides, RunConfig};
use crate::empirical::{avg_log_likelihood, empirical_operator, empirical_state, MeasurementDataset};
use crate::entropy::{bound_chain, quantum_cross_entropy, ExtendedReal};
use crate::error::Error;
use crate::mle::{
    linear_inversion, maximize_likelihood, minimize_cross_entropy, project_to_density,
    CholeskyParam, OptimizerOptions,
};
use crate::report::{
    bounds_report_json, check_report_json, matrix_literal, tomography_report_json, write_bounds_csv,
    write_check_csv, write_tomography_csv, BoundRow, EstimatorRow, ReportMeta,
};
use crate::states::{random_density, stream_rng, trace_distance, DensityMatrix};
use crate::verify::{derive_check_seed, run_suite, CheckResult, SuiteParams};

/// Exit code for a successful run with all checks passing.
pub const EXIT_OK: i32 = 0;
/// Exit code when any check fails (or a runtime error occurs).
pub const EXIT_FAIL: i32 = 1;
/// Exit code for configuration errors; nothing is written.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qxent", version, about = "Quantum cross entropy verification and estimation")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run verification suites and write pass/fail reports
    Check(CommonArgs),
    /// Sample a dataset from a true state and score every estimator
    Tomography(CommonArgs),
    /// Sweep the lower-bound chain over random pairs (plot-ready CSV)
    Bounds(CommonArgs),
    /// Print and persist the POVM counterexample fixture
    Counterexample(CommonArgs),
}

#[derive(Debug, Args, Default)]
struct CommonArgs {
    /// TOML config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (required; no wall-clock default)
    #[arg(long)]
    seed: Option<u64>,
    /// Hilbert-space dimension
    #[arg(long)]
    dim: Option<usize>,
    /// Trials per check or sweep
    #[arg(long)]
    trials: Option<usize>,
    /// Suites to run (comma-separated; "all" expands to every suite)
    #[arg(long = "suite", value_delimiter = ',')]
    suite: Option<Vec<String>>,
    /// Output directory (the QXENT_OUT environment variable overrides this)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for trial parallelism (determinism holds regardless)
    #[arg(long)]
    parallel: Option<usize>,
    /// Measurement shots per group for tomography sampling
    #[arg(long)]
    shots: Option<usize>,
    /// Report entropy-valued columns in bits instead of nats
    /// (reporting-only conversion; all math runs in natural log)
    #[arg(long)]
    bits: bool,
}

impl CommonArgs {
    fn resolve(&self, require_seed: bool) -> Result<RunConfig, ConfigError> {
        let file = match &self.config {
            Some(path) => Some(FileConfig::load(path)?),
            None => None,
        };
        let flags = FlagOverrides {
            seed: self.seed,
            dim: self.dim,
            trials: self.trials,
            suites: self.suite.clone(),
            out: self.out.clone(),
            parallel: self.parallel,
            shots: self.shots,
            bits: self.bits,
        };
        let mut config = RunConfig::resolve(file, flags, require_seed)?;
        if let Ok(dir) = std::env::var("QXENT_OUT") {
            if !dir.is_empty() {
                config.out = PathBuf::from(dir);
            }
        }
        Ok(config)
    }
}

/// Entry point used by `main`; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (args, require_seed) = match &cli.command {
        Command::Check(a) | Command::Tomography(a) | Command::Bounds(a) => (a, true),
        Command::Counterexample(a) => (a, false),
    };
    let config = match args.resolve(require_seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    configure_thread_pool(config.parallel);
    let outcome = match cli.command {
        Command::Check(_) => cmd_check(&config),
        Command::Tomography(_) => cmd_tomography(&config),
        Command::Bounds(_) => cmd_bounds(&config),
        Command::Counterexample(_) => cmd_counterexample(&config),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAIL
        }
    }
}

fn configure_thread_pool(parallel: usize) {
    if parallel > 0 {
        // fails harmlessly if a pool already exists (e.g. in-process tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(parallel).build_global();
    }
}

/// Reporting-only unit conversion for entropy-valued outputs.
fn in_units(x: ExtendedReal, bits: bool) -> ExtendedReal {
    match (bits, x) {
        (true, ExtendedReal::Finite(v)) => ExtendedReal::Finite(v / std::f64::consts::LN_2),
        _ => x,
    }
}

fn print_results(results: &[CheckResult]) {
    for r in results {
        println!(
            "{} {} worst_margin={} tolerance={} trials={}",
            if r.pass { "PASS" } else { "FAIL" },
            r.check_id,
            crate::report::fmt_float(r.worst_margin),
            crate::report::fmt_float(r.tolerance),
            r.trials,
        );
    }
}

fn write_report_pair(
    config: &RunConfig,
    meta: &ReportMeta,
    stem: &str,
    results: &[CheckResult],
) -> Result<(), Error> {
    std::fs::create_dir_all(&config.out)?;
    let mut csv = Vec::new();
    write_check_csv(&mut csv, meta, results)?;
    std::fs::write(config.out.join(format!("{stem}.csv")), csv)?;
    let json = check_report_json(meta, results);
    std::fs::write(config.out.join(format!("{stem}.json")), json)?;
    Ok(())
}

/// Run the selected suites; exit 0 iff every check passes.
pub fn cmd_check(config: &RunConfig) -> Result<i32, Error> {
    let params =
        SuiteParams { dim: config.dim, trials: config.trials, seed: config.seed };
    let mut results = Vec::new();
    for suite in &config.suites {
        let batch = run_suite(suite, params)
            .map_err(|e| Error::MalformedWitness { reason: format!("suite {suite}: {e}") })?;
        results.extend(batch);
    }
    let meta = ReportMeta::new(config.seed, config.echo());
    write_report_pair(config, &meta, "report", &results)?;
    print_results(&results);
    Ok(if results.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_FAIL })
}

/// Sample a dataset from the configured true state, run every estimator, and
/// report trace distances and information scores.
pub fn cmd_tomography(config: &RunConfig) -> Result<i32, Error> {
    // an incomplete or unknown measurement literal is a configuration
    // problem: report it as such and write nothing
    let set = match config.tomographic_set() {
        Ok(set) => set,
        Err(e) => {
            eprintln!("{e}");
            return Ok(EXIT_CONFIG);
        }
    };
    let truth = match &config.rho {
        Some(rho) => rho.clone(),
        None => {
            let mut rng = stream_rng(derive_check_seed(config.seed, "tomography-truth"), 0);
            random_density(config.dim, config.dim, &mut rng)
        }
    };
    let mut rng = stream_rng(derive_check_seed(config.seed, "tomography-sampling"), 0);
    let ds = MeasurementDataset::sample_tomographic(
        &set,
        &truth,
        config.shots,
        Some(config.seed),
        &mut rng,
    )?;

    std::fs::create_dir_all(&config.out)?;
    let mut csv = Vec::new();
    ds.write_csv(&mut csv)?;
    std::fs::write(config.out.join("dataset.csv"), csv)?;
    let mut jsonl = Vec::new();
    ds.write_jsonl(&mut jsonl)?;
    std::fs::write(config.out.join("dataset.jsonl"), jsonl)?;

    let freqs = ds.frequencies();
    let opts = OptimizerOptions::default();
    let init = CholeskyParam::identity_init(config.dim);

    let mut rows = Vec::new();
    let inverted = project_to_density(&linear_inversion(&set, &freqs)?)?;
    rows.push(score_estimator("linear-inversion", &inverted, &truth, &ds, None, config.bits)?);

    let ml = maximize_likelihood(&set, &freqs, &init, &opts)?;
    rows.push(score_estimator(
        "max-likelihood",
        &ml.estimate,
        &truth,
        &ds,
        Some(ml.objective_trace),
        config.bits,
    )?);

    let ce = minimize_cross_entropy(&truth, &init, &opts)?;
    rows.push(score_estimator(
        "min-cross-entropy",
        &ce.estimate,
        &truth,
        &ds,
        Some(ce.objective_trace),
        config.bits,
    )?);

    let meta = ReportMeta::new(config.seed, config.echo());
    let mut csv = Vec::new();
    write_tomography_csv(&mut csv, &meta, &rows)?;
    std::fs::write(config.out.join("tomography.csv"), csv)?;
    let json = tomography_report_json(&meta, matrix_literal(truth.data()), &rows);
    std::fs::write(config.out.join("tomography.json"), json)?;

    for r in &rows {
        println!(
            "{}: trace_distance={} -l(sigma)={}",
            r.estimator,
            crate::report::fmt_float(r.trace_distance_to_truth),
            crate::report::fmt_float(r.neg_avg_log_likelihood.as_f64()),
        );
    }
    Ok(EXIT_OK)
}

fn score_estimator(
    name: &str,
    estimate: &DensityMatrix,
    truth: &DensityMatrix,
    ds: &MeasurementDataset,
    objective_trace: Option<Vec<f64>>,
    bits: bool,
) -> Result<EstimatorRow, Error> {
    let operator = empirical_operator(ds)?;
    let s_operator = quantum_cross_entropy(operator.matrix(), estimate)?;
    // a rank-deficient estimate can assign zero probability to an observed
    // record; the state-perspective score diverges there
    let s_state = match empirical_state(ds, estimate) {
        Ok(state) => state.cross_entropy_vs(estimate)?,
        Err(Error::ZeroProbabilityRecord { .. }) => ExtendedReal::PosInf,
        Err(e) => return Err(e),
    };
    let neg_ll = -avg_log_likelihood(ds, estimate)?;
    Ok(EstimatorRow {
        estimator: name.to_string(),
        trace_distance_to_truth: trace_distance(estimate, truth)?,
        cross_entropy_operator: in_units(s_operator, bits),
        cross_entropy_state: in_units(s_state, bits),
        neg_avg_log_likelihood: in_units(neg_ll, bits),
        estimate: matrix_literal(estimate.data()),
        objective_trace,
    })
}

/// Monte-Carlo sweep of the lower-bound chain; writes per-trial CSV and JSON.
pub fn cmd_bounds(config: &RunConfig) -> Result<i32, Error> {
    let base = derive_check_seed(config.seed, "bounds-sweep");
    let dim = config.dim;
    let rows: Vec<BoundRow> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(base, trial);
            let rho_rank = 1 + (trial as usize) % dim;
            let rho = random_density(dim, rho_rank, &mut rng);
            let sigma = random_density(dim, dim, &mut rng);
            let mut chain = bound_chain(&rho, &sigma).expect("equal dimensions");
            chain.cross_entropy = in_units(chain.cross_entropy, config.bits);
            chain.neg_log_overlap = in_units(chain.neg_log_overlap, config.bits);
            chain.neg_log_fidelity = in_units(chain.neg_log_fidelity, config.bits);
            chain.gap_overlap = in_units(chain.gap_overlap, config.bits);
            chain.gap_fidelity = in_units(chain.gap_fidelity, config.bits);
            BoundRow { trial, dim, rho_rank, chain }
        })
        .collect();

    std::fs::create_dir_all(&config.out)?;
    let meta = ReportMeta::new(config.seed, config.echo());
    let mut csv = Vec::new();
    write_bounds_csv(&mut csv, &meta, &rows)?;
    std::fs::write(config.out.join("bounds.csv"), csv)?;
    std::fs::write(config.out.join("bounds.json"), bounds_report_json(&meta, &rows))?;

    let worst = rows
        .iter()
        .map(|r| r.chain.gap_overlap.as_f64().min(r.chain.gap_fidelity.as_f64()))
        .fold(f64::INFINITY, f64::min);
    println!(
        "bounds sweep: {} trials at dim {}, worst gap {}",
        rows.len(),
        dim,
        crate::report::fmt_float(worst)
    );
    Ok(EXIT_OK)
}

/// Evaluate and persist the POVM counterexample fixture.
pub fn cmd_counterexample(config: &RunConfig) -> Result<i32, Error> {
    let result = crate::verify::check_povm_counterexample();
    let meta = ReportMeta::new(config.seed, config.echo());
    let results = vec![result];
    write_report_pair(config, &meta, "counterexample", &results)?;
    let result = &results[0];
    print_results(&results);
    if let Some(w) = &result.witness {
        for key in ["tr_rho1_log_sigma", "tr_rho2_log_sigma", "log_prob_2", "violation_gap"] {
            if let Some(crate::verify::WitnessValue::Scalar(x)) = w.inputs.get(key) {
                println!("{key}={}", crate::report::fmt_float(*x));
            }
        }
    }
    Ok(if result.pass { EXIT_OK } else { EXIT_FAIL })
}
