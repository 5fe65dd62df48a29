//! Report serialization: fixed-column CSV plus a structured JSON mirror.
//!
//! Both formats are always written. Floats are printed with 17 significant
//! digits so values round-trip exactly; infinities appear as the literal
//! strings `inf` and `-inf`. Every report embeds the artifact version, the
//! seed, and a config echo, and each check row carries its own tolerance so
//! pass criteria are auditable from the report alone.

use std::io::Write;

use serde::Serialize;

use crate::entropy::{BoundChain, ExtendedReal};
use crate::error::Result;
use crate::verify::{CheckResult, MarginKind, Witness};

/// Formats a float with 17 significant digits; infinities render as
/// `inf`/`-inf`.
pub fn fmt_float(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if x.is_nan() {
        "nan".to_string()
    } else {
        // normalize -0.0 so equal margins print identically
        let x = if x == 0.0 { 0.0 } else { x };
        format!("{x:.16e}")
    }
}

/// Report-wide metadata embedded in every output file.
#[derive(Debug, Clone)]
pub struct ReportMeta {
    /// Artifact version (the crate version).
    pub version: String,
    /// Master seed of the run.
    pub seed: u64,
    /// Compact JSON echo of the resolved configuration.
    pub config_echo: String,
}

impl ReportMeta {
    pub fn new(seed: u64, config_echo: String) -> Self {
        Self { version: env!("CARGO_PKG_VERSION").to_string(), seed, config_echo }
    }

    fn write_csv_header(&self, w: &mut impl Write, kind: &str) -> Result<()> {
        writeln!(w, "# qxent-{kind} v1")?;
        writeln!(w, "# version={}", self.version)?;
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "# config={}", self.config_echo)?;
        Ok(())
    }
}

/// CSV columns: `check_id,trials,worst_margin,tolerance,pass,witness_ref`.
/// `witness_ref` names the witness entry in the JSON mirror, or is empty.
pub fn write_check_csv(
    w: &mut impl Write,
    meta: &ReportMeta,
    results: &[CheckResult],
) -> Result<()> {
    meta.write_csv_header(w, "report")?;
    writeln!(w, "check_id,trials,worst_margin,tolerance,pass,witness_ref")?;
    for r in results {
        let witness_ref =
            if r.witness.is_some() { format!("witness:{}", r.check_id) } else { String::new() };
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.check_id,
            r.trials,
            fmt_float(r.worst_margin),
            fmt_float(r.tolerance),
            r.pass,
            witness_ref
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonCheckRow<'a> {
    check_id: &'a str,
    trials: usize,
    worst_margin: ExtendedReal,
    tolerance: f64,
    kind: MarginKind,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<&'a Witness>,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    report: &'static str,
    version: &'a str,
    seed: u64,
    config: serde_json::Value,
    all_pass: bool,
    results: Vec<JsonCheckRow<'a>>,
}

/// The structured mirror of the CSV report, including nested witnesses.
pub fn check_report_json(meta: &ReportMeta, results: &[CheckResult]) -> String {
    let report = JsonReport {
        report: "qxent-report",
        version: &meta.version,
        seed: meta.seed,
        config: serde_json::from_str(&meta.config_echo)
            .unwrap_or(serde_json::Value::String(meta.config_echo.clone())),
        all_pass: results.iter().all(|r| r.pass),
        results: results
            .iter()
            .map(|r| JsonCheckRow {
                check_id: &r.check_id,
                trials: r.trials,
                worst_margin: ExtendedReal::from_f64(r.worst_margin),
                tolerance: r.tolerance,
                kind: r.kind,
                pass: r.pass,
                witness: r.witness.as_ref(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}

/// One row of a bound-chain sweep.
#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub trial: u64,
    pub dim: usize,
    pub rho_rank: usize,
    #[serde(flatten)]
    pub chain: BoundChain,
}

/// Plot-ready CSV for bound-chain sweeps:
/// `trial,dim,rho_rank,cross_entropy,neg_log_overlap,neg_log_fidelity,gap_overlap,gap_fidelity`.
pub fn write_bounds_csv(w: &mut impl Write, meta: &ReportMeta, rows: &[BoundRow]) -> Result<()> {
    meta.write_csv_header(w, "bounds")?;
    writeln!(
        w,
        "trial,dim,rho_rank,cross_entropy,neg_log_overlap,neg_log_fidelity,gap_overlap,gap_fidelity"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.trial,
            r.dim,
            r.rho_rank,
            fmt_float(r.chain.cross_entropy.as_f64()),
            fmt_float(r.chain.neg_log_overlap.as_f64()),
            fmt_float(r.chain.neg_log_fidelity.as_f64()),
            fmt_float(r.chain.gap_overlap.as_f64()),
            fmt_float(r.chain.gap_fidelity.as_f64()),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonBounds<'a> {
    report: &'static str,
    version: &'a str,
    seed: u64,
    config: serde_json::Value,
    rows: &'a [BoundRow],
}

pub fn bounds_report_json(meta: &ReportMeta, rows: &[BoundRow]) -> String {
    let report = JsonBounds {
        report: "qxent-bounds",
        version: &meta.version,
        seed: meta.seed,
        config: serde_json::from_str(&meta.config_echo)
            .unwrap_or(serde_json::Value::String(meta.config_echo.clone())),
        rows,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}

/// Scores of one estimator in a tomography run.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorRow {
    pub estimator: String,
    pub trace_distance_to_truth: f64,
    pub cross_entropy_operator: ExtendedReal,
    pub cross_entropy_state: ExtendedReal,
    pub neg_avg_log_likelihood: ExtendedReal,
    /// Dense estimate as nested `[re, im]` rows.
    pub estimate: Vec<Vec<[f64; 2]>>,
    /// Objective trace for optimizer-based estimators.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_trace: Option<Vec<f64>>,
}

/// CSV for tomography runs:
/// `estimator,trace_distance_to_truth,cross_entropy_operator,cross_entropy_state,neg_avg_log_likelihood`.
pub fn write_tomography_csv(
    w: &mut impl Write,
    meta: &ReportMeta,
    rows: &[EstimatorRow],
) -> Result<()> {
    meta.write_csv_header(w, "tomography")?;
    writeln!(
        w,
        "estimator,trace_distance_to_truth,cross_entropy_operator,cross_entropy_state,neg_avg_log_likelihood"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.estimator,
            fmt_float(r.trace_distance_to_truth),
            fmt_float(r.cross_entropy_operator.as_f64()),
            fmt_float(r.cross_entropy_state.as_f64()),
            fmt_float(r.neg_avg_log_likelihood.as_f64()),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonTomography<'a> {
    report: &'static str,
    version: &'a str,
    seed: u64,
    config: serde_json::Value,
    truth: Vec<Vec<[f64; 2]>>,
    estimators: &'a [EstimatorRow],
}

pub fn tomography_report_json(
    meta: &ReportMeta,
    truth: Vec<Vec<[f64; 2]>>,
    rows: &[EstimatorRow],
) -> String {
    let report = JsonTomography {
        report: "qxent-tomography",
        version: &meta.version,
        seed: meta.seed,
        config: serde_json::from_str(&meta.config_echo)
            .unwrap_or(serde_json::Value::String(meta.config_echo.clone())),
        truth,
        estimators: rows,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}

/// Matrix to the nested `[re, im]` literal form used in configs and reports.
pub fn matrix_literal(m: &crate::matfun::CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}
