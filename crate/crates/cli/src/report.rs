//! Report JSON and convergence-CSV emission. Everything below the `header`
//! block is a pure function of the problem file and seed, so reports diff
//! cleanly across runs.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use qoc_core::solve::{IterationRecord, SolveResult, StopReason};

use crate::problem_file::ProblemFile;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    /// Wall-clock stamp; the only nondeterministic field in a report.
    pub timestamp_unix_ms: u128,
    pub tool: String,
}

impl Header {
    pub fn now() -> Self {
        Self {
            timestamp_unix_ms: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
            tool: format!("qoc {}", env!("CARGO_PKG_VERSION")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterRow {
    pub iter: usize,
    #[serde(rename = "I")]
    pub terminal: f64,
    #[serde(rename = "J")]
    pub total: f64,
    pub energy: f64,
    pub norm_drift: f64,
    pub singular_fraction: f64,
}

impl From<&IterationRecord> for IterRow {
    fn from(r: &IterationRecord) -> Self {
        Self {
            iter: r.iter,
            terminal: r.terminal,
            total: r.total,
            energy: r.energy,
            norm_drift: r.norm_drift,
            singular_fraction: r.singular_fraction,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub header: Header,
    pub config_echo: ProblemFile,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub iterations: Vec<IterRow>,
    pub final_control: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_star: Option<f64>,
    #[serde(rename = "z_T", skip_serializing_if = "Option::is_none")]
    pub z_t: Option<f64>,
    pub stop: String,
    pub damping_events: usize,
    pub exit_status: i32,
}

pub fn stop_name(stop: StopReason) -> &'static str {
    match stop {
        StopReason::MaxIterations => "max_iterations",
        StopReason::CostStalled => "cost_stalled",
        StopReason::Stationary => "stationary",
    }
}

pub fn build_report(
    file: &ProblemFile,
    method: &str,
    seed: Option<u64>,
    result: &SolveResult,
    beta_star: Option<f64>,
    z_t: Option<f64>,
) -> Report {
    Report {
        schema: crate::problem_file::SCHEMA_VERSION,
        header: Header::now(),
        config_echo: file.clone(),
        method: method.to_string(),
        seed,
        iterations: result.records.iter().map(IterRow::from).collect(),
        final_control: result.control.values().to_vec(),
        beta_star,
        z_t,
        stop: stop_name(result.stop).to_string(),
        damping_events: result.damping_events,
        exit_status: 0,
    }
}

pub const CONVERGENCE_HEADER: &str = "iter,I,J,energy,norm_drift,singular_fraction";

pub fn convergence_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.iter, r.terminal, r.total, r.energy, r.norm_drift, r.singular_fraction
        ));
    }
    out
}

pub fn control_trace_csv(trace: &[Vec<f64>]) -> String {
    let n = trace.first().map(|v| v.len()).unwrap_or(0);
    let mut out = String::from("iter");
    for k in 0..n {
        out.push_str(&format!(",u{k}"));
    }
    out.push('\n');
    for (iter, values) in trace.iter().enumerate() {
        out.push_str(&iter.to_string());
        for v in values {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<std::path::PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::Io)?;
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).map_err(CliError::Io)?;
    f.write_all(contents.as_bytes()).map_err(CliError::Io)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    value: &T,
) -> Result<std::path::PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Parse(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_file(dir, name, &text)
}
