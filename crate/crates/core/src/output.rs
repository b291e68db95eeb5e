//! Result serialization: deterministic CSV tables plus a JSON run
//! manifest.
//!
//! CSV contract: header row, one row per successful grid point in sweep
//! order, floats printed with 9 significant digits. Failed points are
//! omitted from the CSV and listed in the manifest instead, so reruns with
//! identical configs produce byte-identical tables.

use crate::config::{to_ghz, RunConfig};
use crate::experiments::{ExperimentResult, PointOutcome};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Format a float with 9 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

/// Axis values are stored internally in rad/ns where applicable; convert
/// frequency-like axes back to the GHz presentation for output.
fn axis_column(name: &str, value: f64) -> (String, f64) {
    match name {
        "kappa" => ("kappa_ghz".to_string(), to_ghz(value)),
        other => (other.to_string(), value),
    }
}

/// Render a sweep as CSV text.
pub fn render_csv(results: &[PointOutcome]) -> String {
    let first = match results.iter().find_map(|r| r.as_ref().ok()) {
        Some(r) => r,
        None => return String::new(),
    };
    let mut header: Vec<String> =
        first.point.iter().map(|(n, v)| axis_column(n, *v).0).collect();
    header.push("metric".into());
    if first.argopt.is_some() {
        header.push("argopt".into());
    }
    if first.readout.is_some() {
        header.extend(
            ["n1", "n2", "threshold", "fidelity", "swapped"].map(String::from),
        );
    }
    header.extend(
        ["fock_cutoff", "fock_converged", "fock_change", "max_trace_error", "min_eigenvalue",
         "at_boundary"]
            .map(String::from),
    );

    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in results.iter().filter_map(|r| r.as_ref().ok()) {
        let mut row: Vec<String> =
            r.point.iter().map(|(n, v)| fmt_float(axis_column(n, *v).1)).collect();
        row.push(fmt_float(r.metric));
        if let Some(a) = r.argopt {
            row.push(fmt_float(a));
        }
        if let Some(s) = &r.readout {
            row.push(fmt_float(s.n_bright));
            row.push(fmt_float(s.n_dark));
            row.push(s.threshold.to_string());
            row.push(fmt_float(s.fidelity));
            row.push(s.swapped.to_string());
        }
        let d = &r.diagnostics;
        row.push(d.fock_cutoff.to_string());
        row.push(d.fock_converged.to_string());
        row.push(fmt_float(d.fock_change));
        row.push(fmt_float(d.max_trace_error));
        row.push(fmt_float(d.min_eigenvalue));
        row.push(d.optimizer_at_boundary.to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, results: &[PointOutcome]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(render_csv(results).as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestError {
    pub point: Vec<(String, f64)>,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub all_fock_converged: bool,
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
    pub any_optimizer_at_boundary: bool,
    pub total_point_wall_time_s: f64,
}

/// Everything needed to reproduce and audit a run: the resolved config,
/// tool version, timing, and per-point failure records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub experiment: String,
    pub config: RunConfig,
    /// Unix timestamps, seconds.
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub n_points: usize,
    pub n_failed: usize,
    pub errors: Vec<ManifestError>,
    pub diagnostics: DiagnosticsSummary,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(config: &RunConfig, started_unix_s: f64, results: &[PointOutcome]) -> Self {
        let ok: Vec<&ExperimentResult> =
            results.iter().filter_map(|r| r.as_ref().ok()).collect();
        let errors: Vec<ManifestError> = results
            .iter()
            .filter_map(|r| r.as_ref().err())
            .map(|e| ManifestError { point: e.point.clone(), message: e.error.to_string() })
            .collect();
        let diagnostics = DiagnosticsSummary {
            all_fock_converged: ok.iter().all(|r| r.diagnostics.fock_converged),
            max_trace_error: ok
                .iter()
                .map(|r| r.diagnostics.max_trace_error)
                .fold(0.0, f64::max),
            min_eigenvalue: ok
                .iter()
                .map(|r| r.diagnostics.min_eigenvalue)
                .fold(f64::INFINITY, f64::min),
            any_optimizer_at_boundary: ok
                .iter()
                .any(|r| r.diagnostics.optimizer_at_boundary),
            total_point_wall_time_s: ok.iter().map(|r| r.wall_time_s).sum(),
        };
        RunManifest {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: config.experiment.label().to_string(),
            config: config.clone(),
            started_unix_s,
            finished_unix_s: unix_now(),
            n_points: results.len(),
            n_failed: errors.len(),
            errors,
            diagnostics,
            notes: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| crate::SimError::Config {
                field: "<manifest>".into(),
                message: e.to_string(),
            })?;
        let mut f = std::fs::File::create(path)?;
        f.write_all(text.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

pub fn now_unix() -> f64 {
    unix_now()
}
