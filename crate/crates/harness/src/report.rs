//! Report rows, the CSV body and the JSON metadata sidecar.
//!
//! The CSV body depends only on the resolved config. Wall-clock data goes
//! to the sidecar alone.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::{Config, OutputFormat, OUTPUT_DIR_ENV};
use crate::error::{HarnessError, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One line of the CSV report. Columns that do not apply stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportRow {
    pub schema_version: u32,
    /// Sweep grid index; 0 outside sweeps.
    pub point: usize,
    pub architecture: String,
    pub params: String,
    pub workload: String,
    pub cycles: Option<u64>,
    pub model_cycles: Option<u64>,
    pub seconds: Option<f64>,
    pub utilization: Option<f64>,
    pub steady_utilization: Option<f64>,
    pub mac_ops: Option<u64>,
    pub fill_cycles: Option<u64>,
    pub drain_cycles: Option<u64>,
    pub overhead_cycles: Option<u64>,
    pub pe_to_pe_transfers: Option<u64>,
    pub comm_seconds: Option<f64>,
    pub comp_seconds: Option<f64>,
    pub latency_seconds: Option<f64>,
    pub steps: Option<usize>,
    pub bound: Option<f64>,
    pub bound_ratio: Option<f64>,
    pub core_multiplier: Option<f64>,
    pub powered_fraction: Option<f64>,
    pub effective_multiplier: Option<f64>,
    pub checks: Option<u64>,
    pub failures: Option<u64>,
    pub exact: Option<bool>,
}

impl ReportRow {
    pub fn new(architecture: &str, params: String, workload: String) -> Self {
        ReportRow {
            schema_version: REPORT_SCHEMA_VERSION,
            architecture: architecture.to_owned(),
            params,
            workload,
            ..ReportRow::default()
        }
    }

    fn numeric_fields(&self) -> [Option<f64>; 11] {
        [
            self.seconds,
            self.utilization,
            self.steady_utilization,
            self.comm_seconds,
            self.comp_seconds,
            self.latency_seconds,
            self.bound,
            self.bound_ratio,
            self.core_multiplier,
            self.powered_fraction,
            self.effective_multiplier,
        ]
    }
}

/// Renders rows as CSV: header first, comma separated, LF line ends.
pub fn to_csv(rows: &[ReportRow]) -> Result<Vec<u8>> {
    if let Some(bad) = rows.iter().find(|r| r.numeric_fields().iter().flatten().any(|v| !v.is_finite())) {
        return Err(HarnessError::config(format!(
            "non-finite value in report row for `{}` ({})",
            bad.architecture, bad.workload
        )));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(true)
        .from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(column_names())
            .map_err(|e| HarnessError::config(format!("csv: {e}")))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| HarnessError::config(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| HarnessError::config(format!("csv: {e}")))
}

pub fn column_names() -> Vec<&'static str> {
    vec![
        "schema_version",
        "point",
        "architecture",
        "params",
        "workload",
        "cycles",
        "model_cycles",
        "seconds",
        "utilization",
        "steady_utilization",
        "mac_ops",
        "fill_cycles",
        "drain_cycles",
        "overhead_cycles",
        "pe_to_pe_transfers",
        "comm_seconds",
        "comp_seconds",
        "latency_seconds",
        "steps",
        "bound",
        "bound_ratio",
        "core_multiplier",
        "powered_fraction",
        "effective_multiplier",
        "checks",
        "failures",
        "exact",
    ]
}

#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    schema_version: u32,
    tool: &'static str,
    tool_version: &'static str,
    generated_unix_seconds: u64,
    command: &'a str,
    config_path: String,
    csv_file: Option<String>,
    row_count: usize,
    columns: Vec<&'static str>,
    resolved_config: &'a Config,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep_points: Option<&'a serde_json::Value>,
}

/// Where a run's files were written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenReport {
    pub csv: Option<PathBuf>,
    pub sidecar: Option<PathBuf>,
}

/// Output directory: `$CSTREAM_OUTPUT_DIR` if set, else `output.dir`
/// (relative to the working directory).
pub fn output_dir(cfg: &Config) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(&cfg.output.dir),
    }
}

pub(crate) struct ReportContext<'a> {
    pub command: &'a str,
    pub config_path: &'a Path,
    pub sweep_points: Option<serde_json::Value>,
}

pub(crate) fn write(cfg: &Config, rows: &[ReportRow], dir: &Path, ctx: &ReportContext<'_>) -> Result<WrittenReport> {
    let io = |action, path: &Path| {
        let path = path.to_owned();
        move |source| HarnessError::Io { action, path, source }
    };
    fs::create_dir_all(dir).map_err(io("create output directory", dir))?;
    let name = cfg.output.name.as_deref().unwrap_or("report");
    let mut written = WrittenReport { csv: None, sidecar: None };
    if cfg.output.formats.contains(&OutputFormat::Csv) {
        let path = dir.join(format!("{name}.csv"));
        fs::write(&path, to_csv(rows)?).map_err(io("write", &path))?;
        written.csv = Some(path);
    }
    if cfg.output.formats.contains(&OutputFormat::Json) {
        let path = dir.join(format!("{name}.json"));
        let sidecar = Sidecar {
            schema_version: REPORT_SCHEMA_VERSION,
            tool: "cstream",
            tool_version: env!("CARGO_PKG_VERSION"),
            generated_unix_seconds: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            command: ctx.command,
            config_path: ctx.config_path.display().to_string(),
            csv_file: written.csv.as_ref().and_then(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()),
            row_count: rows.len(),
            columns: column_names(),
            resolved_config: cfg,
            sweep_points: ctx.sweep_points.as_ref(),
        };
        let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        text.push('\n');
        fs::write(&path, text).map_err(io("write", &path))?;
        written.sidecar = Some(path);
    }
    Ok(written)
}
