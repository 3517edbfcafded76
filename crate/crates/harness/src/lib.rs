//! Experiment harness for the cstream workbench: JSON configs in, CSV
//! reports and JSON sidecars out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod sweep;
pub mod validate;

use std::path::Path;

pub use config::Config;
pub use error::{HarnessError, Result};
pub use report::{ReportRow, WrittenReport};

use config::ExperimentKind;
use report::ReportContext;

/// Runs the experiment described by the config file at `path` and writes
/// its report. Sweep configs are dispatched to the sweep runner.
pub fn run_config_file(path: &Path) -> Result<WrittenReport> {
    let raw = Config::read(path)?;
    if raw.experiment == ExperimentKind::Sweep {
        return sweep_with(raw, path, "run");
    }
    let mut cfg = raw;
    cfg.resolve(path);
    let rows = experiments::run_experiment(&cfg)?;
    let written = report::write(
        &cfg,
        &rows,
        &report::output_dir(&cfg),
        &ReportContext { command: "run", config_path: path, sweep_points: None },
    )?;
    fail_on_validation(&rows)?;
    Ok(written)
}

/// Runs a sweep config. Non-sweep configs are rejected.
pub fn run_sweep_file(path: &Path) -> Result<WrittenReport> {
    let raw = Config::read(path)?;
    if raw.experiment != ExperimentKind::Sweep {
        return Err(HarnessError::Config("`experiment` must be `sweep` for the sweep command".into()));
    }
    sweep_with(raw, path, "sweep")
}

fn sweep_with(raw: Config, path: &Path, command: &str) -> Result<WrittenReport> {
    let (rows, points) = sweep::run_sweep(&raw, path)?;
    let mut cfg = raw;
    cfg.resolve(path);
    let written = report::write(
        &cfg,
        &rows,
        &report::output_dir(&cfg),
        &ReportContext { command, config_path: path, sweep_points: Some(points) },
    )?;
    fail_on_validation(&rows)?;
    Ok(written)
}

/// Validation rows with failures turn into a non-zero exit after the report
/// has been written.
fn fail_on_validation(rows: &[ReportRow]) -> Result<()> {
    let failing: Vec<&str> =
        rows.iter().filter(|r| r.failures.is_some_and(|f| f > 0)).map(|r| r.architecture.as_str()).collect();
    if failing.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::Validation(failing.join(", ")))
    }
}
