//! Experiment configuration: one JSON document per experiment.
//!
//! Parsing is strict (unknown keys are rejected) and every omitted optional
//! value is filled in by [`Config::resolve`], so serializing a resolved
//! config reproduces the run exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const OUTPUT_DIR_ENV: &str = "CSTREAM_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    Sweep,
    Compare,
    Bounds,
    Darksilicon,
    Validate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload: Option<WorkloadSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub architectures: Vec<ArchSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_product: Option<InnerProductSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub darksilicon: Option<DarkSiliconSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<ValidateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub shape: ShapeSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub block_width: usize,
}

fn default_fanout() -> usize {
    4
}

fn default_latency() -> u64 {
    1
}

fn default_element_bytes() -> u64 {
    4
}

fn default_tree_fanout() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArchSpec {
    Systolic {
        rows: usize,
        cols: usize,
    },
    Streamer {
        pes: usize,
        #[serde(default = "default_fanout")]
        fanout: usize,
        #[serde(default = "default_latency")]
        level_latency: u64,
        /// Defaults to the fanout.
        #[serde(default)]
        port_width: Option<usize>,
    },
    Summa {
        p_rows: usize,
        p_cols: usize,
        alpha: f64,
        beta: f64,
        node_mac_rate: f64,
        #[serde(default = "default_element_bytes")]
        element_bytes: u64,
    },
}

impl ArchSpec {
    pub fn id(&self) -> &'static str {
        match self {
            ArchSpec::Systolic { .. } => "systolic",
            ArchSpec::Streamer { .. } => "streamer",
            ArchSpec::Summa { .. } => "summa",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerProductSpec {
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_latency")]
    pub hop_latency: u64,
    #[serde(default = "default_tree_fanout")]
    pub fanout: usize,
    #[serde(default = "default_latency")]
    pub level_latency: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarkSiliconSpec {
    pub generation: u32,
}

fn default_corpus() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_corpus")]
    pub corpus_size: usize,
}

impl Default for ValidateSpec {
    fn default() -> Self {
        ValidateSpec { seed: 0, corpus_size: default_corpus() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted path into the config, e.g. `workload.shape.k` or `architectures.0.rows`.
    pub param: String,
    pub values: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ExperimentKind,
    pub grid: Vec<SweepAxis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_dir() -> String {
    "reports".into()
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Base file name; defaults to the config file stem.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: default_dir(), name: None, formats: default_formats() }
    }
}

fn require<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| HarnessError::config(format!("missing key `{key}`")))
}

fn positive(value: usize, key: &str) -> Result<()> {
    if value == 0 {
        return Err(HarnessError::config(format!("`{key}` must be >= 1")));
    }
    Ok(())
}

fn non_negative_real(value: f64, key: &str, strict: bool) -> Result<()> {
    if !value.is_finite() || value < 0.0 || (strict && value == 0.0) {
        let what = if strict { "> 0" } else { ">= 0" };
        return Err(HarnessError::config(format!("`{key}` must be finite and {what}")));
    }
    Ok(())
}

impl Config {
    pub fn from_json_str(text: &str) -> Result<Config> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| HarnessError::config(format!("invalid JSON: {e}")))?;
        Config::from_value(value)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Config> {
        let cfg: Config =
            serde_json::from_value(value).map_err(|e| HarnessError::config(format!("schema: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and resolves a config file.
    pub fn load(path: &Path) -> Result<Config> {
        let mut cfg = Config::read(path)?;
        cfg.resolve(path);
        Ok(cfg)
    }

    /// Reads a config file without filling derived defaults.
    pub fn read(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            action: "read config",
            path: path.to_owned(),
            source,
        })?;
        Config::from_json_str(&text)
    }

    /// Fills every remaining default so the config can be echoed verbatim.
    pub fn resolve(&mut self, source: &Path) {
        for arch in &mut self.architectures {
            if let ArchSpec::Streamer { fanout, port_width, .. } = arch {
                port_width.get_or_insert(*fanout);
            }
        }
        if self.output.name.is_none() {
            let stem = source.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
            self.output.name = Some(stem.to_owned());
        }
        if self.experiment == ExperimentKind::Validate && self.validate.is_none() {
            self.validate = Some(ValidateSpec::default());
        }
    }

    /// Checks the keys the chosen experiment needs and their ranges.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::config(format!(
                "`schema_version` is {}, this build reads {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        if self.output.formats.is_empty() {
            return Err(HarnessError::config("`output.formats` is empty"));
        }
        match self.experiment {
            ExperimentKind::Simulate | ExperimentKind::Compare => {
                let w = require(self.workload.as_ref(), "workload")?;
                positive(w.shape.m, "workload.shape.m")?;
                positive(w.shape.n, "workload.shape.n")?;
                positive(w.shape.k, "workload.shape.k")?;
                positive(w.block_width, "workload.block_width")?;
                match (self.experiment, self.architectures.len()) {
                    (_, 0) => return Err(HarnessError::config("missing key `architectures`")),
                    (ExperimentKind::Simulate, n) if n > 1 => {
                        return Err(HarnessError::config(
                            "`architectures` must hold exactly one entry for `simulate`; use `compare`",
                        ))
                    }
                    _ => {}
                }
                for (i, arch) in self.architectures.iter().enumerate() {
                    validate_arch(arch, &format!("architectures.{i}"))?;
                }
            }
            ExperimentKind::Bounds => {
                let ip = require(self.inner_product.as_ref(), "inner_product")?;
                positive(ip.n, "inner_product.n")?;
                if ip.hop_latency == 0 {
                    return Err(HarnessError::config("`inner_product.hop_latency` must be >= 1"));
                }
                if ip.fanout < 2 {
                    return Err(HarnessError::config("`inner_product.fanout` must be >= 2"));
                }
                if ip.level_latency == 0 {
                    return Err(HarnessError::config("`inner_product.level_latency` must be >= 1"));
                }
            }
            ExperimentKind::Darksilicon => {
                require(self.darksilicon.as_ref(), "darksilicon")?;
            }
            ExperimentKind::Validate => {
                if let Some(v) = &self.validate {
                    positive(v.corpus_size, "validate.corpus_size")?;
                }
            }
            ExperimentKind::Sweep => {
                let sweep = require(self.sweep.as_ref(), "sweep")?;
                if matches!(sweep.base, ExperimentKind::Sweep) {
                    return Err(HarnessError::config("`sweep.base` cannot itself be `sweep`"));
                }
                if sweep.grid.is_empty() {
                    return Err(HarnessError::config("`sweep.grid` is empty"));
                }
                for (i, axis) in sweep.grid.iter().enumerate() {
                    if axis.values.is_empty() {
                        return Err(HarnessError::config(format!(
                            "`sweep.grid.{i}.values` for `{}` is empty",
                            axis.param
                        )));
                    }
                    if axis.param.trim().is_empty() {
                        return Err(HarnessError::config(format!("`sweep.grid.{i}.param` is empty")));
                    }
                }
            }
        }
        Ok(())
    }
}

fn validate_arch(arch: &ArchSpec, key: &str) -> Result<()> {
    match arch {
        ArchSpec::Systolic { rows, cols } => {
            positive(*rows, &format!("{key}.rows"))?;
            positive(*cols, &format!("{key}.cols"))
        }
        ArchSpec::Streamer { pes, fanout, level_latency, port_width } => {
            positive(*pes, &format!("{key}.pes"))?;
            if *fanout < 2 {
                return Err(HarnessError::config(format!("`{key}.fanout` must be >= 2")));
            }
            if *level_latency == 0 {
                return Err(HarnessError::config(format!("`{key}.level_latency` must be >= 1")));
            }
            if let Some(w) = port_width {
                positive(*w, &format!("{key}.port_width"))?;
            }
            Ok(())
        }
        ArchSpec::Summa { p_rows, p_cols, alpha, beta, node_mac_rate, element_bytes } => {
            positive(*p_rows, &format!("{key}.p_rows"))?;
            positive(*p_cols, &format!("{key}.p_cols"))?;
            non_negative_real(*alpha, &format!("{key}.alpha"), false)?;
            non_negative_real(*beta, &format!("{key}.beta"), false)?;
            non_negative_real(*node_mac_rate, &format!("{key}.node_mac_rate"), true)?;
            positive(*element_bytes as usize, &format!("{key}.element_bytes"))
        }
    }
}
