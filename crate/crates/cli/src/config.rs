//! Run configuration: a TOML file (or shipped preset) naming the model,
//! hardware, cost table, dataflow, and policy. Unknown keys are hard
//! errors; every energy/latency key carries its unit in the name.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use imcsim::cost::CostTable;
use imcsim::hw::HardwareSpec;
use imcsim::mapping::ResidencyRequest;
use imcsim::policy::PolicyKind;
use imcsim::schedule::dataflow::DataflowConfig;
use imcsim::sim::SimConfig;
use imcsim::workload::ModelSpec;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Shipped presets, resolvable by name wherever a config path is accepted.
pub const PRESETS: &[(&str, &str)] = &[
    ("bert-base", include_str!("../presets/bert-base.toml")),
    ("bert-large", include_str!("../presets/bert-large.toml")),
    ("table1-hw", include_str!("../presets/table1-hw.toml")),
    ("glue", include_str!("../presets/glue.toml")),
    ("squad", include_str!("../presets/squad.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    pub report: Option<String>,
    pub trace: Option<String>,
    pub sweep_csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Config format version; must match [`CONFIG_SCHEMA_VERSION`].
    pub schema: u32,
    pub model: ModelSpec,
    #[serde(default)]
    pub hardware: HardwareSpec,
    #[serde(default)]
    pub cost_table: CostTable,
    pub dataflow: DataflowConfig,
    pub policy: PolicyKind,
    #[serde(default = "default_residency")]
    pub residency: ResidencyRequest,
    #[serde(default = "default_true")]
    pub allow_tile_scaling: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_residency() -> ResidencyRequest {
    ResidencyRequest::Auto
}
fn default_true() -> bool {
    true
}

#[derive(Debug)]
pub enum ConfigError {
    /// Reading the file failed (I/O).
    Io(String),
    /// Parsing or validating the config failed.
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "{m}"),
            ConfigError::Invalid(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            model: self.model.clone(),
            hardware: self.hardware.clone(),
            cost_table: self.cost_table.clone(),
            dataflow: self.dataflow,
            policy: self.policy,
            residency: self.residency,
            allow_tile_scaling: self.allow_tile_scaling,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != CONFIG_SCHEMA_VERSION {
            return Err(ConfigError::Invalid(format!(
                "unsupported config schema {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema
            )));
        }
        self.model
            .validate()
            .and_then(|_| self.hardware.validate())
            .and_then(|_| self.cost_table.validate())
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.dataflow
            .strategy()
            .blocks(self.model.seq_len)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }
}

pub fn parse_str(text: &str, origin: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text)
        .map_err(|e| ConfigError::Invalid(format!("{origin}: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Loads a config by preset name or filesystem path.
pub fn parse_config(name_or_path: &str) -> Result<RunConfig, ConfigError> {
    if let Some((_, text)) = PRESETS.iter().find(|(n, _)| *n == name_or_path) {
        return parse_str(text, name_or_path);
    }
    let path = Path::new(name_or_path);
    let text = std::fs::read_to_string(path).map_err(|e| {
        ConfigError::Io(format!("cannot read config '{name_or_path}': {e}"))
    })?;
    parse_str(&text, name_or_path)
}

/// Replaces the model section with a preset's model (used by `validate
/// --model`).
pub fn model_preset(name: &str) -> Result<ModelSpec, ConfigError> {
    let cfg = parse_config(name)?;
    Ok(cfg.model)
}
