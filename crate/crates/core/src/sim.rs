//! Simulation kernel: workload -> mapping -> schedule -> aggregated report,
//! plus one-axis parameter sweeps.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cost::{CostBreakdown, CostTable};
use crate::error::{Error, Result};
use crate::hw::HardwareSpec;
use crate::mapping::{self, Lifetime, Mapping, MappingOptions, Residency, ResidencyRequest};
use crate::policy::{self, PolicyKind};
use crate::schedule::dataflow::DataflowConfig;
use crate::schedule::segments::Category;
use crate::schedule::{executor, segments, Resource, Timeline};
use crate::workload::{build_op_graph, count_flops, FlopsBreakdown};
use crate::workload::ModelSpec;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Everything one simulation run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
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
}

fn default_residency() -> ResidencyRequest {
    ResidencyRequest::Auto
}
fn default_true() -> bool {
    true
}

impl SimConfig {
    pub fn mapping_options(&self) -> MappingOptions {
        MappingOptions {
            residency: self.residency,
            allow_tile_scaling: self.allow_tile_scaling,
        }
    }
}

fn short_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub model_hash: String,
    pub hardware_hash: String,
    pub cost_table_hash: String,
    pub dataflow: String,
    pub policy: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdownJ {
    pub projection: f64,
    pub attention_mvm: f64,
    pub attention_write: f64,
    pub sfu_accum: f64,
    pub memory: f64,
    pub interconnect: f64,
    /// Leakage/clock energy proportional to elapsed cycles.
    pub background: f64,
}

impl EnergyBreakdownJ {
    pub fn total(&self) -> f64 {
        self.projection
            + self.attention_mvm
            + self.attention_write
            + self.sfu_accum
            + self.memory
            + self.interconnect
            + self.background
    }

    /// Sum of the workload-driven categories (everything but background).
    pub fn dynamic(&self) -> f64 {
        self.total() - self.background
    }
}

/// ADC energy shares inside each engine's MVM energy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MvmShares {
    pub projection_adc_share: f64,
    pub attention_adc_share: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Utilization {
    pub projection: f64,
    pub attention: f64,
    pub bus: f64,
    pub sfu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub total_cycles: u64,
    pub latency_s: f64,
    pub total_energy_j: f64,
    pub dynamic_energy_j: f64,
    pub static_energy_j: f64,
    pub energy_breakdown_j: EnergyBreakdownJ,
    pub mvm_shares: MvmShares,
    pub utilization: Utilization,
    pub peak_score_buffer_bytes_per_head: u64,
    pub accumulator_bytes_per_head: u64,
    pub spilled_scores: bool,
    pub nvm_write_events_per_inference: u64,
    pub max_writes_per_device_per_inference: u64,
    pub lifetime: Lifetime,
    pub flops: FlopsBreakdown,
    pub total_flops: u64,
    pub tops_per_watt: Option<f64>,
    /// Fraction of total runtime spent in dynamic-operand MVM segments.
    pub dynamic_runtime_share: f64,
    pub residency: Residency,
    pub scaled_tiles: bool,
    pub provisioned_tiles: u32,
    pub batch: u32,
}

/// Runs one configuration end to end. Deterministic: identical configs
/// yield byte-identical serialized reports.
pub fn run(config: &SimConfig) -> Result<Report> {
    config.model.validate()?;
    config.hardware.validate()?;
    config.cost_table.validate()?;

    let echo = ConfigEcho {
        model_hash: short_hash(&config.model),
        hardware_hash: short_hash(&config.hardware),
        cost_table_hash: short_hash(&config.cost_table),
        dataflow: config.dataflow.descriptor(),
        policy: config.policy.as_str().to_string(),
        seed: config.seed,
    };

    let graph = build_op_graph(&config.model)?;
    let flops = count_flops(&graph)?;
    let batch = config.model.batch as u64;

    if config.model.num_layers == 0 {
        return Ok(Report {
            schema_version: REPORT_SCHEMA_VERSION,
            config: echo,
            total_cycles: 0,
            latency_s: 0.0,
            total_energy_j: 0.0,
            dynamic_energy_j: 0.0,
            static_energy_j: 0.0,
            energy_breakdown_j: EnergyBreakdownJ::default(),
            mvm_shares: MvmShares::default(),
            utilization: Utilization::default(),
            peak_score_buffer_bytes_per_head: 0,
            accumulator_bytes_per_head: 0,
            spilled_scores: false,
            nvm_write_events_per_inference: 0,
            max_writes_per_device_per_inference: 0,
            lifetime: Lifetime::Unbounded,
            flops,
            total_flops: 0,
            tops_per_watt: None,
            dynamic_runtime_share: 0.0,
            residency: Residency::Spatial,
            scaled_tiles: false,
            provisioned_tiles: config.hardware.projection.num_tiles,
            batch: config.model.batch,
        });
    }

    let pol = policy::from_kind(config.policy);
    let mapping = mapping::map_model(
        &config.hardware,
        &graph,
        pol.as_ref(),
        config.mapping_options(),
    )?;
    let blocks = config.dataflow.strategy().blocks(config.model.seq_len)?;
    let segs = segments::build_segments(&graph, &mapping, &config.hardware, &config.cost_table, &blocks)?;
    let timeline = executor::execute(&segs)?;

    Ok(assemble_report(
        config, echo, &mapping, &segs, &timeline, flops, batch,
    ))
}

fn assemble_report(
    config: &SimConfig,
    echo: ConfigEcho,
    mapping: &Mapping,
    segs: &segments::SegmentGraph,
    timeline: &Timeline,
    flops: FlopsBreakdown,
    batch: u64,
) -> Report {
    // Batch repetitions are independent: scale cycles and energy linearly.
    let total_cycles = timeline.total_cycles * batch;
    let latency_s = total_cycles as f64 / config.hardware.frequency_hz as f64;

    let mut by_cat: [CostBreakdown; 6] = Default::default();
    for (cat, b) in segs.energy_by_category() {
        by_cat[cat_index(cat)] = b;
    }
    let pj_to_j = 1e-12 * batch as f64;
    let background_pj = config.cost_table.e_static_pj_per_cycle * timeline.total_cycles as f64;
    let breakdown = EnergyBreakdownJ {
        projection: by_cat[0].total() * pj_to_j,
        attention_mvm: by_cat[1].total() * pj_to_j,
        attention_write: by_cat[2].total() * pj_to_j,
        sfu_accum: by_cat[3].total() * pj_to_j,
        memory: by_cat[4].total() * pj_to_j,
        interconnect: by_cat[5].total() * pj_to_j,
        background: background_pj * pj_to_j,
    };
    let dynamic_energy_j = breakdown.dynamic();
    let total_energy_j = breakdown.total();

    let proj_mvm = by_cat[0];
    let attn_mvm = by_cat[1];
    let mvm_shares = MvmShares {
        projection_adc_share: share(proj_mvm.adc, proj_mvm.total()),
        attention_adc_share: share(attn_mvm.adc, attn_mvm.total()),
    };

    let util = timeline.utilization();
    let utilization = Utilization {
        projection: util[Resource::ProjectionEngine.index()],
        attention: util[Resource::AttentionEngine.index()],
        bus: util[Resource::Bus.index()],
        sfu: util[Resource::Sfu.index()],
    };

    let dynamic_cycles: u64 = segs
        .segments
        .iter()
        .filter(|s| s.kind.is_dynamic_mvm())
        .map(|s| s.cycles)
        .sum();
    let dynamic_runtime_share = share(dynamic_cycles as f64, timeline.total_cycles as f64);

    let total_flops = flops.total() * batch;
    let tops_per_watt = if total_energy_j > 0.0 {
        Some(total_flops as f64 / (total_energy_j * 1e12))
    } else {
        None
    };

    let lifetime = mapping::lifetime_estimate(mapping, config.hardware.nvm.endurance_writes)
        .expect("endurance validated");

    Report {
        schema_version: REPORT_SCHEMA_VERSION,
        config: echo,
        total_cycles,
        latency_s,
        total_energy_j,
        dynamic_energy_j,
        static_energy_j: breakdown.background,
        energy_breakdown_j: breakdown,
        mvm_shares,
        utilization,
        peak_score_buffer_bytes_per_head: segs.peak_score_block_bytes,
        accumulator_bytes_per_head: segs.accumulator_bytes,
        spilled_scores: segs.spilled,
        nvm_write_events_per_inference: mapping.nvm_write_events_per_inference,
        max_writes_per_device_per_inference: mapping.max_writes_per_device_per_inference,
        lifetime,
        flops,
        total_flops,
        tops_per_watt,
        dynamic_runtime_share,
        residency: mapping.residency,
        scaled_tiles: mapping.scaled_tiles,
        provisioned_tiles: mapping.provisioned_tiles,
        batch: config.model.batch,
    }
}

fn cat_index(c: Category) -> usize {
    match c {
        Category::Projection => 0,
        Category::AttentionMvm => 1,
        Category::AttentionWrite => 2,
        Category::SfuAccum => 3,
        Category::Memory => 4,
        Category::Interconnect => 5,
    }
}

fn share(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Throughput-per-power figure of merit: total FLOPs / (10^12 x joules).
pub fn tops_per_watt(report: &Report) -> Result<f64> {
    if report.total_energy_j <= 0.0 {
        return Err(Error::InvalidConfig(
            "TOPS/W undefined for zero total energy".into(),
        ));
    }
    Ok(report.total_flops as f64 / (report.total_energy_j * 1e12))
}

/// Sweepable configuration axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SeqLen,
    Block,
    Policy,
    Dataflow,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<SweepAxis> {
        match s {
            "SL" | "seq_len" => Ok(SweepAxis::SeqLen),
            "SB" | "block" => Ok(SweepAxis::Block),
            "policy" => Ok(SweepAxis::Policy),
            "dataflow" => Ok(SweepAxis::Dataflow),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep axis '{other}' (known: SL, SB, policy, dataflow)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SeqLen => "SL",
            SweepAxis::Block => "SB",
            SweepAxis::Policy => "policy",
            SweepAxis::Dataflow => "dataflow",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: String,
    pub value: String,
    pub report: std::result::Result<Report, String>,
}

fn apply_axis(base: &SimConfig, axis: SweepAxis, value: &str) -> Result<SimConfig> {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::SeqLen => {
            cfg.model.seq_len = value
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad SL value '{value}'")))?;
        }
        SweepAxis::Block => {
            let block = value
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad SB value '{value}'")))?;
            cfg.dataflow = DataflowConfig::SequenceBlocking { block };
        }
        SweepAxis::Policy => cfg.policy = PolicyKind::parse(value)?,
        SweepAxis::Dataflow => cfg.dataflow = DataflowConfig::parse(value)?,
    }
    Ok(cfg)
}

/// Runs one report per value, preserving input order. Per-point failures
/// are recorded in place and never abort the sweep.
pub fn sweep(base: &SimConfig, axis: SweepAxis, values: &[String]) -> Vec<SweepPoint> {
    values
        .iter()
        .map(|v| {
            let report = apply_axis(base, axis, v)
                .and_then(|cfg| run(&cfg))
                .map_err(|e| e.to_string());
            SweepPoint {
                axis: axis.name().to_string(),
                value: v.clone(),
                report,
            }
        })
        .collect()
}
