//! Placement of workload matrices onto the hardware: crossbar tiling,
//! capacity validation, deterministic allocation, and device-lifetime
//! accounting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hw::HardwareSpec;
use crate::policy::{MappingPolicy, PolicyKind, StationaryWrite};
use crate::workload::{ModelSpec, OpGraph, OpKind, OpRole};

/// How static weights reside in the projection engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Residency {
    /// All layers resident at once.
    Spatial,
    /// One layer's weights resident; the pool is refilled before each layer.
    PerLayerReplay,
}

/// Residency selection request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidencyRequest {
    Spatial,
    PerLayerReplay,
    /// Prefer spatial, fall back to replay when it does not fit.
    Auto,
}

/// Crossbar tiling of one weight matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tiling {
    pub slices: u64,
    pub grid_rows: u64,
    pub grid_cols: u64,
    pub total_crossbars: u64,
}

/// Bit-sliced crossbar count for a `rows x cols` matrix.
pub fn tile_matrix(
    rows: u64,
    cols: u64,
    weight_bits: u32,
    cell_bits: u32,
    xbar_rows: u32,
    xbar_cols: u32,
) -> Result<Tiling> {
    if rows < 1 || cols < 1 || weight_bits < 1 || cell_bits < 1 || xbar_rows < 1 || xbar_cols < 1 {
        return Err(Error::InvalidHardware("tile_matrix arguments must be >= 1".into()));
    }
    if weight_bits < cell_bits {
        return Err(Error::InvalidHardware(format!(
            "weight_bits ({weight_bits}) must be >= cell_bits ({cell_bits})"
        )));
    }
    let slices = (weight_bits as u64).div_ceil(cell_bits as u64);
    let grid_rows = rows.div_ceil(xbar_rows as u64);
    let grid_cols = cols.div_ceil(xbar_cols as u64);
    Ok(Tiling {
        slices,
        grid_rows,
        grid_cols,
        total_crossbars: slices * grid_rows * grid_cols,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionCapacity {
    pub required_crossbars: u64,
    pub available_crossbars: u64,
    /// Weight cells demanded (values x slices), before crossbar rounding.
    pub required_weight_cells: u64,
    pub available_cells: u64,
    pub pass: bool,
    /// Smallest tile count that would fit the requirement.
    pub min_tiles: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionCapacity {
    /// Q+V residency demand per head tile, in compute-cell bits.
    pub required_bits_per_ahct: u64,
    pub available_bits_per_ahct: u64,
    pub pass: bool,
    /// Serialization factor when heads outnumber head tiles.
    pub time_mux_factor: u32,
    /// Not applicable under policies that bypass the SRAM tiles.
    pub applicable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingCapacity {
    pub required_bytes: u64,
    pub available_bytes: u64,
    pub pass: bool,
}

/// Outcome of a capacity check; failures are reported, never thrown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub residency: Residency,
    pub policy: PolicyKind,
    pub projection: ProjectionCapacity,
    pub attention: AttentionCapacity,
    pub embedding: EmbeddingCapacity,
    pub pass: bool,
}

/// Static encoder weight matrices of one layer as (rows, cols).
fn layer_static_dims(model: &ModelSpec) -> Vec<(u64, u64)> {
    let hs = model.hidden_size as u64;
    let ffn = model.ffn_mult as u64 * hs;
    vec![(hs, hs), (hs, hs), (hs, hs), (hs, hs), (hs, ffn), (ffn, hs)]
}

/// Dynamic stationary matrices per head as (rows, cols): the query matrix
/// streamed against keys and the value matrix streamed against scores.
fn head_dynamic_dims(model: &ModelSpec) -> [(u64, u64); 2] {
    let sl = model.seq_len as u64;
    let hss = model.head_size as u64;
    [(hss, sl), (sl, hss)]
}

fn crossbars_per_layer(model: &ModelSpec, hw: &HardwareSpec) -> Result<(u64, u64)> {
    let p = &hw.projection;
    let mut stat = 0u64;
    let mut cells = 0u64;
    for (r, c) in layer_static_dims(model) {
        let t = tile_matrix(r, c, model.bit_width_weights, p.cell_bits, p.xbar_rows, p.xbar_cols)?;
        stat += t.total_crossbars;
        cells += r * c * t.slices;
    }
    Ok((stat, cells))
}

fn dynamic_crossbars_per_layer(model: &ModelSpec, hw: &HardwareSpec) -> Result<(u64, u64)> {
    let p = &hw.projection;
    let mut xbars = 0u64;
    let mut cells = 0u64;
    for (r, c) in head_dynamic_dims(model) {
        let t = tile_matrix(r, c, model.bit_width_q, p.cell_bits, p.xbar_rows, p.xbar_cols)?;
        xbars += t.total_crossbars * model.num_heads as u64;
        cells += r * c * t.slices * model.num_heads as u64;
    }
    Ok((xbars, cells))
}

/// Storage check for the chosen residency mode and policy.
///
/// The projection requirement covers the encoder weight matrices (all layers
/// for spatial residency, one for replay) plus, under the all-NVM policy,
/// the per-head dynamic stationaries. The embedding table and the small task
/// head live in the dense read-only tiles.
pub fn validate_capacity(
    hw: &HardwareSpec,
    model: &ModelSpec,
    residency: Residency,
    policy: PolicyKind,
) -> Result<CapacityReport> {
    model.validate()?;
    hw.validate()?;
    let pol = crate::policy::from_kind(policy);
    let layers = model.num_layers as u64;

    let (stat_xbars, stat_cells) = crossbars_per_layer(model, hw)?;
    let (dyn_xbars, dyn_cells) = if pol.dynamic_on_nvm() {
        dynamic_crossbars_per_layer(model, hw)?
    } else {
        (0, 0)
    };
    let resident_layers = match residency {
        Residency::Spatial => layers,
        Residency::PerLayerReplay => layers.min(1),
    };
    let required_crossbars = (stat_xbars + dyn_xbars) * resident_layers;
    let required_weight_cells = (stat_cells + dyn_cells) * resident_layers;
    let p = &hw.projection;
    let xbars_per_tile = p.cores_per_tile as u64 * p.crossbars_per_core as u64;
    let projection = ProjectionCapacity {
        required_crossbars,
        available_crossbars: p.total_crossbars(),
        required_weight_cells,
        available_cells: p.total_cells(),
        pass: required_crossbars <= p.total_crossbars(),
        min_tiles: required_crossbars.div_ceil(xbars_per_tile).max(1) as u32,
    };

    let applicable = matches!(pol.stationary_write(), StationaryWrite::SramBanks);
    let hss = model.head_size as u64;
    let sl = model.seq_len as u64;
    let required_bits =
        hss * sl * (model.bit_width_q as u64) + sl * hss * (model.bit_width_v as u64);
    let heads = model.num_heads;
    let ahcts = hw.attention.total_ahcts();
    let attention = AttentionCapacity {
        required_bits_per_ahct: if applicable { required_bits } else { 0 },
        available_bits_per_ahct: hw.attention.bits_per_ahct(),
        pass: !applicable || required_bits <= hw.attention.bits_per_ahct(),
        time_mux_factor: heads.div_ceil(ahcts).max(1),
        applicable,
    };

    let required_bytes = if model.num_layers == 0 {
        0
    } else {
        model.vocab_size as u64 * model.hidden_size as u64 * model.weight_bytes()
            + model.hidden_size as u64 * 2 * model.weight_bytes()
    };
    let embedding = EmbeddingCapacity {
        required_bytes,
        available_bytes: p.readonly_tile_bytes,
        pass: required_bytes <= p.readonly_tile_bytes,
    };

    let pass = projection.pass && attention.pass && embedding.pass;
    Ok(CapacityReport {
        residency,
        policy,
        projection,
        attention,
        embedding,
        pass,
    })
}

/// One static matrix's crossbar allocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticAlloc {
    pub node: u32,
    pub layer: Option<u32>,
    pub role: OpRole,
    pub rows: u64,
    pub cols: u64,
    pub tiling: Tiling,
    /// First crossbar id of the contiguous row-major range.
    pub xbar_start: u64,
}

/// One dynamic stationary's crossbar allocation (all-NVM policy only).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicAlloc {
    pub layer: u32,
    pub head: u32,
    pub role: OpRole,
    pub tiling: Tiling,
    pub xbar_start: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadAssignment {
    pub layer: u32,
    pub head: u32,
    pub ahct: u32,
}

/// Deterministic placement of a workload onto the hardware.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mapping {
    pub policy: PolicyKind,
    pub residency: Residency,
    /// Tile count actually provisioned (differs from the spec when
    /// auto-scaling was applied).
    pub provisioned_tiles: u32,
    pub scaled_tiles: bool,
    pub fell_back_to_replay: bool,
    pub static_allocs: Vec<StaticAlloc>,
    pub dynamic_allocs: Vec<DynamicAlloc>,
    pub head_assignments: Vec<HeadAssignment>,
    pub time_mux_factor: u32,
    /// Reprogramming events per inference (dynamic stationaries, plus layer
    /// refills under replay residency with the all-NVM policy).
    pub nvm_write_events_per_inference: u64,
    /// Worst per-device write count per inference.
    pub max_writes_per_device_per_inference: u64,
    pub capacity: CapacityReport,
}

#[derive(Debug, Clone, Copy)]
pub struct MappingOptions {
    pub residency: ResidencyRequest,
    pub allow_tile_scaling: bool,
}

impl Default for MappingOptions {
    fn default() -> Self {
        Self {
            residency: ResidencyRequest::Auto,
            allow_tile_scaling: true,
        }
    }
}

/// Places every graph matrix deterministically: static matrices row-major
/// over the crossbar pool in node order, heads round-robin over the head
/// tiles. Under replay residency the crossbar cursor restarts per layer, so
/// layers reuse the same physical devices.
pub fn map_model(
    hw: &HardwareSpec,
    graph: &OpGraph,
    policy: &dyn MappingPolicy,
    options: MappingOptions,
) -> Result<Mapping> {
    let model = &graph.model;
    // Resolve residency: requested mode, or spatial-with-fallback on Auto.
    let (residency, capacity, scaled, fell_back) = resolve_residency(hw, model, policy, options)?;

    let mut hw_eff = hw.clone();
    if scaled {
        hw_eff.projection.num_tiles = capacity.projection.min_tiles;
    }

    let heads = model.num_heads;
    let ahcts = hw_eff.attention.total_ahcts();
    let p = &hw_eff.projection;

    let mut static_allocs = Vec::new();
    let mut dynamic_allocs = Vec::new();
    let mut head_assignments = Vec::new();

    let mut cursor = 0u64;
    let mut layer_base = 0u64;
    let mut current_layer: Option<u32> = None;
    for node in &graph.nodes {
        if node.kind == OpKind::MvmStatic && node.role != OpRole::Classifier {
            if residency == Residency::PerLayerReplay && node.layer != current_layer {
                current_layer = node.layer;
                cursor = layer_base;
            }
            let (m, k, n) = node.dims.expect("static MVM node carries dims");
            debug_assert_eq!(m, model.seq_len as u64);
            let t = tile_matrix(k, n, model.bit_width_weights, p.cell_bits, p.xbar_rows, p.xbar_cols)?;
            static_allocs.push(StaticAlloc {
                node: node.id,
                layer: node.layer,
                role: node.role,
                rows: k,
                cols: n,
                tiling: t,
                xbar_start: cursor,
            });
            cursor += t.total_crossbars;
        }
    }
    if residency == Residency::PerLayerReplay {
        // Dynamic stationaries sit after the per-layer static pool.
        layer_base = static_allocs
            .iter()
            .filter(|a| a.layer == Some(0))
            .map(|a| a.xbar_start + a.tiling.total_crossbars)
            .max()
            .unwrap_or(0);
        cursor = layer_base;
    }

    if policy.dynamic_on_nvm() {
        let dyn_base = cursor;
        for layer in 0..model.num_layers {
            let mut layer_cursor = dyn_base;
            for head in 0..heads {
                for (role, (r, c)) in
                    [OpRole::Score, OpRole::Context].iter().zip(head_dynamic_dims(model))
                {
                    let t =
                        tile_matrix(r, c, model.bit_width_q, p.cell_bits, p.xbar_rows, p.xbar_cols)?;
                    let start = match residency {
                        Residency::Spatial => {
                            let s = cursor;
                            cursor += t.total_crossbars;
                            s
                        }
                        Residency::PerLayerReplay => {
                            let s = layer_cursor;
                            layer_cursor += t.total_crossbars;
                            s
                        }
                    };
                    dynamic_allocs.push(DynamicAlloc {
                        layer,
                        head,
                        role: *role,
                        tiling: t,
                        xbar_start: start,
                    });
                }
            }
        }
    }

    for layer in 0..model.num_layers {
        for head in 0..heads {
            head_assignments.push(HeadAssignment {
                layer,
                head,
                ahct: head % ahcts,
            });
        }
    }

    let layers = model.num_layers as u64;
    let dyn_events = if policy.dynamic_on_nvm() {
        layers * heads as u64 * 2
    } else {
        0
    };
    let replay_static_events = if policy.dynamic_on_nvm() && residency == Residency::PerLayerReplay
    {
        layers * layer_static_dims(model).len() as u64
    } else {
        0
    };
    let nvm_write_events = dyn_events + replay_static_events;

    let max_writes_per_device = if policy.dynamic_on_nvm() {
        match residency {
            Residency::Spatial => 1,
            Residency::PerLayerReplay => layers,
        }
    } else {
        // The hybrid policy leaves crossbars untouched after initial
        // programming; replay weight refills move over the interconnect as
        // DMA and are not endurance events.
        0
    };

    Ok(Mapping {
        policy: policy.kind(),
        residency,
        provisioned_tiles: hw_eff.projection.num_tiles,
        scaled_tiles: scaled,
        fell_back_to_replay: fell_back,
        static_allocs,
        dynamic_allocs,
        head_assignments,
        time_mux_factor: heads.div_ceil(ahcts).max(1),
        nvm_write_events_per_inference: nvm_write_events,
        max_writes_per_device_per_inference: max_writes_per_device,
        capacity,
    })
}

fn resolve_residency(
    hw: &HardwareSpec,
    model: &ModelSpec,
    policy: &dyn MappingPolicy,
    options: MappingOptions,
) -> Result<(Residency, CapacityReport, bool, bool)> {
    let check = |r: Residency| validate_capacity(hw, model, r, policy.kind());
    let spatial = check(Residency::Spatial)?;
    match options.residency {
        ResidencyRequest::Spatial => {
            if spatial.pass {
                Ok((Residency::Spatial, spatial, false, false))
            } else if options.allow_tile_scaling && spatial.attention.pass && spatial.embedding.pass
            {
                Ok((Residency::Spatial, spatial, true, false))
            } else {
                Err(Error::Capacity(capacity_failure_message(&spatial)))
            }
        }
        ResidencyRequest::PerLayerReplay => {
            let replay = check(Residency::PerLayerReplay)?;
            if replay.pass {
                Ok((Residency::PerLayerReplay, replay, false, false))
            } else if options.allow_tile_scaling && replay.attention.pass && replay.embedding.pass {
                Ok((Residency::PerLayerReplay, replay, true, false))
            } else {
                Err(Error::Capacity(capacity_failure_message(&replay)))
            }
        }
        ResidencyRequest::Auto => {
            if spatial.pass {
                return Ok((Residency::Spatial, spatial, false, false));
            }
            if options.allow_tile_scaling && spatial.attention.pass && spatial.embedding.pass {
                return Ok((Residency::Spatial, spatial, true, false));
            }
            let replay = check(Residency::PerLayerReplay)?;
            if replay.pass {
                Ok((Residency::PerLayerReplay, replay, false, true))
            } else {
                Err(Error::Capacity(capacity_failure_message(&replay)))
            }
        }
    }
}

fn capacity_failure_message(report: &CapacityReport) -> String {
    let mut parts = Vec::new();
    if !report.projection.pass {
        parts.push(format!(
            "projection needs {} crossbars but only {} exist (min {} tiles)",
            report.projection.required_crossbars,
            report.projection.available_crossbars,
            report.projection.min_tiles
        ));
    }
    if !report.attention.pass {
        parts.push(format!(
            "head tile needs {} bits of Q/V residency but holds {}",
            report.attention.required_bits_per_ahct, report.attention.available_bits_per_ahct
        ));
    }
    if !report.embedding.pass {
        parts.push(format!(
            "read-only tiles need {} bytes but hold {}",
            report.embedding.required_bytes, report.embedding.available_bytes
        ));
    }
    format!("{:?} residency: {}", report.residency, parts.join("; "))
}

/// Device lifetime under the mapping's write behavior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lifetime {
    /// No NVM writes after initial programming.
    Unbounded,
    Bounded { inferences: f64 },
}

/// Inferences until the most-written device exhausts its endurance.
pub fn lifetime_estimate(mapping: &Mapping, endurance_writes: u64) -> Result<Lifetime> {
    if endurance_writes < 1 {
        return Err(Error::InvalidHardware("endurance_writes must be >= 1".into()));
    }
    if mapping.max_writes_per_device_per_inference == 0 {
        return Ok(Lifetime::Unbounded);
    }
    Ok(Lifetime::Bounded {
        inferences: endurance_writes as f64 / mapping.max_writes_per_device_per_inference as f64,
    })
}
