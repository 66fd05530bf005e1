//! Expands a workload graph + mapping into a dependency graph of atomic
//! schedulable segments.
//!
//! One generator serves every dataflow: the sequence is split into blocks
//! (one block = the whole sequence for the phase-serial dataflow) and each
//! layer unrolls into per-block projection, transfer, install, block-pair
//! attention, and feed-forward segments. Score blocks larger than the head
//! tile scratchpad round-trip to shared memory over the bus; blocks that
//! fit stay local, which is what the block-sequence accumulator buys.
//!
//! Attention-engine work is conserved exactly across block sizes: per-head
//! totals are computed once at full sequence geometry and apportioned over
//! block pairs by their MAC share with a cumulative floor rule, so the sums
//! match the single-block schedule cycle for cycle.

use serde::{Deserialize, Serialize};

use crate::cost::{
    nvm_write_cost, simd_mvm_cost, sram_mvm_cost, sram_write_cost, xbar_mvm_cost, Cost,
    CostBreakdown, CostTable,
};
use crate::error::{Error, Result};
use crate::hw::HardwareSpec;
use crate::mapping::{Mapping, Residency};
use crate::policy::{self, DynamicUnit, StationaryWrite};
use crate::schedule::Resource;
use crate::workload::{OpGraph, OpKind, OpRole, RUNNING_SUM_BYTES};

/// Report-level energy category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Projection,
    AttentionMvm,
    AttentionWrite,
    SfuAccum,
    Memory,
    Interconnect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub category: Category,
    pub breakdown: CostBreakdown,
}

/// What a segment does; used for runtime-share accounting and tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegKind {
    Embed,
    Replay,
    QkvGen,
    QkvXfer,
    Install,
    Score,
    ScoreSpill,
    Softmax,
    ProbSpill,
    Context,
    Accumulate,
    Finalize,
    OutXfer,
    OutProj,
    Norm,
    Ffn,
    Activation,
    Classifier,
}

impl SegKind {
    /// Dynamic-operand MVM work (score and context multiplies).
    pub fn is_dynamic_mvm(self) -> bool {
        matches!(self, SegKind::Score | SegKind::Context)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Segment {
    pub id: u32,
    pub resource: Resource,
    pub kind: SegKind,
    pub cycles: u64,
    pub deps: Vec<u32>,
    pub label: String,
    pub energy: Vec<Energy>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SegmentGraph {
    pub segments: Vec<Segment>,
    pub blocks: Vec<u32>,
    /// Largest in-flight score block per head, bytes.
    pub peak_score_block_bytes: u64,
    /// Running-output + normalizer state per head, bytes.
    pub accumulator_bytes: u64,
    /// Whether any score block exceeded the scratchpad and spilled.
    pub spilled: bool,
}

impl SegmentGraph {
    pub fn total_energy_pj(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| &s.energy)
            .map(|e| e.breakdown.total())
            .sum()
    }

    pub fn energy_by_category(&self) -> Vec<(Category, CostBreakdown)> {
        let mut cats: Vec<(Category, CostBreakdown)> = Vec::new();
        for seg in &self.segments {
            for e in &seg.energy {
                match cats.iter_mut().find(|(c, _)| *c == e.category) {
                    Some((_, b)) => b.add(&e.breakdown),
                    None => cats.push((e.category, e.breakdown)),
                }
            }
        }
        cats.sort_by_key(|(c, _)| *c);
        cats
    }
}

/// Splits `total` over `weights` proportionally with exact conservation:
/// entry k receives floor(total * W_k / W) - floor(total * W_{k-1} / W).
fn apportion(total: u64, weights: &[u64]) -> Vec<u64> {
    let wsum: u128 = weights.iter().map(|&w| w as u128).sum();
    if wsum == 0 {
        return vec![0; weights.len()];
    }
    let mut out = Vec::with_capacity(weights.len());
    let mut cum: u128 = 0;
    let mut prev: u64 = 0;
    for &w in weights {
        cum += w as u128;
        let cur = ((total as u128 * cum) / wsum) as u64;
        out.push(cur - prev);
        prev = cur;
    }
    out
}

struct Builder {
    segments: Vec<Segment>,
}

impl Builder {
    fn push(
        &mut self,
        resource: Resource,
        kind: SegKind,
        cycles: u64,
        deps: Vec<u32>,
        label: String,
        energy: Vec<Energy>,
    ) -> u32 {
        let id = self.segments.len() as u32;
        self.segments.push(Segment {
            id,
            resource,
            kind,
            cycles,
            deps,
            label,
            energy,
        });
        id
    }
}

fn energy(category: Category, breakdown: CostBreakdown) -> Energy {
    Energy {
        category,
        breakdown,
    }
}

fn mem_energy(scratch: f64, shared: f64, readonly: f64) -> Energy {
    energy(
        Category::Memory,
        CostBreakdown {
            memory: scratch + shared + readonly,
            ..Default::default()
        },
    )
}

/// Builds the segment graph for one inference pass over the given block
/// split. Blocks must tile the sequence exactly.
pub fn build_segments(
    graph: &OpGraph,
    mapping: &Mapping,
    hw: &HardwareSpec,
    table: &CostTable,
    blocks: &[u32],
) -> Result<SegmentGraph> {
    let model = &graph.model;
    model.validate()?;
    hw.validate()?;
    table.validate()?;
    if model.num_layers == 0 {
        return Ok(SegmentGraph::default());
    }
    let total: u32 = blocks.iter().sum();
    if total != model.seq_len || blocks.iter().any(|&b| b < 1) {
        return Err(Error::Schedule(format!(
            "blocks {blocks:?} do not tile sequence length {}",
            model.seq_len
        )));
    }
    // Every MVM node must be covered: static nodes by an allocation, dynamic
    // nodes by a head assignment (or the SIMD lanes).
    let pol = policy::from_kind(mapping.policy);
    for node in &graph.nodes {
        match node.kind {
            OpKind::MvmStatic if node.role != OpRole::Classifier => {
                if !mapping.static_allocs.iter().any(|a| a.node == node.id) {
                    return Err(Error::Schedule(format!(
                        "no crossbar allocation for static node {} ({:?})",
                        node.id, node.role
                    )));
                }
            }
            OpKind::MvmDynamic if pol.dynamic_unit() != DynamicUnit::SimdLanes => {
                let covered = mapping
                    .head_assignments
                    .iter()
                    .any(|h| Some(h.layer) == node.layer && Some(h.head) == node.head);
                if !covered {
                    return Err(Error::Schedule(format!(
                        "no head assignment for dynamic node {}",
                        node.id
                    )));
                }
            }
            _ => {}
        }
    }

    let sl = model.seq_len as u64;
    let hs = model.hidden_size as u64;
    let hss = model.head_size as u64;
    let ffn = model.ffn_mult as u64 * hs;
    let heads = model.num_heads as u64;
    let act_bits = model.bit_width_q as u64;
    let act_bytes = model.act_bytes();
    let score_bytes = model.score_bytes();
    let lanes = hw.attention.sfu_lanes();
    let bus_bw = hw.interconnect.bus_bytes_per_cycle;
    let e_bus = hw.interconnect.energy_per_byte_pj;
    let e_scr = table.e_scratchpad_byte_pj;
    let e_shm = table.e_shared_mem_byte_pj;
    let e_ro = table.e_readonly_byte_pj;
    let t_sfu = table.t_sfu_op_cycles;

    let slices_static = (model.bit_width_weights as u64).div_ceil(hw.projection.cell_bits as u64);
    let pv_qkv = xbar_mvm_cost(hs, hs, act_bits, slices_static, hw, table)?;
    let pv_ffn1 = xbar_mvm_cost(hs, ffn, act_bits, slices_static, hw, table)?;
    let pv_ffn2 = xbar_mvm_cost(ffn, hs, act_bits, slices_static, hw, table)?;

    // Dynamic MVM unit: per-vector cost at full-sequence geometry, the
    // timeline resource it occupies, and the head serialization factor.
    let (qk_pv, av_pv, dyn_res, serial_heads): (Cost, Cost, Resource, u64) =
        match pol.dynamic_unit() {
            DynamicUnit::SramAhct => {
                let slices = (model.bit_width_q as u64).div_ceil(hw.attention.cell_bits as u64);
                (
                    sram_mvm_cost(hss, sl, act_bits, slices, hw, table)?,
                    sram_mvm_cost(sl, hss, act_bits, slices, hw, table)?,
                    Resource::AttentionEngine,
                    mapping.time_mux_factor as u64,
                )
            }
            DynamicUnit::NvmXbar => {
                let slices = (model.bit_width_q as u64).div_ceil(hw.projection.cell_bits as u64);
                (
                    xbar_mvm_cost(hss, sl, act_bits, slices, hw, table)?,
                    xbar_mvm_cost(sl, hss, act_bits, slices, hw, table)?,
                    Resource::ProjectionEngine,
                    1,
                )
            }
            DynamicUnit::SimdLanes => (
                simd_mvm_cost(sl, hss, table)?,
                simd_mvm_cost(hss, sl, table)?,
                Resource::ProjectionEngine,
                heads,
            ),
        };

    let qk_engine_total = serial_heads * sl * qk_pv.cycles;
    let av_engine_total = serial_heads * sl * av_pv.cycles;
    let qk_energy_total = qk_pv.breakdown.scaled((sl * heads) as f64);
    let av_energy_total = av_pv.breakdown.scaled((sl * heads) as f64);

    let nb = blocks.len();
    let sb: Vec<u64> = blocks.iter().map(|&b| b as u64).collect();

    // Wave order: pair (i, j) becomes available when the later of blocks i
    // and j is delivered.
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(nb * nb);
    for m in 0..nb {
        for i in 0..=m {
            pairs.push((i, m));
        }
        for j in 0..m {
            pairs.push((m, j));
        }
    }
    let weights: Vec<u64> = pairs.iter().map(|&(i, j)| sb[i] * sb[j]).collect();
    let qk_cycles = apportion(qk_engine_total, &weights);
    let av_cycles = apportion(av_engine_total, &weights);
    let wsum: f64 = weights.iter().map(|&w| w as f64).sum();

    // Every family of decomposed work is cut from one conserved total, so
    // finer block splits never add cycles and the single-block schedule is
    // a hard upper bound (blocking overhead is charged to energy only).
    let sm_cycles_all = 5 * heads * sl * sl.div_ceil(lanes) * t_sfu;
    let sm_energy_all = (5 * heads * sl * sl) as f64 * table.e_sfu_op_pj;
    let acc_cycles_all = 2 * heads * sl * hss.div_ceil(lanes) * t_sfu;
    let acc_energy_all = (2 * heads * sl * hss) as f64 * table.e_sfu_op_pj;
    let sm_cycles = apportion(sm_cycles_all, &weights);
    let acc_cycles = apportion(acc_cycles_all, &weights);

    let qkv_xfer_cycles = apportion((3 * sl * hs * act_bytes).div_ceil(bus_bw), &sb);
    let out_xfer_cycles = apportion((sl * hs * act_bytes).div_ceil(bus_bw), &sb);

    // Spill traffic: blocks larger than the scratchpad round-trip through
    // shared memory. The spilling pairs share one conserved cycle budget.
    let spill_pair: Vec<bool> = pairs
        .iter()
        .map(|&(i, j)| {
            pol.spills_oversized_scores()
                && sb[i] * sb[j] * score_bytes > hw.projection.scratchpad_bytes
        })
        .collect();
    let spill_bytes: Vec<u64> = pairs
        .iter()
        .zip(&spill_pair)
        .map(|(&(i, j), &s)| if s { 2 * heads * sb[i] * sb[j] * score_bytes } else { 0 })
        .collect();
    let spill_total_bytes: u64 = spill_bytes.iter().sum();
    let spill_cycles = apportion(spill_total_bytes.div_ceil(bus_bw), &spill_bytes);

    let max_sb = *sb.iter().max().expect("at least one block");
    let peak_score_block_bytes = pairs
        .iter()
        .map(|&(i, j)| sb[i] * sb[j] * score_bytes)
        .max()
        .unwrap_or(0);
    let accumulator_bytes = hss * max_sb * act_bytes + max_sb * RUNNING_SUM_BYTES;

    let mut b = Builder {
        segments: Vec::new(),
    };
    let mut spilled_any = false;

    // Embedding rows stream from the read-only tiles into shared memory
    // once, ahead of the first layer.
    let embed_bytes = sl * hs * model.weight_bytes();
    let embed = b.push(
        Resource::Bus,
        SegKind::Embed,
        embed_bytes.div_ceil(bus_bw),
        vec![],
        "embed".into(),
        vec![
            energy(
                Category::Interconnect,
                CostBreakdown {
                    interconnect: embed_bytes as f64 * e_bus,
                    ..Default::default()
                },
            ),
            mem_energy(0.0, 0.0, embed_bytes as f64 * e_ro),
        ],
    );

    let layer_weight_cells: u64 = [(hs, hs), (hs, hs), (hs, hs), (hs, hs), (hs, ffn), (ffn, hs)]
        .iter()
        .map(|&(r, c)| r * c)
        .sum();

    let mut barrier: Vec<u32> = vec![embed];
    for layer in 0..model.num_layers {
        if mapping.residency == Residency::PerLayerReplay {
            let replay = match pol.stationary_write() {
                StationaryWrite::NvmProgram => {
                    // Refill the shared pool by reprogramming; all crossbars
                    // write their rows in parallel.
                    let rows = (hw.projection.xbar_rows as u64).min(ffn.max(hs));
                    let c = nvm_write_cost(rows, 1, 1, table)?;
                    let cells = layer_weight_cells * slices_static;
                    b.push(
                        Resource::ProjectionEngine,
                        SegKind::Replay,
                        c.cycles,
                        barrier.clone(),
                        format!("L{layer}.replay_program"),
                        vec![energy(
                            Category::Projection,
                            CostBreakdown {
                                write: cells as f64 * table.e_nvm_write_cell_pj,
                                ..Default::default()
                            },
                        )],
                    )
                }
                _ => {
                    // Layer weights stage in from dense storage as a DMA
                    // interval on the projection engine; no endurance cost.
                    let bytes = layer_weight_cells * model.weight_bytes();
                    b.push(
                        Resource::ProjectionEngine,
                        SegKind::Replay,
                        bytes.div_ceil(bus_bw),
                        barrier.clone(),
                        format!("L{layer}.replay_dma"),
                        vec![mem_energy(0.0, 0.0, bytes as f64 * e_ro)],
                    )
                }
            };
            barrier = vec![replay];
        }

        // Per-block projection of Q, K, V (three matrices in parallel on
        // disjoint crossbars), transfer, and stationary install.
        let mut xfer_done: Vec<u32> = Vec::with_capacity(nb);
        let mut install_done: Vec<u32> = Vec::with_capacity(nb);
        for (bi, &n) in sb.iter().enumerate() {
            let p = b.push(
                Resource::ProjectionEngine,
                SegKind::QkvGen,
                n * pv_qkv.cycles,
                barrier.clone(),
                format!("L{layer}.qkv[b{bi}]"),
                vec![
                    energy(Category::Projection, pv_qkv.breakdown.scaled((3 * n) as f64)),
                    mem_energy(
                        (n * 4 * hs * act_bytes) as f64 * e_scr,
                        (n * hs * act_bytes) as f64 * e_shm,
                        0.0,
                    ),
                ],
            );
            let bytes = 3 * n * hs * act_bytes;
            let x = b.push(
                Resource::Bus,
                SegKind::QkvXfer,
                qkv_xfer_cycles[bi],
                vec![p],
                format!("L{layer}.qkv_xfer[b{bi}]"),
                vec![energy(
                    Category::Interconnect,
                    CostBreakdown {
                        interconnect: bytes as f64 * e_bus,
                        ..Default::default()
                    },
                )],
            );
            xfer_done.push(x);
            let w = match pol.stationary_write() {
                StationaryWrite::SramBanks => {
                    let c = sram_write_cost(2 * n, hss, act_bits, table)?;
                    b.push(
                        Resource::AttentionEngine,
                        SegKind::Install,
                        mapping.time_mux_factor as u64 * c.cycles,
                        vec![x],
                        format!("L{layer}.qv_install[b{bi}]"),
                        vec![energy(
                            Category::AttentionWrite,
                            c.breakdown.scaled(heads as f64),
                        )],
                    )
                }
                StationaryWrite::NvmProgram => {
                    let slices = (model.bit_width_q as u64).div_ceil(hw.projection.cell_bits as u64);
                    let c = nvm_write_cost(2 * n, hss, slices, table)?;
                    b.push(
                        Resource::ProjectionEngine,
                        SegKind::Install,
                        c.cycles,
                        vec![x],
                        format!("L{layer}.qv_install[b{bi}]"),
                        vec![energy(
                            Category::AttentionWrite,
                            c.breakdown.scaled(heads as f64),
                        )],
                    )
                }
                StationaryWrite::None => x,
            };
            install_done.push(w);
        }

        // Block-pair attention with running-softmax accumulation. Updates
        // for one query block are chained so the running statistics stay
        // ordered.
        let mut sm_chain: Vec<Option<u32>> = vec![None; nb];
        let mut acc_chain: Vec<Option<u32>> = vec![None; nb];
        for (p_idx, &(i, j)) in pairs.iter().enumerate() {
            let frac = weights[p_idx] as f64 / wsum;
            let spill = spill_pair[p_idx];
            spilled_any |= spill;

            let qk_deps = match pol.dynamic_unit() {
                DynamicUnit::SimdLanes => vec![xfer_done[i], xfer_done[j]],
                _ => vec![install_done[i], xfer_done[j]],
            };
            let qk_scratch =
                (heads * (sb[j] * hss * act_bytes + sb[i] * sb[j] * score_bytes)) as f64 * e_scr;
            let qk = b.push(
                dyn_res,
                SegKind::Score,
                qk_cycles[p_idx],
                qk_deps,
                format!("L{layer}.score[{i},{j}]"),
                vec![
                    energy(Category::AttentionMvm, qk_energy_total.scaled(frac)),
                    mem_energy(qk_scratch, 0.0, 0.0),
                ],
            );

            let sm_input = if spill {
                let bytes = spill_bytes[p_idx];
                b.push(
                    Resource::Bus,
                    SegKind::ScoreSpill,
                    spill_cycles[p_idx],
                    vec![qk],
                    format!("L{layer}.score_spill[{i},{j}]"),
                    vec![
                        energy(
                            Category::Interconnect,
                            CostBreakdown {
                                interconnect: bytes as f64 * e_bus,
                                ..Default::default()
                            },
                        ),
                        mem_energy(0.0, bytes as f64 * e_shm, 0.0),
                    ],
                )
            } else {
                qk
            };

            let mut sm_deps = vec![sm_input];
            if let Some(prev) = sm_chain[i] {
                sm_deps.push(prev);
            }
            let sm = b.push(
                Resource::Sfu,
                SegKind::Softmax,
                sm_cycles[p_idx],
                sm_deps,
                format!("L{layer}.softmax[{i},{j}]"),
                vec![energy(
                    Category::SfuAccum,
                    CostBreakdown {
                        sfu: sm_energy_all * frac,
                        ..Default::default()
                    },
                )],
            );
            sm_chain[i] = Some(sm);

            let av_input = if spill {
                let bytes = spill_bytes[p_idx];
                b.push(
                    Resource::Bus,
                    SegKind::ProbSpill,
                    spill_cycles[p_idx],
                    vec![sm],
                    format!("L{layer}.prob_spill[{i},{j}]"),
                    vec![
                        energy(
                            Category::Interconnect,
                            CostBreakdown {
                                interconnect: bytes as f64 * e_bus,
                                ..Default::default()
                            },
                        ),
                        mem_energy(0.0, bytes as f64 * e_shm, 0.0),
                    ],
                )
            } else {
                sm
            };

            let mut av_deps = vec![av_input];
            if pol.dynamic_unit() != DynamicUnit::SimdLanes {
                av_deps.push(install_done[j]);
            }
            let av_scratch =
                (heads * (sb[i] * sb[j] * score_bytes + sb[i] * hss * act_bytes)) as f64 * e_scr;
            let av = b.push(
                dyn_res,
                SegKind::Context,
                av_cycles[p_idx],
                av_deps,
                format!("L{layer}.context[{i},{j}]"),
                vec![
                    energy(Category::AttentionMvm, av_energy_total.scaled(frac)),
                    mem_energy(av_scratch, 0.0, 0.0),
                ],
            );

            let mut acc_deps = vec![av];
            if let Some(prev) = acc_chain[i] {
                acc_deps.push(prev);
            }
            let acc = b.push(
                Resource::Sfu,
                SegKind::Accumulate,
                acc_cycles[p_idx],
                acc_deps,
                format!("L{layer}.accumulate[{i},{j}]"),
                vec![
                    energy(
                        Category::SfuAccum,
                        CostBreakdown {
                            sfu: acc_energy_all * frac,
                            ..Default::default()
                        },
                    ),
                    mem_energy((2 * heads * sb[i] * hss * act_bytes) as f64 * e_scr, 0.0, 0.0),
                ],
            );
            acc_chain[i] = Some(acc);
        }

        // Per query block: final normalization, transfer back, output
        // projection and feed-forward chain.
        let mut layer_done: Vec<u32> = Vec::with_capacity(nb);
        for (i, &n) in sb.iter().enumerate() {
            let fin = b.push(
                Resource::Sfu,
                SegKind::Finalize,
                heads * n * (2 * hss.div_ceil(lanes) + 1) * t_sfu,
                vec![acc_chain[i].expect("every block has pairs")],
                format!("L{layer}.finalize[b{i}]"),
                vec![energy(
                    Category::SfuAccum,
                    CostBreakdown {
                        sfu: (heads * n * (2 * hss + 1)) as f64 * table.e_sfu_op_pj,
                        ..Default::default()
                    },
                )],
            );
            let bytes = n * hs * act_bytes;
            let ox = b.push(
                Resource::Bus,
                SegKind::OutXfer,
                out_xfer_cycles[i],
                vec![fin],
                format!("L{layer}.attn_out_xfer[b{i}]"),
                vec![
                    energy(
                        Category::Interconnect,
                        CostBreakdown {
                            interconnect: bytes as f64 * e_bus,
                            ..Default::default()
                        },
                    ),
                    mem_energy(0.0, bytes as f64 * e_shm, 0.0),
                ],
            );
            let oproj = b.push(
                Resource::ProjectionEngine,
                SegKind::OutProj,
                n * pv_qkv.cycles,
                vec![ox],
                format!("L{layer}.out_proj[b{i}]"),
                vec![
                    energy(Category::Projection, pv_qkv.breakdown.scaled(n as f64)),
                    mem_energy((n * 2 * hs * act_bytes) as f64 * e_scr, 0.0, 0.0),
                ],
            );
            let ln1 = b.push(
                Resource::Sfu,
                SegKind::Norm,
                6 * n * hs.div_ceil(lanes) * t_sfu,
                vec![oproj],
                format!("L{layer}.norm1[b{i}]"),
                vec![energy(
                    Category::SfuAccum,
                    CostBreakdown {
                        sfu: (6 * n * hs) as f64 * table.e_sfu_op_pj,
                        ..Default::default()
                    },
                )],
            );
            let ffn1 = b.push(
                Resource::ProjectionEngine,
                SegKind::Ffn,
                n * pv_ffn1.cycles,
                vec![ln1],
                format!("L{layer}.ffn1[b{i}]"),
                vec![
                    energy(Category::Projection, pv_ffn1.breakdown.scaled(n as f64)),
                    mem_energy((n * (hs + ffn) * act_bytes) as f64 * e_scr, 0.0, 0.0),
                ],
            );
            let act = b.push(
                Resource::Sfu,
                SegKind::Activation,
                4 * n * ffn.div_ceil(lanes) * t_sfu,
                vec![ffn1],
                format!("L{layer}.activation[b{i}]"),
                vec![energy(
                    Category::SfuAccum,
                    CostBreakdown {
                        sfu: (4 * n * ffn) as f64 * table.e_sfu_op_pj,
                        ..Default::default()
                    },
                )],
            );
            let ffn2 = b.push(
                Resource::ProjectionEngine,
                SegKind::Ffn,
                n * pv_ffn2.cycles,
                vec![act],
                format!("L{layer}.ffn2[b{i}]"),
                vec![
                    energy(Category::Projection, pv_ffn2.breakdown.scaled(n as f64)),
                    mem_energy((n * (ffn + hs) * act_bytes) as f64 * e_scr, 0.0, 0.0),
                ],
            );
            let ln2 = b.push(
                Resource::Sfu,
                SegKind::Norm,
                6 * n * hs.div_ceil(lanes) * t_sfu,
                vec![ffn2],
                format!("L{layer}.norm2[b{i}]"),
                vec![
                    energy(
                        Category::SfuAccum,
                        CostBreakdown {
                            sfu: (6 * n * hs) as f64 * table.e_sfu_op_pj,
                            ..Default::default()
                        },
                    ),
                    mem_energy(0.0, (n * hs * act_bytes) as f64 * e_shm, 0.0),
                ],
            );
            layer_done.push(ln2);
        }
        barrier = layer_done;
    }

    // Task head on the pooled token, executed on the projection-side vector
    // lanes out of read-only weight storage.
    let cls = simd_mvm_cost(2, hs, table)?;
    let cls_bytes = hs * 2 * model.weight_bytes();
    b.push(
        Resource::ProjectionEngine,
        SegKind::Classifier,
        cls.cycles,
        barrier,
        "classifier".into(),
        vec![
            energy(Category::Projection, cls.breakdown),
            mem_energy(0.0, 0.0, cls_bytes as f64 * e_ro),
        ],
    );

    Ok(SegmentGraph {
        segments: b.segments,
        blocks: blocks.to_vec(),
        peak_score_block_bytes,
        accumulator_bytes,
        spilled: spilled_any,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportion_conserves_total() {
        let cases: [(u64, Vec<u64>); 4] = [
            (1000, vec![1, 1, 1, 1]),
            (7, vec![3, 5, 9]),
            (205_312, vec![64 * 64; 64]),
            (12345, vec![64 * 64, 64 * 36, 36 * 64, 36 * 36]),
        ];
        for (total, weights) in cases {
            let parts = apportion(total, &weights);
            assert_eq!(parts.iter().sum::<u64>(), total);
            assert_eq!(parts.len(), weights.len());
        }
    }

    #[test]
    fn apportion_single_weight_is_identity() {
        assert_eq!(apportion(424_242, &[17]), vec![424_242]);
    }
}
