//! Shared helpers for integration tests: randomized small instances and
//! timeline comparison.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use imcsim::cost::CostTable;
use imcsim::hw::HardwareSpec;
use imcsim::mapping::{map_model, Mapping, MappingOptions, ResidencyRequest};
use imcsim::policy::{self, PolicyKind};
use imcsim::schedule::Timeline;
use imcsim::workload::{build_op_graph, ModelSpec, OpGraph};

pub struct Instance {
    pub model: ModelSpec,
    pub hw: HardwareSpec,
    pub table: CostTable,
    pub mapping: Mapping,
    pub graph: OpGraph,
    pub blocks: Vec<u32>,
    pub policy: PolicyKind,
}

/// Small random instance: <= 4 layers, <= 4 heads, SL <= 32, unit-scale
/// random costs, random policy/residency/block split.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let layers = rng.gen_range(1..=4);
    let heads = rng.gen_range(1..=4u32);
    let hss = *[2u32, 4, 8].get(rng.gen_range(0..3)).unwrap();
    let sl = rng.gen_range(1..=32u32);
    let act_bits = *[2u32, 4, 8].get(rng.gen_range(0..3)).unwrap();
    let weight_bits = *[2u32, 4, 8].get(rng.gen_range(0..3)).unwrap();
    let model = ModelSpec {
        num_layers: layers,
        num_heads: heads,
        hidden_size: heads * hss,
        head_size: hss,
        seq_len: sl,
        batch: 1,
        ffn_mult: rng.gen_range(1..=4),
        bit_width_weights: weight_bits,
        bit_width_q: act_bits,
        bit_width_k: act_bits,
        bit_width_v: act_bits,
        vocab_size: rng.gen_range(1..=64),
    };

    let mut hw = HardwareSpec::default();
    hw.projection.num_tiles = rng.gen_range(1..=4);
    hw.projection.cores_per_tile = rng.gen_range(1..=4);
    hw.projection.crossbars_per_core = rng.gen_range(1..=4);
    hw.projection.xbar_rows = *[2u32, 4, 8, 16].get(rng.gen_range(0..4)).unwrap();
    hw.projection.xbar_cols = *[2u32, 4, 8, 16].get(rng.gen_range(0..4)).unwrap();
    hw.projection.cell_bits = if weight_bits >= 2 && rng.gen_bool(0.5) { 2 } else { 1 };
    hw.projection.dac_bits = if act_bits >= 2 && rng.gen_bool(0.5) { 2 } else { 1 };
    hw.projection.adcs_per_xbar = rng.gen_range(1..=2);
    hw.projection.adc_rate_sps =
        *[500_000_000u64, 1_000_000_000, 1_280_000_000, 2_000_000_000]
            .get(rng.gen_range(0..4))
            .unwrap();
    hw.projection.scratchpad_bytes = *[2u64, 16, 4096].get(rng.gen_range(0..3)).unwrap();
    hw.attention.num_pe = 1;
    hw.attention.ahct_per_pe = rng.gen_range(1..=4);
    hw.attention.sram_rows = *[4u32, 8, 16].get(rng.gen_range(0..3)).unwrap();
    hw.attention.sram_cols = *[4u32, 8, 16].get(rng.gen_range(0..3)).unwrap();
    hw.attention.sram_arrays_per_bank = rng.gen_range(1..=4);
    hw.attention.dac_bits = hw.projection.dac_bits;
    hw.attention.adcs_per_array = rng.gen_range(1..=2);
    hw.attention.adc_rate_sps = hw.projection.adc_rate_sps;
    hw.attention.sfu_vector_units = rng.gen_range(1..=4);
    hw.attention.sfu_lanes_per_vu = rng.gen_range(1..=4);
    // Size the banks so Q/V residency always fits.
    let need_bits = (hss as u64) * (sl as u64) * (2 * act_bits as u64);
    let per_bank = (hw.attention.sram_arrays_per_bank as u64)
        * (hw.attention.sram_rows as u64)
        * (hw.attention.sram_cols as u64);
    hw.attention.banks_per_ahct = need_bits.div_ceil(per_bank).max(1) as u32;
    hw.interconnect.bus_bytes_per_cycle = rng.gen_range(1..=8);

    let mut table = CostTable::default();
    table.t_xbar_settle_cycles = rng.gen_range(1..=4);
    table.t_sram_access_cycles = rng.gen_range(1..=4);
    table.t_sfu_op_cycles = rng.gen_range(1..=4);
    table.t_write_row_cycles = rng.gen_range(1..=4);
    table.t_nvm_write_row_cycles = rng.gen_range(1..=8);
    table.simd_lanes = rng.gen_range(1..=64);
    table.simd_ops_per_cycle = *[0.25f64, 0.5, 1.0].get(rng.gen_range(0..3)).unwrap();

    let policy = match rng.gen_range(0..3) {
        0 => PolicyKind::Hybrid,
        1 => PolicyKind::NvmAll,
        _ => PolicyKind::SimdDynamic,
    };
    let residency = match rng.gen_range(0..3) {
        0 => ResidencyRequest::Spatial,
        1 => ResidencyRequest::PerLayerReplay,
        _ => ResidencyRequest::Auto,
    };

    let graph = build_op_graph(&model).expect("valid random model");
    let pol = policy::from_kind(policy);
    let mapping = map_model(
        &hw,
        &graph,
        pol.as_ref(),
        MappingOptions {
            residency,
            allow_tile_scaling: true,
        },
    )
    .expect("scaled mapping always fits");

    // Keep the block count bounded so the plain oracle stays fast.
    let nb_target = *[1usize, 2, 3, 4, 6, 8].get(rng.gen_range(0..6)).unwrap();
    let block = (sl as usize).div_ceil(nb_target).max(1) as u32;
    let blocks = split_blocks(sl, block);

    Instance {
        model,
        hw,
        table,
        mapping,
        graph,
        blocks,
        policy,
    }
}

pub fn split_blocks(seq_len: u32, block: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut rem = seq_len;
    while rem > 0 {
        let b = rem.min(block);
        out.push(b);
        rem -= b;
    }
    out
}

/// Collapses a timeline into comparable (segment, resource, start, end)
/// tuples ordered by segment id.
pub fn placements(t: &Timeline) -> Vec<(u32, &'static str, u64, u64)> {
    let mut v: Vec<_> = t
        .intervals
        .iter()
        .map(|iv| (iv.segment, iv.resource.name(), iv.start, iv.end))
        .collect();
    v.sort();
    v
}
