//! Scheduler structure and property tests: strict phase serialization in
//! the single-block dataflow, work conservation across block sizes,
//! pipeline bounds, and executor/oracle agreement.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{placements, random_instance, split_blocks};
use imcsim::cost::CostTable;
use imcsim::hw::HardwareSpec;
use imcsim::mapping::{map_model, MappingOptions, Residency, ResidencyRequest};
use imcsim::policy;
use imcsim::presets;
use imcsim::schedule::segments::{build_segments, SegKind};
use imcsim::schedule::{executor, oracle, Resource};
use imcsim::workload::build_op_graph;

/// Tiny fully-pinned configuration used for hand-checked schedules.
fn tiny_setup() -> (imcsim::workload::OpGraph, HardwareSpec, CostTable) {
    let model = imcsim::workload::ModelSpec {
        num_layers: 1,
        num_heads: 1,
        hidden_size: 4,
        head_size: 4,
        seq_len: 4,
        batch: 1,
        ffn_mult: 4,
        bit_width_weights: 2,
        bit_width_q: 2,
        bit_width_k: 2,
        bit_width_v: 2,
        vocab_size: 4,
    };
    let mut hw = HardwareSpec::default();
    hw.projection.xbar_rows = 4;
    hw.projection.xbar_cols = 4;
    hw.projection.cell_bits = 2;
    hw.projection.dac_bits = 1;
    hw.projection.adcs_per_xbar = 1;
    hw.projection.adc_rate_sps = hw.frequency_hz;
    hw.attention.sram_rows = 4;
    hw.attention.sram_cols = 4;
    hw.attention.adcs_per_array = 1;
    hw.attention.adc_rate_sps = hw.frequency_hz;
    hw.attention.sfu_vector_units = 16;
    hw.attention.sfu_lanes_per_vu = 4;
    hw.interconnect.bus_bytes_per_cycle = 16;
    let mut table = CostTable::default();
    table.t_xbar_settle_cycles = 1;
    table.t_sram_access_cycles = 1;
    table.t_sfu_op_cycles = 1;
    table.t_write_row_cycles = 1;
    table.simd_lanes = 8;
    table.simd_ops_per_cycle = 1.0;
    let graph = build_op_graph(&model).unwrap();
    (graph, hw, table)
}

#[test]
fn tiny_single_block_schedule_is_hand_checkable() {
    let (graph, hw, table) = tiny_setup();
    let pol = policy::lookup("hybrid").unwrap();
    let mapping = map_model(&hw, &graph, pol.as_ref(), MappingOptions::default()).unwrap();
    let segs = build_segments(&graph, &mapping, &hw, &table, &[4]).unwrap();
    let t = executor::execute(&segs).unwrap();
    t.validate(&segs).unwrap();

    // Hand-enumerated chain, duration per segment:
    //   embed 16B/16 = 1; qkv 4 x (2 streams x 4 conv + 1) = 36; xfer 48B/16 = 3;
    //   install 2x4 rows = 8; score 4 x (2x4+1) = 36; softmax 5x4x1 = 20;
    //   context 36; accumulate 2x4x1 = 8; finalize 4x(2+1) = 12; out 16B/16 = 1;
    //   out_proj 36; norm1 6x4 = 24; ffn1 36; activation 4x4 = 16; ffn2 36;
    //   norm2 24; classifier ceil(8/8) = 1.
    let expected = [
        ("embed", 1),
        ("L0.qkv[b0]", 36),
        ("L0.qkv_xfer[b0]", 3),
        ("L0.qv_install[b0]", 8),
        ("L0.score[0,0]", 36),
        ("L0.softmax[0,0]", 20),
        ("L0.context[0,0]", 36),
        ("L0.accumulate[0,0]", 8),
        ("L0.finalize[b0]", 12),
        ("L0.attn_out_xfer[b0]", 1),
        ("L0.out_proj[b0]", 36),
        ("L0.norm1[b0]", 24),
        ("L0.ffn1[b0]", 36),
        ("L0.activation[b0]", 16),
        ("L0.ffn2[b0]", 36),
        ("L0.norm2[b0]", 24),
        ("classifier", 1),
    ];
    assert_eq!(t.intervals.len(), expected.len());
    let mut clock = 0u64;
    for (iv, (label, dur)) in t.intervals.iter().zip(expected) {
        assert_eq!(iv.op, label);
        assert_eq!(iv.start, clock, "{label} start");
        assert_eq!(iv.end - iv.start, dur, "{label} duration");
        clock = iv.end;
    }
    assert_eq!(t.total_cycles, clock);

    // The same instance through the discrete-event oracle, cycle for cycle.
    let o = oracle::execute(&segs).unwrap();
    assert_eq!(placements(&t), placements(&o));
}

#[test]
fn single_block_engines_never_overlap() {
    let (graph, hw, table) = tiny_setup();
    let pol = policy::lookup("hybrid").unwrap();
    let mapping = map_model(&hw, &graph, pol.as_ref(), MappingOptions::default()).unwrap();
    let segs = build_segments(&graph, &mapping, &hw, &table, &[4]).unwrap();
    let t = executor::execute(&segs).unwrap();
    let proj: Vec<_> = t
        .intervals
        .iter()
        .filter(|iv| iv.resource == Resource::ProjectionEngine)
        .collect();
    let attn: Vec<_> = t
        .intervals
        .iter()
        .filter(|iv| iv.resource == Resource::AttentionEngine)
        .collect();
    for p in &proj {
        for a in &attn {
            assert!(
                p.end <= a.start || a.end <= p.start,
                "projection {} overlaps attention {}",
                p.op,
                a.op
            );
        }
    }
    let util = t.utilization();
    let eps = 1e-9;
    assert!(util[0] + util[1] <= 1.0 + eps);
    assert!(util[1] < 1.0);
}

#[test]
fn attention_busy_cycles_conserved_across_block_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..40 {
        let inst = random_instance(&mut rng);
        let single = build_segments(
            &inst.graph,
            &inst.mapping,
            &inst.hw,
            &inst.table,
            &[inst.model.seq_len],
        )
        .unwrap();
        let blocked =
            build_segments(&inst.graph, &inst.mapping, &inst.hw, &inst.table, &inst.blocks)
                .unwrap();
        let busy = |g: &imcsim::schedule::SegmentGraph, r: Resource| -> u64 {
            g.segments
                .iter()
                .filter(|s| s.resource == r)
                .map(|s| s.cycles)
                .sum()
        };
        // Dynamic MVM + install work is apportioned, never regenerated.
        let dyn_cycles = |g: &imcsim::schedule::SegmentGraph| -> u64 {
            g.segments
                .iter()
                .filter(|s| s.kind.is_dynamic_mvm() || s.kind == SegKind::Install)
                .map(|s| s.cycles)
                .sum()
        };
        assert_eq!(dyn_cycles(&single), dyn_cycles(&blocked));
        assert_eq!(
            busy(&single, Resource::AttentionEngine),
            busy(&blocked, Resource::AttentionEngine),
        );
        // Projection MVM work is block-count invariant too.
        let proj_mvm = |g: &imcsim::schedule::SegmentGraph| -> u64 {
            g.segments
                .iter()
                .filter(|s| {
                    matches!(s.kind, SegKind::QkvGen | SegKind::OutProj | SegKind::Ffn)
                })
                .map(|s| s.cycles)
                .sum()
        };
        assert_eq!(proj_mvm(&single), proj_mvm(&blocked));
    }
}

#[test]
fn pipeline_bounds_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..40 {
        let inst = random_instance(&mut rng);
        let single = build_segments(
            &inst.graph,
            &inst.mapping,
            &inst.hw,
            &inst.table,
            &[inst.model.seq_len],
        )
        .unwrap();
        let blocked =
            build_segments(&inst.graph, &inst.mapping, &inst.hw, &inst.table, &inst.blocks)
                .unwrap();
        let t_single = executor::execute(&single).unwrap();
        let t_blocked = executor::execute(&blocked).unwrap();
        assert!(
            t_blocked.total_cycles <= t_single.total_cycles,
            "blocked {} > single {}",
            t_blocked.total_cycles,
            t_single.total_cycles
        );
        let lower = t_blocked
            .busy(Resource::ProjectionEngine)
            .max(t_blocked.busy(Resource::AttentionEngine));
        assert!(t_blocked.total_cycles >= lower);
    }
}

#[test]
fn degenerate_block_identical_to_single_block() {
    let mut rng = ChaCha8Rng::seed_from_u64(4096);
    for _ in 0..20 {
        let inst = random_instance(&mut rng);
        let sl = inst.model.seq_len;
        let a = build_segments(&inst.graph, &inst.mapping, &inst.hw, &inst.table, &[sl]).unwrap();
        let b = build_segments(
            &inst.graph,
            &inst.mapping,
            &inst.hw,
            &inst.table,
            &split_blocks(sl, sl),
        )
        .unwrap();
        let ta = executor::execute(&a).unwrap();
        let tb = executor::execute(&b).unwrap();
        assert_eq!(placements(&ta), placements(&tb));
        assert_eq!(ta.total_cycles, tb.total_cycles);
    }
}

#[test]
fn executor_matches_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(31337);
    for i in 0..60 {
        let inst = random_instance(&mut rng);
        let segs =
            build_segments(&inst.graph, &inst.mapping, &inst.hw, &inst.table, &inst.blocks)
                .unwrap();
        let fast = executor::execute(&segs).unwrap();
        let slow = oracle::execute(&segs).unwrap();
        assert_eq!(
            placements(&fast),
            placements(&slow),
            "instance {i}: policy {:?}, blocks {:?}",
            inst.policy,
            inst.blocks
        );
        fast.validate(&segs).unwrap();
        assert_eq!(fast.total_cycles, slow.total_cycles);
    }
}

#[test]
fn replay_residency_inserts_projection_intervals() {
    let graph = build_op_graph(&presets::bert_base(128)).unwrap();
    let hw = presets::table1_hw();
    let table = presets::default_cost_table();
    for (policy, expect_label) in [("hybrid", "replay_dma"), ("nvm-all", "replay_program")] {
        let pol = policy::lookup(policy).unwrap();
        let mapping = map_model(
            &hw,
            &graph,
            pol.as_ref(),
            MappingOptions {
                residency: ResidencyRequest::PerLayerReplay,
                allow_tile_scaling: true,
            },
        )
        .unwrap();
        assert_eq!(mapping.residency, Residency::PerLayerReplay);
        let segs = build_segments(&graph, &mapping, &hw, &table, &[128]).unwrap();
        let replays: Vec<_> = segs
            .segments
            .iter()
            .filter(|s| s.kind == SegKind::Replay)
            .collect();
        assert_eq!(replays.len(), 12, "{policy}");
        for r in &replays {
            assert_eq!(r.resource, Resource::ProjectionEngine);
            assert!(r.label.contains(expect_label));
        }
    }
}

#[test]
fn blocked_run_improves_utilization_at_reference_scale() {
    let graph = build_op_graph(&presets::bert_base(512)).unwrap();
    let hw = presets::table1_hw();
    let table = presets::default_cost_table();
    let pol = policy::lookup("hybrid").unwrap();
    let mapping = map_model(&hw, &graph, pol.as_ref(), MappingOptions::default()).unwrap();

    let single = build_segments(&graph, &mapping, &hw, &table, &[512]).unwrap();
    let blocked = build_segments(&graph, &mapping, &hw, &table, &split_blocks(512, 64)).unwrap();
    let t_single = executor::execute(&single).unwrap();
    let t_blocked = executor::execute(&blocked).unwrap();

    assert!(t_blocked.total_cycles < t_single.total_cycles);
    let u_single = t_single.utilization();
    let u_blocked = t_blocked.utilization();
    assert!(u_blocked[0] > u_single[0], "projection utilization");
    assert!(u_blocked[1] > u_single[1], "attention utilization");
    // Single-block keeps scores spilling; 64-token blocks stay local.
    assert!(single.spilled);
    assert!(!blocked.spilled);
}

#[test]
fn trace_is_json_lines() {
    let (graph, hw, table) = tiny_setup();
    let pol = policy::lookup("hybrid").unwrap();
    let mapping = map_model(&hw, &graph, pol.as_ref(), MappingOptions::default()).unwrap();
    let segs = build_segments(&graph, &mapping, &hw, &table, &[4]).unwrap();
    let t = executor::execute(&segs).unwrap();
    let mut buf = Vec::new();
    t.write_trace(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), t.intervals.len());
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("resource").is_some() && v.get("start").is_some());
    }
}
