//! Report serialization: versioned JSON and the frozen-column CSV used by
//! downstream plot scripts.

use std::io::Write;

use imcsim::mapping::Lifetime;
use imcsim::sim::{Report, SweepPoint};

/// CSV columns, frozen; append-only across schema versions.
pub const CSV_COLUMNS: &[&str] = &[
    "schema_version",
    "axis",
    "value",
    "status",
    "error",
    "policy",
    "dataflow",
    "total_cycles",
    "latency_s",
    "total_energy_j",
    "dynamic_energy_j",
    "static_energy_j",
    "projection_j",
    "attention_mvm_j",
    "attention_write_j",
    "sfu_accum_j",
    "memory_j",
    "interconnect_j",
    "util_projection",
    "util_attention",
    "util_bus",
    "util_sfu",
    "peak_score_buffer_bytes",
    "accumulator_bytes",
    "nvm_write_events",
    "lifetime_inferences",
    "tops_per_watt",
    "dynamic_runtime_share",
    "total_flops",
    "model_hash",
    "hardware_hash",
    "cost_table_hash",
];

fn f(v: f64) -> String {
    format!("{v}")
}

fn report_row(point: &SweepPoint) -> Vec<String> {
    let mut row = vec![
        String::new(),
        point.axis.clone(),
        point.value.clone(),
        String::new(),
        String::new(),
    ];
    match &point.report {
        Ok(r) => {
            row[0] = r.schema_version.to_string();
            row[3] = "ok".into();
            let b = &r.energy_breakdown_j;
            row.extend([
                r.config.policy.clone(),
                r.config.dataflow.clone(),
                r.total_cycles.to_string(),
                f(r.latency_s),
                f(r.total_energy_j),
                f(r.dynamic_energy_j),
                f(r.static_energy_j),
                f(b.projection),
                f(b.attention_mvm),
                f(b.attention_write),
                f(b.sfu_accum),
                f(b.memory),
                f(b.interconnect),
                f(r.utilization.projection),
                f(r.utilization.attention),
                f(r.utilization.bus),
                f(r.utilization.sfu),
                r.peak_score_buffer_bytes_per_head.to_string(),
                r.accumulator_bytes_per_head.to_string(),
                r.nvm_write_events_per_inference.to_string(),
                match r.lifetime {
                    Lifetime::Unbounded => "unbounded".into(),
                    Lifetime::Bounded { inferences } => f(inferences),
                },
                r.tops_per_watt.map(f).unwrap_or_default(),
                f(r.dynamic_runtime_share),
                r.total_flops.to_string(),
                r.config.model_hash.clone(),
                r.config.hardware_hash.clone(),
                r.config.cost_table_hash.clone(),
            ]);
        }
        Err(e) => {
            row[3] = "error".into();
            row[4] = e.clone();
            row.resize(CSV_COLUMNS.len(), String::new());
        }
    }
    debug_assert_eq!(row.len(), CSV_COLUMNS.len());
    row
}

pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], w: W) -> anyhow::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_COLUMNS)?;
    for p in points {
        wtr.write_record(report_row(p))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn report_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}
