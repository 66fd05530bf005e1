//! Dataflow scheduling: per-resource timelines for the phase-serial
//! dataflow and the pipelined sequence-blocking dataflow.
//!
//! Both dataflows share one segment-graph generator ([`segments`]); the
//! phase-serial schedule is the degenerate single-block case, which makes
//! the block-size-equals-sequence-length identity exact by construction.
//! Two independent executors place the segments: the production list
//! scheduler ([`executor`]) and a deliberately plain time-stepped oracle
//! ([`oracle`]). Both implement the same greedy discipline: at any instant,
//! each free resource starts the lowest-id ready segment.

pub mod dataflow;
pub mod executor;
pub mod oracle;
pub mod segments;

use serde::{Deserialize, Serialize};

use crate::cost::CostTable;
use crate::error::{Error, Result};
use crate::hw::HardwareSpec;
use crate::mapping::Mapping;
use crate::workload::OpGraph;

pub use dataflow::{Dataflow, DataflowConfig, SequenceBlocking, Traditional};
pub use segments::{Category, Segment, SegmentGraph};

/// Hardware resources tracked in a timeline. Each holds one segment at a
/// time; concurrency across head tiles is folded into segment durations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resource {
    ProjectionEngine,
    AttentionEngine,
    Bus,
    Sfu,
}

pub const RESOURCES: [Resource; 4] = [
    Resource::ProjectionEngine,
    Resource::AttentionEngine,
    Resource::Bus,
    Resource::Sfu,
];

impl Resource {
    pub fn index(self) -> usize {
        match self {
            Resource::ProjectionEngine => 0,
            Resource::AttentionEngine => 1,
            Resource::Bus => 2,
            Resource::Sfu => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Resource::ProjectionEngine => "projection_engine",
            Resource::AttentionEngine => "attention_engine",
            Resource::Bus => "bus",
            Resource::Sfu => "sfu",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub resource: Resource,
    pub start: u64,
    pub end: u64,
    pub op: String,
    pub segment: u32,
}

/// Scheduled busy intervals per resource.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timeline {
    pub intervals: Vec<Interval>,
    pub total_cycles: u64,
    /// Busy cycles per resource, indexed by [`Resource::index`].
    pub busy_cycles: [u64; 4],
}

impl Timeline {
    /// Busy fraction per resource, all in [0, 1]; zero on an empty timeline.
    pub fn utilization(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        if self.total_cycles == 0 {
            return out;
        }
        for (i, busy) in self.busy_cycles.iter().enumerate() {
            out[i] = *busy as f64 / self.total_cycles as f64;
        }
        out
    }

    pub fn busy(&self, r: Resource) -> u64 {
        self.busy_cycles[r.index()]
    }

    /// Structural checks: intervals on one resource never overlap, every
    /// interval respects its segment's predecessors, and the total equals
    /// the maximum interval end.
    pub fn validate(&self, graph: &SegmentGraph) -> Result<()> {
        let mut per_res: Vec<Vec<&Interval>> = vec![Vec::new(); 4];
        for iv in &self.intervals {
            per_res[iv.resource.index()].push(iv);
        }
        for list in &mut per_res {
            list.sort_by_key(|iv| iv.start);
            for w in list.windows(2) {
                if w[0].end > w[1].start {
                    return Err(Error::Schedule(format!(
                        "overlapping intervals on {:?}: {} and {}",
                        w[1].resource, w[0].op, w[1].op
                    )));
                }
            }
        }
        let mut end_of = vec![None::<u64>; graph.segments.len()];
        let mut start_of = vec![None::<u64>; graph.segments.len()];
        for iv in &self.intervals {
            end_of[iv.segment as usize] = Some(iv.end);
            start_of[iv.segment as usize] = Some(iv.start);
        }
        for seg in &graph.segments {
            let Some(start) = start_of[seg.id as usize] else {
                return Err(Error::Schedule(format!("segment {} never scheduled", seg.label)));
            };
            for &d in &seg.deps {
                let dep_end = end_of[d as usize].ok_or_else(|| {
                    Error::Schedule(format!("dependency {d} of {} unscheduled", seg.label))
                })?;
                if dep_end > start {
                    return Err(Error::Schedule(format!(
                        "segment {} starts at {start} before dependency {d} ends at {dep_end}",
                        seg.label
                    )));
                }
            }
        }
        let max_end = self.intervals.iter().map(|iv| iv.end).max().unwrap_or(0);
        if max_end != self.total_cycles {
            return Err(Error::Schedule(format!(
                "total_cycles {} != max interval end {max_end}",
                self.total_cycles
            )));
        }
        Ok(())
    }

    /// JSON-lines trace, one record per interval, for waterfall tooling.
    pub fn write_trace<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for iv in &self.intervals {
            let line = serde_json::json!({
                "resource": iv.resource.name(),
                "start": iv.start,
                "end": iv.end,
                "op": iv.op,
            });
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Schedules the phase-serial dataflow.
pub fn schedule_traditional(
    graph: &OpGraph,
    mapping: &Mapping,
    hw: &HardwareSpec,
    table: &CostTable,
) -> Result<(SegmentGraph, Timeline)> {
    schedule_with(&Traditional, graph, mapping, hw, table)
}

/// Schedules the sequence-blocking dataflow with block length `block`.
pub fn schedule_sequence_blocked(
    graph: &OpGraph,
    mapping: &Mapping,
    hw: &HardwareSpec,
    table: &CostTable,
    block: u32,
) -> Result<(SegmentGraph, Timeline)> {
    schedule_with(&SequenceBlocking { block }, graph, mapping, hw, table)
}

/// Builds the segment graph for a dataflow and executes it.
pub fn schedule_with(
    dataflow: &dyn Dataflow,
    graph: &OpGraph,
    mapping: &Mapping,
    hw: &HardwareSpec,
    table: &CostTable,
) -> Result<(SegmentGraph, Timeline)> {
    let blocks = dataflow.blocks(graph.model.seq_len)?;
    let segs = segments::build_segments(graph, mapping, hw, table, &blocks)?;
    let timeline = executor::execute(&segs)?;
    Ok((segs, timeline))
}

/// Per-engine busy fractions of a timeline.
pub fn utilization(timeline: &Timeline) -> [f64; 4] {
    timeline.utilization()
}
