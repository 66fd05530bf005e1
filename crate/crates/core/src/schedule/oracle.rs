//! Discrete-event validation oracle.
//!
//! A deliberately plain reimplementation of the scheduling discipline used
//! by [`super::executor`]: no priority queues, just repeated scans over
//! every segment at each decision instant. Completions become visible at
//! scan boundaries, exactly like the executor's completion phase, so
//! zero-length segments cascade identically. Slow but obvious; the
//! production executor must reproduce its placements exactly.

use crate::error::{Error, Result};
use crate::schedule::segments::SegmentGraph;
use crate::schedule::{Interval, Timeline};

pub fn execute(graph: &SegmentGraph) -> Result<Timeline> {
    let n = graph.segments.len();
    let mut timeline = Timeline::default();
    if n == 0 {
        return Ok(timeline);
    }

    let mut start: Vec<Option<u64>> = vec![None; n];
    let mut end: Vec<Option<u64>> = vec![None; n];
    // Non-preemptive single-unit resources: at most one started-unfinished
    // segment per resource, so its end time is the whole occupancy state.
    let mut occupied_until: [u64; 4] = [0; 4];
    let mut finished = vec![false; n];
    let mut now: u64 = 0;

    loop {
        // Fixpoint at `now`. Dependency completions are sampled at the top
        // of each pass; within a pass only resource occupancy changes.
        loop {
            for i in 0..n {
                finished[i] = matches!(end[i], Some(e) if e <= now);
            }
            let mut progressed = false;
            for seg in &graph.segments {
                let idx = seg.id as usize;
                if start[idx].is_some() {
                    continue;
                }
                if !seg.deps.iter().all(|&d| finished[d as usize]) {
                    continue;
                }
                if occupied_until[seg.resource.index()] > now {
                    continue;
                }
                start[idx] = Some(now);
                end[idx] = Some(now + seg.cycles);
                occupied_until[seg.resource.index()] = now + seg.cycles;
                progressed = true;
            }
            if !progressed {
                break;
            }
        }

        if start.iter().all(|s| s.is_some()) {
            break;
        }
        // Advance to the next completion of a running segment.
        let next = (0..n)
            .filter_map(|i| match (start[i], end[i]) {
                (Some(_), Some(e)) if e > now => Some(e),
                _ => None,
            })
            .min();
        match next {
            Some(t) => now = t,
            None => {
                return Err(Error::Schedule(
                    "oracle deadlock: unstarted segments with no running work".into(),
                ))
            }
        }
    }

    for seg in &graph.segments {
        let idx = seg.id as usize;
        let (s, e) = (start[idx].unwrap(), end[idx].unwrap());
        timeline.intervals.push(Interval {
            resource: seg.resource,
            start: s,
            end: e,
            op: seg.label.clone(),
            segment: seg.id,
        });
        timeline.busy_cycles[seg.resource.index()] += seg.cycles;
        timeline.total_cycles = timeline.total_cycles.max(e);
    }
    // Present intervals in start order, as the executor emits them.
    timeline.intervals.sort_by_key(|iv| (iv.start, iv.segment));
    Ok(timeline)
}
