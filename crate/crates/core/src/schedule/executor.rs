//! Production list scheduler: greedy, non-preemptive, work-conserving.
//!
//! Discipline: at any instant, each free resource starts the ready segment
//! with the lowest id. Completions at an instant are processed before
//! starts, and zero-length segments cascade within the same instant. The
//! oracle in [`super::oracle`] implements the identical discipline with a
//! plain time-stepping structure; the two must agree cycle for cycle.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::error::{Error, Result};
use crate::schedule::segments::SegmentGraph;
use crate::schedule::{Interval, Timeline, RESOURCES};

pub fn execute(graph: &SegmentGraph) -> Result<Timeline> {
    let n = graph.segments.len();
    let mut timeline = Timeline::default();
    if n == 0 {
        return Ok(timeline);
    }

    let mut dep_remaining: Vec<usize> = vec![0; n];
    let mut dependents: Vec<Vec<u32>> = vec![Vec::new(); n];
    for seg in &graph.segments {
        dep_remaining[seg.id as usize] = seg.deps.len();
        for &d in &seg.deps {
            dependents[d as usize].push(seg.id);
        }
    }

    // Ready segments per resource, ordered by id.
    let mut ready: [BTreeSet<u32>; 4] = Default::default();
    for seg in &graph.segments {
        if seg.deps.is_empty() {
            ready[seg.resource.index()].insert(seg.id);
        }
    }

    let mut busy_until: [u64; 4] = [0; 4];
    let mut completions: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
    let mut finished = vec![false; n];
    let mut started = vec![false; n];
    let mut done = 0usize;
    let mut now = 0u64;

    while done < n {
        // Fixpoint at the current instant: drain completions, then starts,
        // until neither makes progress.
        loop {
            let mut progressed = false;
            while let Some(&Reverse((t, id))) = completions.peek() {
                if t > now {
                    break;
                }
                completions.pop();
                finished[id as usize] = true;
                done += 1;
                progressed = true;
                for &dep in &dependents[id as usize] {
                    dep_remaining[dep as usize] -= 1;
                    if dep_remaining[dep as usize] == 0 {
                        let seg = &graph.segments[dep as usize];
                        ready[seg.resource.index()].insert(dep);
                    }
                }
            }
            for r in RESOURCES {
                let ri = r.index();
                while busy_until[ri] <= now {
                    let Some(&id) = ready[ri].iter().next() else {
                        break;
                    };
                    ready[ri].remove(&id);
                    let seg = &graph.segments[id as usize];
                    debug_assert!(!started[id as usize]);
                    started[id as usize] = true;
                    let end = now + seg.cycles;
                    busy_until[ri] = end;
                    timeline.intervals.push(Interval {
                        resource: seg.resource,
                        start: now,
                        end,
                        op: seg.label.clone(),
                        segment: id,
                    });
                    timeline.busy_cycles[ri] += seg.cycles;
                    completions.push(Reverse((end, id)));
                    progressed = true;
                    if seg.cycles > 0 {
                        break;
                    }
                }
            }
            if !progressed {
                break;
            }
        }
        if done == n {
            break;
        }
        match completions.peek() {
            Some(&Reverse((t, _))) => now = t,
            None => {
                let stuck: Vec<&str> = graph
                    .segments
                    .iter()
                    .filter(|s| !finished[s.id as usize])
                    .map(|s| s.label.as_str())
                    .take(4)
                    .collect();
                return Err(Error::Schedule(format!(
                    "deadlock: no runnable segment among {stuck:?}"
                )));
            }
        }
    }

    timeline.total_cycles = timeline.intervals.iter().map(|iv| iv.end).max().unwrap_or(0);
    timeline.intervals.sort_by_key(|iv| (iv.start, iv.segment));
    Ok(timeline)
}
