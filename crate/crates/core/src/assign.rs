//! Greedy interval partitioning of selected jobs onto machines.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Job;

/// Job id to 1-based machine index, in the order the jobs were given.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub machines: Vec<(String, u32)>,
    pub machines_used: u32,
}

impl Assignment {
    pub fn machine_of(&self, id: &str) -> Option<u32> {
        self.machines.iter().find(|(j, _)| j == id).map(|&(_, m)| m)
    }

    /// Checks that no two of `jobs` placed on one machine overlap.
    pub fn check(&self, jobs: &[Job]) -> Result<()> {
        let mut placed: Vec<(u32, &Job)> = jobs.iter().filter_map(|j| self.machine_of(&j.id).map(|m| (m, j))).collect();
        placed.sort_by_key(|&(m, j)| (m, j.start, j.end));
        for pair in placed.windows(2) {
            let ((m1, a), (m2, b)) = (pair[0], pair[1]);
            if m1 == m2 && a.overlaps(b) {
                return Err(Error::OverlappingAssignment { machine: m1, first: a.id.clone(), second: b.id.clone() });
            }
        }
        Ok(())
    }
}

/// Places each job on the lowest-index machine that is free at its start,
/// opening a new machine when none is. Jobs are processed by start time
/// (ties by end, then id). Uses as many machines as the depth of the job set.
pub fn greedy_assign(jobs: &[Job]) -> Assignment {
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    order.sort_by(|&a, &b| {
        let (ja, jb) = (&jobs[a], &jobs[b]);
        (ja.start, ja.end, &ja.id).cmp(&(jb.start, jb.end, &jb.id))
    });

    let mut machine_of = vec![0u32; jobs.len()];
    let mut busy: BinaryHeap<Reverse<(u32, u32)>> = BinaryHeap::new();
    let mut free: BTreeSet<u32> = BTreeSet::new();
    let mut opened = 0u32;
    for idx in order {
        let job = &jobs[idx];
        while let Some(&Reverse((end, m))) = busy.peek() {
            if end > job.start {
                break;
            }
            busy.pop();
            free.insert(m);
        }
        let m = match free.pop_first() {
            Some(m) => m,
            None => {
                opened += 1;
                opened
            }
        };
        machine_of[idx] = m;
        busy.push(Reverse((job.end, m)));
    }
    Assignment {
        machines: jobs.iter().zip(machine_of).map(|(j, m)| (j.id.clone(), m)).collect(),
        machines_used: opened,
    }
}

/// Largest number of jobs covering one slot.
pub fn depth(jobs: &[Job]) -> u32 {
    let mut events: Vec<(u32, i32)> =
        jobs.iter().filter(|j| j.start < j.end).flat_map(|j| [(j.start, 1), (j.end, -1)]).collect();
    // Ends sort before starts at the same instant: half-open intervals.
    events.sort_unstable();
    let mut current = 0i32;
    let mut best = 0i32;
    for (_, d) in events {
        current += d;
        best = best.max(current);
    }
    best as u32
}
