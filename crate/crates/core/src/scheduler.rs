//! Step-indexed untimed scheduler on a uniformised model.
//!
//! Decisions are stored per state as runs `(first_step, action)` ascending in
//! `first_step`; a run lasts until the next one starts. Steps at or beyond
//! `depth` use the per-state tail action.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::Variant;

#[derive(Debug, Clone, PartialEq)]
pub struct StepScheduler {
    pub depth: usize,
    pub lambda: f64,
    pub variant: Variant,
    runs: Vec<Vec<(usize, usize)>>,
    tail: Vec<usize>,
}

impl StepScheduler {
    pub fn num_states(&self) -> usize {
        self.runs.len()
    }

    /// Action taken in `state` after `step` uniformised transitions.
    pub fn action_at(&self, state: usize, step: usize) -> usize {
        if step >= self.depth {
            return self.tail[state];
        }
        let runs = &self.runs[state];
        let i = runs.partition_point(|&(start, _)| start <= step);
        runs[i - 1].1
    }

    pub fn tail_action(&self, state: usize) -> usize {
        self.tail[state]
    }

    /// Decision runs of `state`, as `(first_step, action)`.
    pub fn runs(&self, state: usize) -> &[(usize, usize)] {
        &self.runs[state]
    }

    /// Expands to the dump format, listing only decisions that differ from
    /// the tail action.
    pub fn dump(&self) -> SchedulerDump {
        let mut decisions = Vec::new();
        for (s, runs) in self.runs.iter().enumerate() {
            for (j, &(start, action)) in runs.iter().enumerate() {
                if action == self.tail[s] {
                    continue;
                }
                let end = runs.get(j + 1).map_or(self.depth, |r| r.0);
                decisions.extend((start..end).map(|k| [s, k, action]));
            }
        }
        decisions.sort_unstable();
        SchedulerDump {
            depth: self.depth,
            tail: self.tail.iter().enumerate().map(|(s, &a)| (s.to_string(), a)).collect(),
            decisions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerDump {
    pub depth: usize,
    pub tail: BTreeMap<String, usize>,
    pub decisions: Vec<[usize; 3]>,
}

/// Collects decisions while the recursion walks `k` from `depth - 1` down to 0.
#[derive(Debug)]
pub(crate) struct SchedulerBuilder {
    depth: usize,
    // Per state: runs in descending order of start, plus the open run's action.
    closed: Vec<Vec<(usize, usize)>>,
    open: Vec<Option<usize>>,
    tail: Vec<usize>,
}

impl SchedulerBuilder {
    pub fn new(num_states: usize, depth: usize) -> Self {
        Self {
            depth,
            closed: vec![Vec::new(); num_states],
            open: vec![None; num_states],
            tail: vec![0; num_states],
        }
    }

    /// Records the decision for `state` at step `k`. Must be called with
    /// strictly decreasing `k` per state.
    #[inline]
    pub fn record(&mut self, state: usize, k: usize, action: usize) {
        if k + 1 == self.depth {
            self.tail[state] = action;
        }
        match self.open[state] {
            Some(cur) if cur == action => {}
            Some(cur) => {
                self.closed[state].push((k + 1, cur));
                self.open[state] = Some(action);
            }
            None => self.open[state] = Some(action),
        }
    }

    pub fn finish(self, lambda: f64, variant: Variant) -> StepScheduler {
        let runs = self
            .closed
            .into_iter()
            .zip(self.open)
            .map(|(mut closed, open)| {
                closed.push((0, open.expect("decision recorded at step 0")));
                closed.reverse();
                closed
            })
            .collect();
        StepScheduler {
            depth: self.depth,
            lambda,
            variant,
            runs,
            tail: self.tail,
        }
    }
}
