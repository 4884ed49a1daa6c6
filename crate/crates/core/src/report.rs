//! Machine-readable results: the solve JSON and the scheduler dump.

use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::error::Result;
use crate::model::{Ctmdp, GoalSpec, Objective, Query, Variant};
use crate::scheduler::SchedulerDump;
use crate::solver::{gu_solve_with, Solution, SolverConfig};

/// Serialises a dense vector as `{"0": x0, "1": x1, ...}` in index order.
#[derive(Debug, Clone, Copy)]
pub struct StateMap<'a>(pub &'a [f64]);

impl Serialize for StateMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (s, v) in self.0.iter().enumerate() {
            map.serialize_entry(&s.to_string(), v)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ResultJson<'a> {
    pub value: StateMap<'a>,
    pub lower: StateMap<'a>,
    pub upper: StateMap<'a>,
    pub gap: f64,
    pub lambda: f64,
    pub depth: usize,
    pub outer_iterations: usize,
    pub variant: Variant,
    pub objective: Objective,
}

impl Solution {
    pub fn result_json(&self) -> ResultJson<'_> {
        let b = &self.bounds;
        ResultJson {
            value: StateMap(&b.value),
            lower: StateMap(&b.lower),
            upper: StateMap(&b.upper),
            gap: b.gap,
            lambda: b.lambda_used,
            depth: b.depth_used,
            outer_iterations: b.outer_iterations,
            variant: self.query.variant,
            objective: self.query.objective,
        }
    }

    pub fn result_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.result_json()).expect("result serialises")
    }

    pub fn scheduler_dump(&self) -> SchedulerDump {
        self.scheduler.dump()
    }
}

/// Per-state values plus the serialised decision table.
#[derive(Debug, Clone)]
pub struct ValueAndPolicy {
    pub solution: Solution,
    pub result: String,
    pub scheduler: SchedulerDump,
}

pub fn solve_value_and_policy(
    model: &Ctmdp,
    goal: &GoalSpec,
    query: &Query,
    cfg: &SolverConfig,
) -> Result<ValueAndPolicy> {
    let solution = gu_solve_with(model, goal, query, cfg)?;
    Ok(ValueAndPolicy {
        result: solution.result_json_string(),
        scheduler: solution.scheduler_dump(),
        solution,
    })
}
