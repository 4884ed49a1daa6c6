use thiserror::Error;

use crate::model::Violation;
use crate::solver::Solution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {}", join_violations(.0))]
    InvalidModel(Vec<Violation>),

    #[error("action {action} not enabled in state {state}")]
    ActionNotEnabled { state: usize, action: usize },

    #[error("state {0} out of range")]
    StateOutOfRange(usize),

    #[error("goal state {state} out of range (model has {num_states} states)")]
    GoalOutOfRange { state: usize, num_states: usize },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("rate {lambda} below maximal exit rate {lambda_max}")]
    RateBelowMaxExit { lambda: f64, lambda_max: f64 },

    #[error("invalid poisson parameters: {0}")]
    Poisson(String),

    /// The doubling loop hit its cap; the payload holds the tightest round.
    #[error("lambda cap exceeded after {rounds} rounds (best gap {best_gap:e})")]
    LambdaCapExceeded {
        rounds: usize,
        best_gap: f64,
        best: Box<Solution>,
    },

    #[error("truncation depth {depth} exceeds limit {limit}")]
    DepthLimit { depth: usize, limit: usize },

    #[error("scheduler does not match model: {0}")]
    SchedulerMismatch(String),

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
