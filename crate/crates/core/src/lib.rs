//! Maximum and minimum time-bounded reachability for continuous-time Markov
//! decision processes.
//!
//! The solver uniformises the model to a rate `λ`, computes an untimed lower
//! bound and a prophetic upper bound by backward recursion over the step
//! count, and doubles `λ` until the two bounds are within the requested
//! precision. The untimed bound comes with a step-indexed scheduler that can
//! be validated by Monte Carlo simulation.

pub mod benchmarks;
pub mod error;
mod kernel;
pub mod model;
pub mod poisson;
pub mod report;
pub mod scheduler;
pub mod simulate;
pub mod solver;
pub mod sweep;
pub mod uniformise;

pub use error::{Error, Result};
pub use model::{Ctmdp, GoalSpec, Objective, Query, Transition, Variant};
pub use poisson::{poisson_weights, truncation_depth, PoissonTruncation};
pub use scheduler::StepScheduler;
pub use solver::{gu_solve, gu_solve_with, BoundsResult, Solution, SolverConfig};
pub use uniformise::{uniformise, uniformise_early, uniformise_late, UniformisedModel};
