//! Uniformisation-based bounds and the rate-doubling loop.
//!
//! For a uniformised model and truncation depth `N`:
//!
//! * the untimed recursion `u_k` gives goal states the Poisson suffix mass
//!   `Σ_{i=k}^{N-1} ψ(i)` and every other state the optimal one-step backup
//!   of `u_{k+1}`;
//! * the step-bounded recursion `v'_k` gives goal states 1 and is otherwise
//!   the same backup; the prophetic bound is `v_0 = Σ_i ψ(i) v'_{N-1-i}`.
//!
//! When maximising, `u_0` is the lower and `v_0` the upper bound; when
//! minimising the roles swap. The value reported is always `u_0`, which is
//! attained by the extracted step scheduler.

use log::debug;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::model::{Ctmdp, GoalSpec, Objective, Query, Variant};
use crate::poisson::{truncation_for, PoissonTruncation};
use crate::scheduler::{SchedulerBuilder, StepScheduler};
use crate::uniformise::{uniformise, UniformisedModel};

/// Models with fewer states than this are backed up on one thread.
#[cfg(feature = "parallel")]
const PAR_MIN_STATES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Maximum number of rounds; round `j` uses rate `2^(j-1) λ_max`.
    pub max_rounds: usize,
    /// Refuse rounds whose truncation depth exceeds this.
    pub max_depth: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_rounds: 40,
            max_depth: 1 << 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStats {
    pub lambda: f64,
    pub depth: usize,
    pub gap: f64,
    /// `max_s (lower(s) - upper(s))`; non-positive up to rounding.
    pub max_inversion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsResult {
    /// Untimed value `u_0` on original states.
    pub value: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub gap: f64,
    pub lambda_used: f64,
    pub depth_used: usize,
    pub outer_iterations: usize,
    /// Σ of the truncation depths over all rounds.
    pub total_inner_iterations: usize,
    pub rounds: Vec<RoundStats>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub bounds: BoundsResult,
    pub scheduler: StepScheduler,
    pub uniformised: UniformisedModel,
    pub query: Query,
}

#[inline]
fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// How one state's value at step `k` is obtained.
enum Rule<'a> {
    Optimal(Objective),
    Frozen(&'a StepScheduler),
}

/// One backward step: fills `cur` (and the chosen actions) from `next`.
#[allow(clippy::too_many_arguments)]
fn sweep_step(
    kernel: &Kernel,
    goal: &[bool],
    goal_value: f64,
    next: &[f64],
    cur: &mut [f64],
    act: &mut [usize],
    rule: &Rule<'_>,
    k: usize,
    rank: Option<&[f64]>,
) {
    let one = |s: usize| -> (f64, usize) {
        if goal[s] {
            return (goal_value, kernel.first_action(s));
        }
        match rule {
            Rule::Optimal(obj) => {
                let (v, a) = kernel.backup(s, next, *obj);
                let a = rank.map_or(a, |r| kernel.backup(s, r, *obj).1);
                (clamp01(v), a)
            }
            Rule::Frozen(sched) => {
                let a = sched.action_at(s, k);
                let c = kernel.choice_of(s, a).expect("scheduler action is enabled");
                (clamp01(kernel.expect(c, next)), a)
            }
        }
    };

    #[cfg(feature = "parallel")]
    if cur.len() >= PAR_MIN_STATES {
        use rayon::prelude::*;
        cur.par_iter_mut()
            .zip(act.par_iter_mut())
            .enumerate()
            .for_each(|(s, (v, a))| (*v, *a) = one(s));
        return;
    }

    for (s, (v, a)) in cur.iter_mut().zip(act.iter_mut()).enumerate() {
        (*v, *a) = one(s);
    }
}

/// Untimed recursion over all uniformised states. Returns `u_0` and, when
/// optimising, the decision table.
fn untimed(
    kernel: &Kernel,
    goal: &[bool],
    trunc: &PoissonTruncation,
    rule: Rule<'_>,
) -> (Vec<f64>, Option<SchedulerBuilder>) {
    let n = kernel.num_states();
    let depth = trunc.depth;
    let mut next = vec![0.0; n];
    let mut cur = vec![0.0; n];
    let mut act = vec![0usize; n];
    let mut builder = matches!(rule, Rule::Optimal(_)).then(|| SchedulerBuilder::new(n, depth));
    // u_N vanishes, so every action ties at k = N-1. Those decisions (which
    // also serve as the tail action) are ranked by one-step goal probability.
    let indicator: Vec<f64> = goal.iter().map(|&g| if g { 1.0 } else { 0.0 }).collect();
    let mut suffix = 0.0;
    for k in (0..depth).rev() {
        suffix += trunc.weight(k);
        let rank = (k + 1 == depth).then_some(indicator.as_slice());
        sweep_step(kernel, goal, clamp01(suffix), &next, &mut cur, &mut act, &rule, k, rank);
        if let Some(b) = builder.as_mut() {
            for (s, &a) in act.iter().enumerate() {
                b.record(s, k, a);
            }
        }
        std::mem::swap(&mut next, &mut cur);
    }
    (next, builder)
}

/// Prophetic bound over all uniformised states.
fn prophetic(kernel: &Kernel, goal: &[bool], trunc: &PoissonTruncation, objective: Objective) -> Vec<f64> {
    let n = kernel.num_states();
    let depth = trunc.depth;
    let mut next = vec![0.0; n];
    let mut cur = vec![0.0; n];
    let mut act = vec![0usize; n];
    let mut acc = vec![0.0; n];
    let rule = Rule::Optimal(objective);
    for k in (0..depth).rev() {
        sweep_step(kernel, goal, 1.0, &next, &mut cur, &mut act, &rule, k, None);
        // v'_k is reachability within N-1-k steps, weighted by ψ(N-1-k).
        let w = trunc.weight(depth - 1 - k);
        if w > 0.0 {
            for (a, &v) in acc.iter_mut().zip(&cur) {
                *a += w * v;
            }
        }
        std::mem::swap(&mut next, &mut cur);
    }
    acc.into_iter().map(clamp01).collect()
}

fn restrict(um: &UniformisedModel, full: &[f64]) -> Vec<f64> {
    um.entry_state_of.iter().map(|&u| full[u]).collect()
}

fn check_um(um: &UniformisedModel, trunc: &PoissonTruncation) {
    assert!(trunc.depth >= 1, "truncation depth must be positive");
    debug_assert!(um.model.is_uniform(um.lambda, crate::model::UNIFORM_RTOL));
}

/// Untimed value `u_0` on original states, and its optimal step scheduler.
pub fn lower_bound(
    um: &UniformisedModel,
    trunc: &PoissonTruncation,
    objective: Objective,
) -> (Vec<f64>, StepScheduler) {
    check_um(um, trunc);
    let kernel = Kernel::new(&um.model);
    let (full, builder) = untimed(&kernel, &um.goal, trunc, Rule::Optimal(objective));
    let sched = builder
        .expect("optimal rule builds a scheduler")
        .finish(um.lambda, um.variant);
    (restrict(um, &full), sched)
}

/// Prophetic value `v_0` on original states.
pub fn upper_bound(um: &UniformisedModel, trunc: &PoissonTruncation, objective: Objective) -> Vec<f64> {
    check_um(um, trunc);
    let kernel = Kernel::new(&um.model);
    restrict(um, &prophetic(&kernel, &um.goal, trunc, objective))
}

/// Runs the untimed recursion with every decision fixed by `sched`.
pub fn evaluate_scheduler(um: &UniformisedModel, trunc: &PoissonTruncation, sched: &StepScheduler) -> Result<Vec<f64>> {
    check_um(um, trunc);
    check_scheduler(um, sched)?;
    if sched.depth != trunc.depth {
        return Err(Error::SchedulerMismatch(format!(
            "scheduler depth {} vs truncation depth {}",
            sched.depth, trunc.depth
        )));
    }
    let kernel = Kernel::new(&um.model);
    let (full, _) = untimed(&kernel, &um.goal, trunc, Rule::Frozen(sched));
    Ok(restrict(um, &full))
}

pub(crate) fn check_scheduler(um: &UniformisedModel, sched: &StepScheduler) -> Result<()> {
    if sched.lambda != um.lambda {
        return Err(Error::SchedulerMismatch(format!(
            "scheduler rate {} vs model rate {}",
            sched.lambda, um.lambda
        )));
    }
    if sched.variant != um.variant {
        return Err(Error::SchedulerMismatch(format!(
            "scheduler variant {} vs model variant {}",
            sched.variant, um.variant
        )));
    }
    if sched.num_states() != um.num_states() {
        return Err(Error::SchedulerMismatch(format!(
            "scheduler covers {} states, model has {}",
            sched.num_states(),
            um.num_states()
        )));
    }
    for s in 0..um.num_states() {
        let bad = sched
            .runs(s)
            .iter()
            .map(|r| r.1)
            .chain(std::iter::once(sched.tail_action(s)))
            .find(|&a| !um.model.is_enabled(s, a));
        if let Some(a) = bad {
            return Err(Error::SchedulerMismatch(format!("action {a} not enabled in state {s}")));
        }
    }
    Ok(())
}

/// Optimal time-bounded reachability with the default configuration.
pub fn gu_solve(model: &Ctmdp, goal: &GoalSpec, query: &Query) -> Result<Solution> {
    gu_solve_with(model, goal, query, &SolverConfig::default())
}

pub fn gu_solve_with(model: &Ctmdp, goal: &GoalSpec, query: &Query, cfg: &SolverConfig) -> Result<Solution> {
    query.validate()?;
    model.ensure_valid()?;
    goal.validate_for(model)?;

    let target = query.gap_target();
    let mut lambda = model.max_exit_rate();
    let mut rounds = Vec::new();
    let mut total_inner = 0;
    let mut best: Option<Solution> = None;

    for round in 1..=cfg.max_rounds.max(1) {
        let trunc = truncation_for(lambda, query.time_bound, query.truncation_budget())?;
        if trunc.depth > cfg.max_depth {
            match best {
                None => {
                    return Err(Error::DepthLimit {
                        depth: trunc.depth,
                        limit: cfg.max_depth,
                    })
                }
                Some(_) => break,
            }
        }
        let um = uniformise(model, goal, lambda, query.variant)?;
        let kernel = Kernel::new(&um.model);
        let (untimed_full, builder) = untimed(&kernel, &um.goal, &trunc, Rule::Optimal(query.objective));
        let scheduler = builder
            .expect("optimal rule builds a scheduler")
            .finish(lambda, query.variant);
        let prophetic_full = prophetic(&kernel, &um.goal, &trunc, query.objective);
        let value = restrict(&um, &untimed_full);
        let other = restrict(&um, &prophetic_full);
        let (lower, upper) = match query.objective {
            Objective::Maximize => (value.clone(), other),
            Objective::Minimize => (other, value.clone()),
        };
        let gap = lower.iter().zip(&upper).map(|(l, u)| (u - l).abs()).fold(0.0, f64::max);
        let max_inversion = lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| l - u)
            .fold(f64::NEG_INFINITY, f64::max);
        total_inner += trunc.depth;
        rounds.push(RoundStats {
            lambda,
            depth: trunc.depth,
            gap,
            max_inversion,
        });
        debug!(
            "round {round}: lambda={lambda} depth={} gap={gap:e} target={target:e}",
            trunc.depth
        );

        let solution = Solution {
            bounds: BoundsResult {
                value,
                lower,
                upper,
                gap,
                lambda_used: lambda,
                depth_used: trunc.depth,
                outer_iterations: round,
                total_inner_iterations: total_inner,
                rounds: rounds.clone(),
            },
            scheduler,
            uniformised: um,
            query: *query,
        };
        if gap <= target {
            return Ok(solution);
        }
        if best.as_ref().is_none_or(|b| gap < b.bounds.gap) {
            best = Some(solution);
        }
        lambda *= 2.0;
    }

    let mut best = best.expect("at least one round ran");
    best.bounds.rounds = rounds.clone();
    best.bounds.outer_iterations = rounds.len();
    best.bounds.total_inner_iterations = total_inner;
    Err(Error::LambdaCapExceeded {
        rounds: rounds.len(),
        best_gap: best.bounds.gap,
        best: Box::new(best),
    })
}

impl Solution {
    pub fn variant(&self) -> Variant {
        self.query.variant
    }

    pub fn objective(&self) -> Objective {
        self.query.objective
    }
}
