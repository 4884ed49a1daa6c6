//! Monte Carlo estimates of time-bounded reachability.
//!
//! Every trajectory `i` draws from its own ChaCha8 stream: the generator is
//! seeded with `seed` and switched to stream `i`. Results therefore do not
//! depend on how trajectories are spread over threads.
//!
//! The reported interval is the normal approximation
//! `z * sqrt(p (1 - p) / runs)` with `z` the two-sided quantile of the
//! requested confidence level.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::model::{Ctmdp, GoalSpec};
use crate::scheduler::StepScheduler;
use crate::solver::check_scheduler;
use crate::uniformise::UniformisedModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub runs: u64,
    pub seed: u64,
    pub time_bound: f64,
    pub confidence: f64,
}

impl SimConfig {
    pub fn new(runs: u64, seed: u64, time_bound: f64) -> Self {
        Self {
            runs,
            seed,
            time_bound,
            confidence: 0.99,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidSimConfig("runs must be at least 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidSimConfig(format!(
                "confidence must lie in (0,1), got {}",
                self.confidence
            )));
        }
        if !(self.time_bound.is_finite() && self.time_bound > 0.0) {
            return Err(Error::InvalidSimConfig(format!(
                "time bound must be positive, got {}",
                self.time_bound
            )));
        }
        Ok(())
    }

    fn z(&self) -> f64 {
        Normal::standard().inverse_cdf(0.5 + self.confidence / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimOutcome {
    pub estimate: f64,
    pub half_width: f64,
    pub successes: u64,
    pub runs: u64,
    pub seed: u64,
}

impl SimOutcome {
    fn from_counts(successes: u64, cfg: &SimConfig) -> Self {
        let p = successes as f64 / cfg.runs as f64;
        Self {
            estimate: p,
            half_width: cfg.z() * (p * (1.0 - p) / cfg.runs as f64).sqrt(),
            successes,
            runs: cfg.runs,
            seed: cfg.seed,
        }
    }

    pub fn csv_header() -> &'static str {
        "estimate,half_width,successes,runs,seed"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.estimate, self.half_width, self.successes, self.runs, self.seed
        )
    }
}

fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Samples a target of `choice` by inverse CDF over ascending targets.
#[inline]
fn jump(kernel: &Kernel, choice: usize, rng: &mut ChaCha8Rng) -> usize {
    let (ts, ps) = kernel.entries(choice);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (&t, &p) in ts.iter().zip(ps) {
        acc += p;
        if u < acc {
            return t;
        }
    }
    *ts.last().expect("choice has a target")
}

fn count_successes<F>(runs: u64, trajectory: F) -> u64
where
    F: Fn(u64) -> bool + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..runs).into_par_iter().filter(|&i| trajectory(i)).count() as u64
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..runs).filter(|&i| trajectory(i)).count() as u64
    }
}

/// Simulates the uniformised model under the step scheduler, starting from
/// the entry state of original state `initial`.
pub fn simulate_scheduler(
    um: &UniformisedModel,
    sched: &StepScheduler,
    cfg: &SimConfig,
    initial: usize,
) -> Result<SimOutcome> {
    cfg.validate()?;
    check_scheduler(um, sched)?;
    let start = *um.entry_state_of.get(initial).ok_or(Error::StateOutOfRange(initial))?;
    let kernel = Kernel::new(&um.model);
    let sojourn = Exp::new(um.lambda).map_err(|e| Error::InvalidSimConfig(e.to_string()))?;
    let goal = &um.goal;
    let horizon = cfg.time_bound;

    let successes = count_successes(cfg.runs, |i| {
        let mut rng = trajectory_rng(cfg.seed, i);
        let mut state = start;
        let mut elapsed = 0.0;
        let mut step = 0;
        loop {
            if goal[state] {
                return true;
            }
            elapsed += sojourn.sample(&mut rng);
            if elapsed > horizon {
                return false;
            }
            let action = sched.action_at(state, step);
            let choice = kernel.choice_of(state, action).expect("checked scheduler");
            state = jump(&kernel, choice, &mut rng);
            step += 1;
        }
    });
    Ok(SimOutcome::from_counts(successes, cfg))
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaselinePolicy {
    /// Picks an enabled action uniformly on every state entry.
    UniformRandom,
    /// Fixed action per state; unlisted states use their lowest enabled action.
    FixedActions(BTreeMap<usize, usize>),
}

/// Simulates the original CTMDP directly: sojourn `Exp(E(s,a))`, jump by
/// `P(s,a,·)`.
pub fn simulate_baseline(
    model: &Ctmdp,
    goal: &GoalSpec,
    policy: &BaselinePolicy,
    cfg: &SimConfig,
    initial: usize,
) -> Result<SimOutcome> {
    cfg.validate()?;
    model.ensure_valid()?;
    goal.validate_for(model)?;
    if initial >= model.num_states() {
        return Err(Error::StateOutOfRange(initial));
    }
    let kernel = Kernel::new(model);
    let n = model.num_states();
    // Per state: kernel choice indices the policy may pick from.
    let mut options: Vec<Vec<usize>> = Vec::with_capacity(n);
    for s in 0..n {
        let all: Vec<usize> = kernel.choices(s).collect();
        options.push(match policy {
            BaselinePolicy::UniformRandom => all,
            BaselinePolicy::FixedActions(table) => match table.get(&s) {
                Some(&a) => vec![kernel
                    .choice_of(s, a)
                    .ok_or(Error::ActionNotEnabled { state: s, action: a })?],
                None => vec![all[0]],
            },
        });
    }
    if let BaselinePolicy::FixedActions(table) = policy {
        if let Some(&s) = table.keys().find(|&&s| s >= n) {
            return Err(Error::StateOutOfRange(s));
        }
    }
    let exit: Vec<f64> = (0..n)
        .flat_map(|s| model.choices(s).iter().map(|c| c.exit_rate).collect::<Vec<_>>())
        .collect();
    let sojourn: Vec<Exp<f64>> = exit.iter().map(|&r| Exp::new(r).expect("positive exit rate")).collect();
    let goal_mask = goal.mask(n);

    let successes = count_successes(cfg.runs, |i| {
        let mut rng = trajectory_rng(cfg.seed, i);
        let mut state = initial;
        let mut elapsed = 0.0;
        loop {
            if goal_mask[state] {
                return true;
            }
            let opts = &options[state];
            let choice = if opts.len() == 1 {
                opts[0]
            } else {
                opts[rng.random_range(0..opts.len())]
            };
            elapsed += sojourn[choice].sample(&mut rng);
            if elapsed > cfg.time_bound {
                return false;
            }
            state = jump(&kernel, choice, &mut rng);
        }
    });
    Ok(SimOutcome::from_counts(successes, cfg))
}
