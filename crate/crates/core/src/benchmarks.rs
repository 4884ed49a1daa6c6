//! Model generators: stochastic job scheduling, birth chains, and the small
//! analytic models used as oracles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Ctmdp, GoalSpec, Transition};

/// Default cap on the number of SJS states (`2^jobs`).
pub const DEFAULT_MAX_STATES: usize = 1 << 20;

/// A generated model together with its goal set and initial state.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: String,
    pub model: Ctmdp,
    pub goal: GoalSpec,
    pub initial: usize,
}

/// Stochastic job scheduling: `processors` identical machines, one
/// exponential job per rate, preemption allowed at any time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SjsParams {
    pub processors: usize,
    pub jobs: Vec<f64>,
}

impl SjsParams {
    pub fn new(processors: usize, jobs: Vec<f64>) -> Self {
        Self { processors, jobs }
    }

    pub fn name(&self) -> String {
        let rates: Vec<String> = self.jobs.iter().map(|r| r.to_string()).collect();
        format!("sjs-{}-[{}]", self.processors, rates.join(","))
    }

    fn validate(&self, max_states: usize) -> Result<()> {
        if self.processors == 0 {
            return Err(Error::InvalidGenerator("at least one processor required".into()));
        }
        if self.jobs.is_empty() {
            return Err(Error::InvalidGenerator("at least one job required".into()));
        }
        if let Some(r) = self.jobs.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidGenerator(format!("job rate must be positive, got {r}")));
        }
        if self.jobs.len() >= usize::BITS as usize - 1 || (1usize << self.jobs.len()) > max_states {
            return Err(Error::InvalidGenerator(format!(
                "{} jobs give more than {max_states} states",
                self.jobs.len()
            )));
        }
        Ok(())
    }
}

fn subset_label(mask: usize, jobs: usize) -> String {
    let members: Vec<String> = (0..jobs)
        .filter(|j| mask >> j & 1 == 1)
        .map(|j| j.to_string())
        .collect();
    format!("{{{}}}", members.join(","))
}

/// All `k`-subsets of the set bits of `mask`, in lexicographic order of
/// their member lists.
fn subsets_of_size(mask: usize, k: usize) -> Vec<usize> {
    let members: Vec<usize> = (0..usize::BITS as usize).filter(|j| mask >> j & 1 == 1).collect();
    let mut out = Vec::new();
    let mut pick = Vec::with_capacity(k);
    fn rec(members: &[usize], k: usize, start: usize, pick: &mut Vec<usize>, out: &mut Vec<usize>) {
        if pick.len() == k {
            out.push(pick.iter().fold(0, |m, &j| m | 1 << j));
            return;
        }
        for i in start..members.len() {
            pick.push(members[i]);
            rec(members, k, i + 1, pick, out);
            pick.pop();
        }
    }
    rec(&members, k, 0, &mut pick, &mut out);
    out
}

/// States are subsets of unfinished jobs, indexed by their bitmask; the goal
/// is the empty set and the initial state is the full set.
pub fn generate_sjs(p: &SjsParams) -> Result<Benchmark> {
    generate_sjs_limited(p, DEFAULT_MAX_STATES)
}

pub fn generate_sjs_limited(p: &SjsParams, max_states: usize) -> Result<Benchmark> {
    p.validate(max_states)?;
    let n = p.jobs.len();
    let num_states = 1usize << n;
    let full = num_states - 1;

    // Canonical action order: by size, then lexicographic member list.
    let mut action_masks: Vec<usize> = Vec::new();
    for size in 1..=p.processors.min(n) {
        action_masks.extend(subsets_of_size(full, size));
    }
    let mut actions: Vec<String> = action_masks
        .iter()
        .map(|&m| format!("run{}", subset_label(m, n)))
        .collect();
    let index_of: BTreeMap<usize, usize> = action_masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let idle = actions.len();
    actions.push("idle".into());

    let slowest = p.jobs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut transitions = Vec::new();
    let mut labels = BTreeMap::new();
    for state in 0..num_states {
        labels.insert(state, subset_label(state, n));
        if state == 0 {
            transitions.push(Transition::new(0, idle, 0, slowest));
            continue;
        }
        let running = p.processors.min(state.count_ones() as usize);
        for run in subsets_of_size(state, running) {
            let a = index_of[&run];
            for j in (0..n).filter(|j| run >> j & 1 == 1) {
                transitions.push(Transition::new(state, a, state & !(1 << j), p.jobs[j]));
            }
        }
    }
    let model = Ctmdp::checked(num_states, actions, transitions)?.with_labels(labels);
    Ok(Benchmark {
        name: p.name(),
        model,
        goal: GoalSpec::new([0]),
        initial: full,
    })
}

/// Birth chain `0 -> 1 -> ... -> n-1` at a common rate; the goal is the last
/// state, so the value of state 0 at time `T` is the Erlang(n-1, rate) CDF.
pub fn generate_birth_chain(n: usize, rate: f64) -> Result<Benchmark> {
    if n < 2 {
        return Err(Error::InvalidGenerator(format!("birth chain needs n >= 2, got {n}")));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidGenerator(format!("rate must be positive, got {rate}")));
    }
    let mut transitions: Vec<Transition> = (0..n - 1).map(|s| Transition::new(s, 0, s + 1, rate)).collect();
    transitions.push(Transition::new(n - 1, 0, n - 1, rate));
    Ok(Benchmark {
        name: format!("birth-{n}-{rate}"),
        model: Ctmdp::checked(n, vec!["step".into()], transitions)?,
        goal: GoalSpec::new([n - 1]),
        initial: 0,
    })
}

/// Alias of [`generate_birth_chain`].
pub fn generate_grid_ctmc(n: usize, rate: f64) -> Result<Benchmark> {
    generate_birth_chain(n, rate)
}

/// One non-goal state with a single exponential jump at `rate` to an
/// absorbing goal. Value at `T` is `1 - exp(-rate T)`.
pub fn single_exponential(rate: f64) -> Benchmark {
    let model = Ctmdp::checked(
        2,
        vec!["go".into()],
        vec![Transition::new(0, 0, 1, rate), Transition::new(1, 0, 1, rate)],
    )
    .expect("valid by construction");
    Benchmark {
        name: format!("single-exp-{rate}"),
        model,
        goal: GoalSpec::new([1]),
        initial: 0,
    }
}

/// One non-goal state with two actions jumping to the goal at `fast` and
/// `slow`. The max value is `1 - exp(-fast T)`, the min `1 - exp(-slow T)`.
pub fn two_speed_choice(fast: f64, slow: f64) -> Benchmark {
    let model = Ctmdp::checked(
        2,
        vec!["fast".into(), "slow".into()],
        vec![
            Transition::new(0, 0, 1, fast),
            Transition::new(0, 1, 1, slow),
            Transition::new(1, 0, 1, fast),
        ],
    )
    .expect("valid by construction");
    Benchmark {
        name: format!("two-speed-{fast}-{slow}"),
        model,
        goal: GoalSpec::new([1]),
        initial: 0,
    }
}

/// State 0 chooses between a slow direct jump to the goal (`direct`) and a
/// fast hop to an intermediate state that then reaches the goal at
/// `second_hop`. Early on the detour pays off, close to the deadline the
/// direct jump does, so optimal schedulers depend on time.
pub fn timed_detour(direct: f64, first_hop: f64, second_hop: f64) -> Benchmark {
    let model = Ctmdp::checked(
        3,
        vec!["direct".into(), "detour".into()],
        vec![
            Transition::new(0, 0, 2, direct),
            Transition::new(0, 1, 1, first_hop),
            Transition::new(1, 0, 2, second_hop),
            Transition::new(2, 0, 2, direct),
        ],
    )
    .expect("valid by construction");
    Benchmark {
        name: format!("detour-{direct}-{first_hop}-{second_hop}"),
        model,
        goal: GoalSpec::new([2]),
        initial: 0,
    }
}

/// The models exercised by the regression and acceptance suites.
pub fn bundled_suite() -> Vec<Benchmark> {
    let mut v = vec![
        single_exponential(1.0),
        two_speed_choice(2.0, 1.0),
        generate_birth_chain(2, 1.0).expect("valid"),
        generate_birth_chain(3, 1.0).expect("valid"),
        generate_birth_chain(6, 2.5).expect("valid"),
        timed_detour(1.0, 10.0, 2.0),
    ];
    for p in [
        SjsParams::new(1, vec![2.0, 1.0]),
        SjsParams::new(2, vec![1.0, 2.0, 3.0]),
        SjsParams::new(2, vec![1.0, 1.0, 1.0]),
        SjsParams::new(3, vec![1.0, 2.0, 3.0, 4.0, 5.0]),
    ] {
        v.push(generate_sjs(&p).expect("valid"));
    }
    v
}
