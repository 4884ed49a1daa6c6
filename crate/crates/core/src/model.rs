//! The CTMDP data model: states, a global action alphabet, and rate triples.
//!
//! A [`Ctmdp`] keeps the transitions exactly as supplied and builds a
//! per-state index of enabled actions on top. Construction never fails;
//! [`Ctmdp::validate`] reports every broken invariant and
//! [`Ctmdp::checked`] turns a non-empty report into an error. A CTMC is
//! simply a model in which every state has one enabled action.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking that a model is uniform.
pub const UNIFORM_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub source: usize,
    pub action: usize,
    pub target: usize,
    /// Events per time unit.
    pub rate: f64,
}

impl Transition {
    pub fn new(source: usize, action: usize, target: usize, rate: f64) -> Self {
        Self {
            source,
            action,
            target,
            rate,
        }
    }
}

/// One enabled action of one state, with its outgoing rates.
#[derive(Debug, Clone)]
pub struct Choice {
    pub action: usize,
    pub exit_rate: f64,
    targets: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoEnabledAction {
        state: usize,
    },
    DuplicateTransition {
        source: usize,
        action: usize,
        target: usize,
    },
    NonPositiveRate {
        source: usize,
        action: usize,
        target: usize,
        rate: f64,
    },
    StateOutOfRange {
        index: usize,
        state: usize,
    },
    ActionOutOfRange {
        index: usize,
        action: usize,
    },
    LabelOutOfRange {
        state: usize,
    },
    NoStates,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoEnabledAction { state } => write!(f, "no enabled action at state {state}"),
            Violation::DuplicateTransition { source, action, target } => {
                write!(f, "duplicate transition ({source},{action},{target})")
            }
            Violation::NonPositiveRate {
                source,
                action,
                target,
                rate,
            } => write!(
                f,
                "rate must be finite and positive: ({source},{action},{target}) has rate {rate}"
            ),
            Violation::StateOutOfRange { index, state } => {
                write!(f, "transition #{index} references unknown state {state}")
            }
            Violation::ActionOutOfRange { index, action } => {
                write!(f, "transition #{index} references unknown action {action}")
            }
            Violation::LabelOutOfRange { state } => write!(f, "label for unknown state {state}"),
            Violation::NoStates => write!(f, "model has no states"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ctmdp {
    num_states: usize,
    actions: Vec<String>,
    transitions: Vec<Transition>,
    labels: BTreeMap<usize, String>,
    // CSR index: choices of state s are choices[choice_start[s]..choice_start[s + 1]],
    // sorted by action; targets of a choice are sorted by target state.
    choice_start: Vec<usize>,
    choices: Vec<Choice>,
    targets: Vec<(usize, f64)>,
}

impl Ctmdp {
    /// Builds a model without checking invariants. Out-of-range triples are
    /// kept for [`validate`](Self::validate) but left out of the index.
    pub fn new(num_states: usize, actions: Vec<String>, transitions: Vec<Transition>) -> Self {
        let mut sorted: Vec<&Transition> = transitions
            .iter()
            .filter(|t| t.source < num_states && t.target < num_states && t.action < actions.len())
            .collect();
        sorted.sort_by_key(|t| (t.source, t.action, t.target));

        let mut choice_start = Vec::with_capacity(num_states + 1);
        let mut choices: Vec<Choice> = Vec::new();
        let mut targets = Vec::with_capacity(sorted.len());
        let mut i = 0;
        for s in 0..num_states {
            choice_start.push(choices.len());
            while i < sorted.len() && sorted[i].source == s {
                let action = sorted[i].action;
                let begin = targets.len();
                let mut exit = 0.0;
                while i < sorted.len() && sorted[i].source == s && sorted[i].action == action {
                    targets.push((sorted[i].target, sorted[i].rate));
                    exit += sorted[i].rate;
                    i += 1;
                }
                choices.push(Choice {
                    action,
                    exit_rate: exit,
                    targets: begin..targets.len(),
                });
            }
        }
        choice_start.push(choices.len());

        Self {
            num_states,
            actions,
            transitions,
            labels: BTreeMap::new(),
            choice_start,
            choices,
            targets,
        }
    }

    /// Builds a model and rejects it if any invariant is violated.
    pub fn checked(num_states: usize, actions: Vec<String>, transitions: Vec<Transition>) -> Result<Self> {
        let model = Self::new(num_states, actions, transitions);
        model.ensure_valid()?;
        Ok(model)
    }

    pub fn with_labels(mut self, labels: BTreeMap<usize, String>) -> Self {
        self.labels = labels;
        self
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn labels(&self) -> &BTreeMap<usize, String> {
        &self.labels
    }

    pub fn label(&self, state: usize) -> Option<&str> {
        self.labels.get(&state).map(String::as_str)
    }

    pub fn num_choices(&self) -> usize {
        self.choices.len()
    }

    /// Enabled actions of `state`, ascending by action index.
    pub fn choices(&self, state: usize) -> &[Choice] {
        &self.choices[self.choice_start[state]..self.choice_start[state + 1]]
    }

    /// `(target, rate)` pairs of a choice, ascending by target.
    pub fn targets(&self, choice: &Choice) -> &[(usize, f64)] {
        &self.targets[choice.targets.clone()]
    }

    pub fn enabled_actions(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        self.choices(state).iter().map(|c| c.action)
    }

    pub fn is_enabled(&self, state: usize, action: usize) -> bool {
        state < self.num_states && self.choice(state, action).is_some()
    }

    pub fn choice(&self, state: usize, action: usize) -> Option<&Choice> {
        let cs = self.choices(state);
        cs.binary_search_by_key(&action, |c| c.action).ok().map(|i| &cs[i])
    }

    fn enabled_choice(&self, state: usize, action: usize) -> Result<&Choice> {
        if state >= self.num_states {
            return Err(Error::StateOutOfRange(state));
        }
        self.choice(state, action)
            .ok_or(Error::ActionNotEnabled { state, action })
    }

    /// Total outgoing rate of `action` in `state`.
    pub fn exit_rate(&self, state: usize, action: usize) -> Result<f64> {
        self.enabled_choice(state, action).map(|c| c.exit_rate)
    }

    /// Jump probability `R(s,a,t) / E(s,a)`; zero when no triple exists.
    pub fn embedded_prob(&self, state: usize, action: usize, target: usize) -> Result<f64> {
        let c = self.enabled_choice(state, action)?;
        let ts = self.targets(c);
        Ok(ts
            .binary_search_by_key(&target, |&(t, _)| t)
            .map(|i| ts[i].1 / c.exit_rate)
            .unwrap_or(0.0))
    }

    /// Largest exit rate over all enabled state/action pairs.
    pub fn max_exit_rate(&self) -> f64 {
        self.choices.iter().map(|c| c.exit_rate).fold(0.0, f64::max)
    }

    /// True when every enabled pair has exit rate `lambda` within `rtol`.
    pub fn is_uniform(&self, lambda: f64, rtol: f64) -> bool {
        self.choices
            .iter()
            .all(|c| (c.exit_rate - lambda).abs() <= rtol * lambda)
    }

    pub fn is_ctmc(&self) -> bool {
        (0..self.num_states).all(|s| self.choices(s).len() == 1)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.num_states == 0 {
            out.push(Violation::NoStates);
        }
        let mut seen = BTreeSet::new();
        for (index, t) in self.transitions.iter().enumerate() {
            for state in [t.source, t.target] {
                if state >= self.num_states {
                    out.push(Violation::StateOutOfRange { index, state });
                }
            }
            if t.action >= self.actions.len() {
                out.push(Violation::ActionOutOfRange {
                    index,
                    action: t.action,
                });
            }
            if !(t.rate.is_finite() && t.rate > 0.0) {
                out.push(Violation::NonPositiveRate {
                    source: t.source,
                    action: t.action,
                    target: t.target,
                    rate: t.rate,
                });
            }
            if !seen.insert((t.source, t.action, t.target)) {
                out.push(Violation::DuplicateTransition {
                    source: t.source,
                    action: t.action,
                    target: t.target,
                });
            }
        }
        for s in 0..self.num_states {
            let enabled = self
                .choices(s)
                .iter()
                .any(|c| self.targets(c).iter().any(|&(_, r)| r > 0.0));
            if !enabled {
                out.push(Violation::NoEnabledAction { state: s });
            }
        }
        for &s in self.labels.keys() {
            if s >= self.num_states {
                out.push(Violation::LabelOutOfRange { state: s });
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(v))
        }
    }

    pub fn to_json(&self) -> ModelJson {
        ModelJson {
            states: self.num_states,
            actions: self.actions.clone(),
            transitions: self
                .transitions
                .iter()
                .map(|t| (t.source, t.action, t.target, t.rate))
                .collect(),
            labels: self.labels.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        }
    }

    /// Parses the JSON model format and validates the result.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: ModelJson = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "model".into(),
            source,
        })?;
        raw.into_model()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("model serialises")
    }
}

/// On-disk model format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    pub states: usize,
    pub actions: Vec<String>,
    pub transitions: Vec<(usize, usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
}

impl ModelJson {
    pub fn into_model(self) -> Result<Ctmdp> {
        let mut labels = BTreeMap::new();
        for (k, v) in self.labels {
            let s: usize = k
                .parse()
                .map_err(|_| Error::InvalidModel(vec![Violation::LabelOutOfRange { state: usize::MAX }]))?;
            labels.insert(s, v);
        }
        let transitions = self
            .transitions
            .into_iter()
            .map(|(s, a, t, r)| Transition::new(s, a, t, r))
            .collect();
        let model = Ctmdp::new(self.states, self.actions, transitions).with_labels(labels);
        model.ensure_valid()?;
        Ok(model)
    }
}

/// Set of goal states `G`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GoalSpec {
    #[serde(rename = "goal")]
    pub goal_states: BTreeSet<usize>,
}

impl GoalSpec {
    pub fn new(states: impl IntoIterator<Item = usize>) -> Self {
        Self {
            goal_states: states.into_iter().collect(),
        }
    }

    pub fn contains(&self, state: usize) -> bool {
        self.goal_states.contains(&state)
    }

    pub fn validate_for(&self, model: &Ctmdp) -> Result<()> {
        match self.goal_states.iter().find(|&&s| s >= model.num_states()) {
            Some(&state) => Err(Error::GoalOutOfRange {
                state,
                num_states: model.num_states(),
            }),
            None => Ok(()),
        }
    }

    /// Dense membership mask over `num_states` states.
    pub fn mask(&self, num_states: usize) -> Vec<bool> {
        let mut m = vec![false; num_states];
        for &s in &self.goal_states {
            if s < num_states {
                m[s] = true;
            }
        }
        m
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "goal".into(),
            source,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Early,
    Late,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Early => "early",
            Variant::Late => "late",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "early" => Ok(Variant::Early),
            "late" => Ok(Variant::Late),
            other => Err(Error::InvalidQuery(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    #[serde(rename = "max")]
    Maximize,
    #[serde(rename = "min")]
    Minimize,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Maximize => "max",
            Objective::Minimize => "min",
        }
    }

    /// Whether `candidate` strictly beats `incumbent`.
    #[inline]
    pub fn improves(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Objective::Maximize => candidate > incumbent,
            Objective::Minimize => candidate < incumbent,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Objective::Maximize),
            "min" => Ok(Objective::Minimize),
            other => Err(Error::InvalidQuery(format!("unknown objective {other:?}"))),
        }
    }
}

pub const DEFAULT_KAPPA: f64 = 0.1;

/// A time-bounded reachability query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Query {
    pub time_bound: f64,
    pub variant: Variant,
    pub objective: Objective,
    pub epsilon: f64,
    pub kappa: f64,
}

impl Query {
    pub fn new(time_bound: f64, variant: Variant, objective: Objective, epsilon: f64, kappa: f64) -> Result<Self> {
        let q = Self {
            time_bound,
            variant,
            objective,
            epsilon,
            kappa,
        };
        q.validate()?;
        Ok(q)
    }

    /// Maximal late reachability with the default truncation ratio.
    pub fn max_late(time_bound: f64, epsilon: f64) -> Result<Self> {
        Self::new(time_bound, Variant::Late, Objective::Maximize, epsilon, DEFAULT_KAPPA)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time_bound.is_finite() && self.time_bound > 0.0) {
            return Err(Error::InvalidQuery(format!(
                "time bound must be positive, got {}",
                self.time_bound
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidQuery(format!(
                "epsilon must lie in (0,1), got {}",
                self.epsilon
            )));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::InvalidQuery(format!(
                "kappa must lie in (0,1), got {}",
                self.kappa
            )));
        }
        Ok(())
    }

    /// Error budget allotted to Poisson truncation, `epsilon * kappa`.
    pub fn truncation_budget(&self) -> f64 {
        self.epsilon * self.kappa
    }

    /// Gap the bounds must close to, `epsilon * (1 - kappa)`.
    pub fn gap_target(&self) -> f64 {
        self.epsilon * (1.0 - self.kappa)
    }
}
