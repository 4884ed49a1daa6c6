//! Late and early uniformisation of a CTMDP to a common rate.
//!
//! Late uniformisation pads every state/action pair with a self-loop.
//! Early uniformisation routes the padding into a copy state `(s,a)` that
//! only offers the committed action `a`, so the scheduler cannot revise its
//! choice when a padding transition fires. Copy states are materialised
//! only for pairs whose exit rate is below the target rate; all other copies
//! are unreachable.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Choice, Ctmdp, GoalSpec, Transition, Variant};

/// Padding below `lambda * PAD_RTOL` is treated as zero and not stored.
const PAD_RTOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct UniformisedModel {
    pub model: Ctmdp,
    pub lambda: f64,
    pub variant: Variant,
    /// Uniformised state -> original state.
    pub origin_of: Vec<usize>,
    /// Original state -> uniformised entry state (`s` for late, `(s,⊥)` for early).
    pub entry_state_of: Vec<usize>,
    /// Committed action of each uniformised state; `None` for entry states.
    pub committed: Vec<Option<usize>>,
    pub goal: Vec<bool>,
}

impl UniformisedModel {
    pub fn num_states(&self) -> usize {
        self.model.num_states()
    }

    pub fn goal_spec(&self) -> GoalSpec {
        GoalSpec::new(self.goal.iter().enumerate().filter(|(_, &g)| g).map(|(s, _)| s))
    }

    pub fn mapping(&self) -> MappingJson {
        MappingJson {
            lambda: self.lambda,
            variant: self.variant,
            origin_of: self.origin_of.clone(),
            entry_state_of: self.entry_state_of.clone(),
            committed: self.committed.clone(),
            goal: self.goal_spec().goal_states.into_iter().collect(),
        }
    }
}

/// Sidecar file describing how a dumped uniformised model maps back.
#[derive(Debug, Clone, Serialize)]
pub struct MappingJson {
    pub lambda: f64,
    pub variant: Variant,
    pub origin_of: Vec<usize>,
    pub entry_state_of: Vec<usize>,
    pub committed: Vec<Option<usize>>,
    pub goal: Vec<usize>,
}

fn check_rate(model: &Ctmdp, goal: &GoalSpec, lambda: f64) -> Result<()> {
    model.ensure_valid()?;
    goal.validate_for(model)?;
    let lambda_max = model.max_exit_rate();
    // Exit rates are sums, so allow rounding-level slack at lambda == lambda_max.
    if !(lambda.is_finite() && lambda >= lambda_max * (1.0 - PAD_RTOL)) {
        return Err(Error::RateBelowMaxExit { lambda, lambda_max });
    }
    Ok(())
}

fn padding(lambda: f64, rate_out: f64) -> Option<f64> {
    let pad = lambda - rate_out;
    (pad > lambda * PAD_RTOL).then_some(pad)
}

pub fn uniformise(model: &Ctmdp, goal: &GoalSpec, lambda: f64, variant: Variant) -> Result<UniformisedModel> {
    match variant {
        Variant::Late => uniformise_late(model, goal, lambda),
        Variant::Early => uniformise_early(model, goal, lambda),
    }
}

pub fn uniformise_late(model: &Ctmdp, goal: &GoalSpec, lambda: f64) -> Result<UniformisedModel> {
    check_rate(model, goal, lambda)?;
    let n = model.num_states();
    let mut transitions = Vec::with_capacity(model.transitions().len() + model.num_choices());
    for s in 0..n {
        for c in model.choices(s) {
            let mut off_diagonal = 0.0;
            for &(t, r) in model.targets(c) {
                if t != s {
                    off_diagonal += r;
                    transitions.push(Transition::new(s, c.action, t, r));
                }
            }
            if let Some(diag) = padding(lambda, off_diagonal) {
                transitions.push(Transition::new(s, c.action, s, diag));
            }
        }
    }
    let uniform = Ctmdp::new(n, model.actions().to_vec(), transitions).with_labels(model.labels().clone());
    Ok(UniformisedModel {
        model: uniform,
        lambda,
        variant: Variant::Late,
        origin_of: (0..n).collect(),
        entry_state_of: (0..n).collect(),
        committed: vec![None; n],
        goal: goal.mask(n),
    })
}

pub fn uniformise_early(model: &Ctmdp, goal: &GoalSpec, lambda: f64) -> Result<UniformisedModel> {
    check_rate(model, goal, lambda)?;
    let n = model.num_states();

    // Entry states (s,⊥) keep indices 0..n; copies (s,a) follow in (s, a) order.
    let mut copy_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut origin_of: Vec<usize> = (0..n).collect();
    let mut committed: Vec<Option<usize>> = vec![None; n];
    for s in 0..n {
        for c in model.choices(s) {
            if padding(lambda, c.exit_rate).is_some() {
                copy_index.insert((s, c.action), origin_of.len());
                origin_of.push(s);
                committed.push(Some(c.action));
            }
        }
    }

    let mut transitions = Vec::new();
    // From (s,·) under a: original rates to (s',⊥), padding to (s,a).
    let mut emit = |from: usize, c: &Choice, copy: Option<usize>| {
        for &(t, r) in model.targets(c) {
            transitions.push(Transition::new(from, c.action, t, r));
        }
        if let (Some(copy), Some(pad)) = (copy, padding(lambda, c.exit_rate)) {
            transitions.push(Transition::new(from, c.action, copy, pad));
        }
    };
    for s in 0..n {
        for c in model.choices(s) {
            emit(s, c, copy_index.get(&(s, c.action)).copied());
        }
    }
    for (&(s, a), &copy) in &copy_index {
        let c = model.choice(s, a).expect("copy of an enabled pair");
        emit(copy, c, Some(copy));
    }

    let total = origin_of.len();
    let mut labels = BTreeMap::new();
    for (u, &s) in origin_of.iter().enumerate() {
        let base = model.label(s).map(str::to_owned).unwrap_or_else(|| s.to_string());
        let tag = match committed[u] {
            None => "⊥".to_owned(),
            Some(a) => model.actions()[a].clone(),
        };
        labels.insert(u, format!("({base},{tag})"));
    }
    let uniform = Ctmdp::new(total, model.actions().to_vec(), transitions).with_labels(labels);
    let goal_mask = goal.mask(n);
    Ok(UniformisedModel {
        model: uniform,
        lambda,
        variant: Variant::Early,
        goal: origin_of.iter().map(|&s| goal_mask[s]).collect(),
        origin_of,
        entry_state_of: (0..n).collect(),
        committed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UNIFORM_RTOL;

    fn one_hop() -> (Ctmdp, GoalSpec) {
        let m = Ctmdp::checked(
            2,
            vec!["a".into()],
            vec![Transition::new(0, 0, 1, 1.0), Transition::new(1, 0, 1, 1.0)],
        )
        .unwrap();
        (m, GoalSpec::new([1]))
    }

    #[test]
    fn late_pads_with_self_loop() {
        let (m, g) = one_hop();
        let u = uniformise_late(&m, &g, 3.0).unwrap();
        assert_eq!(u.model.embedded_prob(0, 0, 1).unwrap(), 1.0 / 3.0);
        let ts: Vec<_> = u.model.targets(u.model.choice(0, 0).unwrap()).to_vec();
        assert_eq!(ts, vec![(0, 2.0), (1, 1.0)]);
        // Pre-existing self-loop of state 1 is absorbed into the diagonal.
        let ts1: Vec<_> = u.model.targets(u.model.choice(1, 0).unwrap()).to_vec();
        assert_eq!(ts1, vec![(1, 3.0)]);
        assert!(u.model.is_uniform(3.0, UNIFORM_RTOL));
        assert_eq!(u.num_states(), 2);
    }

    #[test]
    fn late_at_max_exit_adds_nothing_where_already_uniform() {
        let m = Ctmdp::checked(
            2,
            vec!["a".into(), "b".into()],
            vec![
                Transition::new(0, 0, 1, 2.0),
                Transition::new(0, 1, 1, 1.0),
                Transition::new(1, 0, 0, 2.0),
            ],
        )
        .unwrap();
        let u = uniformise_late(&m, &GoalSpec::new([1]), 2.0).unwrap();
        assert_eq!(u.model.targets(u.model.choice(0, 0).unwrap()), &[(1, 2.0)]);
        assert_eq!(u.model.targets(u.model.choice(0, 1).unwrap()), &[(0, 1.0), (1, 1.0)]);
        assert_eq!(u.model.targets(u.model.choice(1, 0).unwrap()), &[(0, 2.0)]);
    }

    #[test]
    fn rate_below_max_exit_is_rejected() {
        let (m, g) = one_hop();
        assert!(matches!(
            uniformise_late(&m, &g, 0.5),
            Err(Error::RateBelowMaxExit { .. })
        ));
        assert!(matches!(
            uniformise_early(&m, &g, 0.5),
            Err(Error::RateBelowMaxExit { .. })
        ));
    }

    #[test]
    fn early_copies_per_enabled_action() {
        let m = Ctmdp::checked(
            1,
            vec!["a".into(), "b".into()],
            vec![Transition::new(0, 0, 0, 1.0), Transition::new(0, 1, 0, 2.0)],
        )
        .unwrap();
        let u = uniformise_early(&m, &GoalSpec::default(), 4.0).unwrap();
        assert_eq!(u.num_states(), 3);
        assert_eq!(u.committed, vec![None, Some(0), Some(1)]);
        assert_eq!(u.model.enabled_actions(1).collect::<Vec<_>>(), vec![0]);
        assert!(u.model.is_uniform(4.0, UNIFORM_RTOL));
    }

    #[test]
    fn early_freezes_commitment() {
        let (m, g) = one_hop();
        let u = uniformise_early(&m, &g, 3.0).unwrap();
        // (0,⊥)=0, (1,⊥)=1, (0,a)=2, (1,a)=3
        assert_eq!(u.origin_of, vec![0, 1, 0, 1]);
        let from_entry = u.model.targets(u.model.choice(0, 0).unwrap()).to_vec();
        assert_eq!(from_entry, vec![(1, 1.0), (2, 2.0)]);
        let from_copy = u.model.targets(u.model.choice(2, 0).unwrap()).to_vec();
        assert_eq!(from_copy, vec![(1, 1.0), (2, 2.0)]);
        assert_eq!(u.goal, vec![false, true, false, true]);
        assert_eq!(u.label_of(2), "(0,a)");
    }

    impl UniformisedModel {
        fn label_of(&self, s: usize) -> &str {
            self.model.label(s).unwrap()
        }
    }
}
