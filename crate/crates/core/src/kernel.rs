//! Flat embedded-probability matrix used by the backward recursions and the
//! simulator.

use crate::model::{Ctmdp, Objective};

#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    choice_start: Vec<usize>,
    action: Vec<usize>,
    entry_start: Vec<usize>,
    target: Vec<usize>,
    prob: Vec<f64>,
}

impl Kernel {
    pub fn new(model: &Ctmdp) -> Self {
        let n = model.num_states();
        let mut k = Kernel {
            choice_start: Vec::with_capacity(n + 1),
            action: Vec::with_capacity(model.num_choices()),
            entry_start: Vec::with_capacity(model.num_choices() + 1),
            target: Vec::new(),
            prob: Vec::new(),
        };
        for s in 0..n {
            k.choice_start.push(k.action.len());
            for c in model.choices(s) {
                k.action.push(c.action);
                k.entry_start.push(k.target.len());
                for &(t, r) in model.targets(c) {
                    k.target.push(t);
                    k.prob.push(r / c.exit_rate);
                }
            }
        }
        k.choice_start.push(k.action.len());
        k.entry_start.push(k.target.len());
        k
    }

    pub fn num_states(&self) -> usize {
        self.choice_start.len() - 1
    }

    #[inline]
    pub fn choices(&self, s: usize) -> std::ops::Range<usize> {
        self.choice_start[s]..self.choice_start[s + 1]
    }

    #[inline]
    pub fn entries(&self, c: usize) -> (&[usize], &[f64]) {
        let r = self.entry_start[c]..self.entry_start[c + 1];
        (&self.target[r.clone()], &self.prob[r])
    }

    /// Σ_t P(c, t) x(t), accumulated in ascending target order.
    #[inline]
    pub fn expect(&self, c: usize, x: &[f64]) -> f64 {
        let (ts, ps) = self.entries(c);
        let mut acc = 0.0;
        for (&t, &p) in ts.iter().zip(ps) {
            acc += p * x[t];
        }
        acc
    }

    /// Optimal one-step backup of `x` at `s`; ties go to the lowest action.
    #[inline]
    pub fn backup(&self, s: usize, x: &[f64], objective: Objective) -> (f64, usize) {
        let mut cs = self.choices(s);
        let first = cs.next().expect("every state has an enabled action");
        let mut best = self.expect(first, x);
        let mut arg = self.action[first];
        for c in cs {
            let v = self.expect(c, x);
            if objective.improves(v, best) {
                best = v;
                arg = self.action[c];
            }
        }
        (best, arg)
    }

    pub fn choice_of(&self, s: usize, action: usize) -> Option<usize> {
        self.choices(s).find(|&c| self.action[c] == action)
    }

    pub fn first_action(&self, s: usize) -> usize {
        self.action[self.choice_start[s]]
    }
}
