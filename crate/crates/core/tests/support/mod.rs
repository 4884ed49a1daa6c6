//! Reference values computed without the solver.
#![allow(dead_code)]

use ctmdp_reach::{Ctmdp, GoalSpec, Objective};

/// P(Exp(rate) <= t).
pub fn exp_cdf(rate: f64, t: f64) -> f64 {
    1.0 - (-rate * t).exp()
}

/// P(Erlang(k, rate) <= t) by the finite series `1 - Σ_{i<k} e^{-x} x^i / i!`.
pub fn erlang_cdf(k: usize, rate: f64, t: f64) -> f64 {
    let x = rate * t;
    let mut term = (-x).exp();
    let mut below = 0.0;
    for i in 0..k {
        below += term;
        term *= x / (i + 1) as f64;
    }
    1.0 - below
}

/// P(Exp(a) + Exp(b) <= t) for `a != b`.
pub fn hypoexp_cdf(a: f64, b: f64, t: f64) -> f64 {
    1.0 - (b * (-a * t).exp() - a * (-b * t).exp()) / (b - a)
}

/// Poisson pmf from logarithms, `exp(i ln x - x - ln i!)`.
pub fn poisson_pmf(x: f64, i: usize) -> f64 {
    let ln_fact: f64 = (1..=i).map(|j| (j as f64).ln()).sum();
    (i as f64 * x.ln() - x - ln_fact).exp()
}

/// Poisson tail `P(X >= n)` as one minus the head sum.
pub fn poisson_tail(x: f64, n: usize) -> f64 {
    1.0 - (0..n).map(|i| poisson_pmf(x, i)).sum::<f64>()
}

/// Optimal time-bounded reachability over late (time-dependent) schedulers,
/// integrated with classical RK4 backwards from the deadline on
/// `dV/dτ (s) = opt_a Σ_t R(s,a,t) (V(t) - V(s))`, `V(goal) = 1`.
pub fn timed_value(model: &Ctmdp, goal: &GoalSpec, time_bound: f64, objective: Objective, steps: usize) -> Vec<f64> {
    let n = model.num_states();
    let is_goal = goal.mask(n);
    // rows[s][a] = list of (target, rate)
    let mut rows: Vec<Vec<Vec<(usize, f64)>>> = vec![vec![Vec::new(); model.actions().len()]; n];
    for t in model.transitions() {
        rows[t.source][t.action].push((t.target, t.rate));
    }
    let drift = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|s| {
                if is_goal[s] {
                    return 0.0;
                }
                let candidates = rows[s]
                    .iter()
                    .filter(|r| !r.is_empty())
                    .map(|r| r.iter().map(|&(t, rate)| rate * (v[t] - v[s])).sum::<f64>());
                match objective {
                    Objective::Maximize => candidates.fold(f64::NEG_INFINITY, f64::max),
                    Objective::Minimize => candidates.fold(f64::INFINITY, f64::min),
                }
            })
            .collect()
    };
    let h = time_bound / steps as f64;
    let mut v: Vec<f64> = is_goal.iter().map(|&g| if g { 1.0 } else { 0.0 }).collect();
    let axpy = |v: &[f64], k: &[f64], c: f64| -> Vec<f64> { v.iter().zip(k).map(|(x, d)| x + c * d).collect() };
    for _ in 0..steps {
        let k1 = drift(&v);
        let k2 = drift(&axpy(&v, &k1, h / 2.0));
        let k3 = drift(&axpy(&v, &k2, h / 2.0));
        let k4 = drift(&axpy(&v, &k3, h));
        for s in 0..n {
            v[s] += h / 6.0 * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
        }
    }
    v
}
