mod support;

use approx::assert_abs_diff_eq;
use ctmdp_reach::benchmarks::{
    bundled_suite, generate_birth_chain, generate_sjs, single_exponential, timed_detour, two_speed_choice, SjsParams,
};
use ctmdp_reach::poisson::truncation_for;
use ctmdp_reach::simulate::{simulate_baseline, simulate_scheduler, BaselinePolicy, SimConfig};
use ctmdp_reach::solver::{evaluate_scheduler, lower_bound, upper_bound};
use ctmdp_reach::{gu_solve, poisson_weights, truncation_depth, uniformise, Objective, Query, Variant};
use support::*;

fn query(t: f64, variant: Variant, objective: Objective, eps: f64) -> Query {
    Query::new(t, variant, objective, eps, 0.1).unwrap()
}

#[test]
fn erlang_oracle_matches_reference_values() {
    assert_abs_diff_eq!(erlang_cdf(2, 1.0, 1.0), 0.2642411, epsilon = 1e-7);
    assert_abs_diff_eq!(erlang_cdf(1, 1.0, 1.0), 0.6321206, epsilon = 1e-7);
    assert_abs_diff_eq!(
        hypoexp_cdf(2.0, 1.0, 1.0),
        1.0 - 2.0 * (-1.0f64).exp() + (-2.0f64).exp(),
        epsilon = 1e-15
    );
}

#[test]
fn birth_chains_match_erlang() {
    for (n, rate, t) in [(2, 1.0, 1.0), (3, 1.0, 1.0), (4, 0.5, 3.0), (6, 2.5, 1.5)] {
        let b = generate_birth_chain(n, rate).unwrap();
        for variant in [Variant::Late, Variant::Early] {
            let sol = gu_solve(&b.model, &b.goal, &query(t, variant, Objective::Maximize, 1e-6)).unwrap();
            assert_abs_diff_eq!(sol.bounds.value[0], erlang_cdf(n - 1, rate, t), epsilon = 1e-6);
        }
    }
}

#[test]
fn birth_chain_small_horizon_goes_to_zero() {
    let b = generate_birth_chain(2, 1.0).unwrap();
    let sol = gu_solve(
        &b.model,
        &b.goal,
        &query(1e-6, Variant::Late, Objective::Maximize, 1e-6),
    )
    .unwrap();
    assert!(sol.bounds.value[0] < 2e-6);
}

#[test]
fn early_and_late_coincide_on_ctmcs() {
    let b = generate_birth_chain(5, 1.3).unwrap();
    let late = gu_solve(&b.model, &b.goal, &query(2.0, Variant::Late, Objective::Maximize, 1e-6)).unwrap();
    let early = gu_solve(
        &b.model,
        &b.goal,
        &query(2.0, Variant::Early, Objective::Maximize, 1e-6),
    )
    .unwrap();
    for s in 0..5 {
        assert_abs_diff_eq!(late.bounds.value[s], early.bounds.value[s], epsilon = 2e-6);
    }
}

#[test]
fn two_speed_max_and_min() {
    let b = two_speed_choice(2.0, 1.0);
    for variant in [Variant::Late, Variant::Early] {
        let max = gu_solve(&b.model, &b.goal, &query(1.0, variant, Objective::Maximize, 1e-6)).unwrap();
        let min = gu_solve(&b.model, &b.goal, &query(1.0, variant, Objective::Minimize, 1e-6)).unwrap();
        assert_abs_diff_eq!(max.bounds.value[0], exp_cdf(2.0, 1.0), epsilon = 1e-6);
        assert_abs_diff_eq!(min.bounds.value[0], exp_cdf(1.0, 1.0), epsilon = 1e-6);
    }
}

#[test]
fn single_processor_sjs_is_hypoexponential() {
    let b = generate_sjs(&SjsParams::new(1, vec![2.0, 1.0])).unwrap();
    for objective in [Objective::Maximize, Objective::Minimize] {
        let sol = gu_solve(&b.model, &b.goal, &query(1.0, Variant::Late, objective, 1e-6)).unwrap();
        assert_abs_diff_eq!(sol.bounds.value[b.initial], hypoexp_cdf(2.0, 1.0, 1.0), epsilon = 1e-6);
    }
}

#[test]
fn detour_matches_timed_ode() {
    let b = timed_detour(1.0, 10.0, 2.0);
    for objective in [Objective::Maximize, Objective::Minimize] {
        let oracle = timed_value(&b.model, &b.goal, 1.0, objective, 20_000)[0];
        let sol = gu_solve(&b.model, &b.goal, &query(1.0, Variant::Late, objective, 1e-4)).unwrap();
        let (lo, hi) = (sol.bounds.lower[0], sol.bounds.upper[0]);
        assert!(
            lo - 1e-5 <= oracle && oracle <= hi + 1e-5,
            "{objective}: {lo} {oracle} {hi}"
        );
        assert_abs_diff_eq!(sol.bounds.value[0], oracle, epsilon = 1e-4);
    }
}

#[test]
fn sjs_max_matches_timed_ode() {
    let b = generate_sjs(&SjsParams::new(2, vec![1.0, 2.0, 3.0])).unwrap();
    let oracle = timed_value(&b.model, &b.goal, 1.0, Objective::Maximize, 10_000);
    let sol = gu_solve(&b.model, &b.goal, &query(1.0, Variant::Late, Objective::Maximize, 1e-6)).unwrap();
    for (got, want) in sol.bounds.value.iter().zip(&oracle) {
        assert_abs_diff_eq!(*got, *want, epsilon = 1e-6);
    }
}

#[test]
fn detour_early_is_below_late_for_max() {
    let b = timed_detour(1.0, 10.0, 2.0);
    let late = gu_solve(&b.model, &b.goal, &query(1.0, Variant::Late, Objective::Maximize, 1e-6)).unwrap();
    let early = gu_solve(
        &b.model,
        &b.goal,
        &query(1.0, Variant::Early, Objective::Maximize, 1e-6),
    )
    .unwrap();
    assert!(early.bounds.value[0] <= late.bounds.value[0] + 2e-6);
    let late = gu_solve(&b.model, &b.goal, &query(1.0, Variant::Late, Objective::Minimize, 1e-4)).unwrap();
    let early = gu_solve(
        &b.model,
        &b.goal,
        &query(1.0, Variant::Early, Objective::Minimize, 1e-4),
    )
    .unwrap();
    // Late schedulers are more powerful in either direction.
    assert!(late.bounds.value[0] <= early.bounds.value[0] + 2e-4);
}

#[test]
fn poisson_matches_direct_pmf() {
    for x in [0.5, 1.0, 7.3, 40.0] {
        let n = truncation_depth(x, 1e-9).unwrap();
        let p = poisson_weights(x, n).unwrap();
        for i in 0..n {
            assert_abs_diff_eq!(p.weight(i), poisson_pmf(x, i), epsilon = 1e-13);
        }
        assert!((p.tail_mass - poisson_tail(x, n)).abs() < 1e-12);
        assert!(p.tail_mass <= 1e-9);
    }
    let p = poisson_weights(0.5, 3).unwrap();
    let w = p.weights();
    for (got, want) in w.iter().zip([0.6065307, 0.3032653, 0.0758163]) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-7);
    }
}

#[test]
fn uniformised_values_sandwich_oracles_at_any_rate() {
    let b = two_speed_choice(2.0, 1.0);
    for factor in [1.0, 1.7, 4.0, 32.0] {
        for variant in [Variant::Late, Variant::Early] {
            let um = uniformise(&b.model, &b.goal, 2.0 * factor, variant).unwrap();
            let trunc = truncation_for(um.lambda, 1.0, 1e-7).unwrap();
            let (u, _) = lower_bound(&um, &trunc, Objective::Maximize);
            let v = upper_bound(&um, &trunc, Objective::Maximize);
            assert!(u[0] - 1e-7 <= exp_cdf(2.0, 1.0) && exp_cdf(2.0, 1.0) <= v[0] + 1e-7);
        }
    }
}

#[test]
fn frozen_scheduler_reproduces_lower_bound_on_suite() {
    for b in bundled_suite() {
        for variant in [Variant::Late, Variant::Early] {
            let um = uniformise(&b.model, &b.goal, b.model.max_exit_rate() * 2.0, variant).unwrap();
            let trunc = truncation_for(um.lambda, 1.0, 1e-5).unwrap();
            let (u, sched) = lower_bound(&um, &trunc, Objective::Maximize);
            assert_eq!(evaluate_scheduler(&um, &trunc, &sched).unwrap(), u, "{}", b.name);
        }
    }
}

#[test]
fn fixed_policies_simulate_two_speed_rates() {
    let b = two_speed_choice(2.0, 1.0);
    let cfg = SimConfig::new(200_000, 3, 1.0);
    for (action, rate) in [(0, 2.0), (1, 1.0)] {
        let policy = BaselinePolicy::FixedActions([(0, action)].into());
        let out = simulate_baseline(&b.model, &b.goal, &policy, &cfg, 0).unwrap();
        assert!((out.estimate - exp_cdf(rate, 1.0)).abs() <= 3.0 * out.half_width + 1e-3);
    }
}

#[test]
fn simulation_is_invariant_under_rate_doubling() {
    let b = single_exponential(1.0);
    let cfg = SimConfig::new(200_000, 11, 1.0);
    let mut estimates = Vec::new();
    for lambda in [1.0, 2.0] {
        let um = uniformise(&b.model, &b.goal, lambda, Variant::Late).unwrap();
        let trunc = truncation_for(lambda, 1.0, 1e-7).unwrap();
        let (_, sched) = lower_bound(&um, &trunc, Objective::Maximize);
        estimates.push(simulate_scheduler(&um, &sched, &cfg, 0).unwrap());
    }
    let tol = 3.0 * (estimates[0].half_width.powi(2) + estimates[1].half_width.powi(2)).sqrt();
    assert!((estimates[0].estimate - estimates[1].estimate).abs() <= tol);
}
