//! Browser bindings. Every export takes plain numbers or strings and
//! returns a JSON string, so the page needs no generated type glue.
//!
//! The `demo` module holds the logic and is tested natively; the
//! `#[wasm_bindgen]` functions only convert errors.

use wasm_bindgen::prelude::*;

pub mod demo {
    use ctmdp_reach::benchmarks::{
        generate_birth_chain, generate_sjs, timed_detour, two_speed_choice, Benchmark, SjsParams,
    };
    use ctmdp_reach::sweep::parse_grid;
    use ctmdp_reach::{
        gu_solve_with, poisson_weights, truncation_depth, Error, Objective, Query, Solution, SolverConfig, Variant,
    };
    use serde::Serialize;

    /// Largest grid a curve request may ask for.
    pub const MAX_POINTS: usize = 400;

    fn err(e: impl std::fmt::Display) -> String {
        e.to_string()
    }

    /// Builds one of the demo models. `params` is a comma-separated list
    /// whose meaning depends on `kind`:
    /// `sjs` = processors then job rates, `detour` = direct, first hop,
    /// second hop, `birth` = length then rate, `choice` = fast, slow.
    pub fn model(kind: &str, params: &str) -> Result<Benchmark, String> {
        let p = parse_grid(params).map_err(err)?;
        let need = |n: usize| {
            if p.len() < n {
                Err(format!("{kind} needs {n} parameters, got {}", p.len()))
            } else {
                Ok(())
            }
        };
        match kind {
            "sjs" => {
                need(2)?;
                generate_sjs(&SjsParams::new(p[0] as usize, p[1..].to_vec())).map_err(err)
            }
            "detour" => {
                need(3)?;
                positive(&p[..3])?;
                Ok(timed_detour(p[0], p[1], p[2]))
            }
            "birth" => {
                need(2)?;
                generate_birth_chain(p[0] as usize, p[1]).map_err(err)
            }
            "choice" => {
                need(2)?;
                positive(&p[..2])?;
                Ok(two_speed_choice(p[0], p[1]))
            }
            _ => Err(format!("unknown model kind {kind:?}")),
        }
    }

    fn positive(rates: &[f64]) -> Result<(), String> {
        match rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            Some(r) => Err(format!("rates must be positive, got {r}")),
            None => Ok(()),
        }
    }

    fn parse_query(t: f64, variant: &str, objective: &str, eps: f64) -> Result<Query, String> {
        let variant: Variant = variant.parse().map_err(err)?;
        let objective = match objective {
            "max" => Objective::Maximize,
            "min" => Objective::Minimize,
            other => return Err(format!("objective must be max or min, got {other:?}")),
        };
        Query::new(t, variant, objective, eps, ctmdp_reach::model::DEFAULT_KAPPA).map_err(err)
    }

    /// Keeps the best round when the rate cap is hit.
    fn solve(b: &Benchmark, q: &Query) -> Result<(Solution, bool), String> {
        match gu_solve_with(&b.model, &b.goal, q, &SolverConfig::default()) {
            Ok(s) => Ok((s, true)),
            Err(Error::LambdaCapExceeded { best, .. }) => Ok((*best, false)),
            Err(e) => Err(err(e)),
        }
    }

    #[derive(Serialize)]
    struct Weights {
        rate_time: f64,
        depth: usize,
        left: usize,
        weights: Vec<f64>,
        tail_mass: f64,
    }

    pub fn poisson_json(rate_time: f64, delta: f64) -> Result<String, String> {
        let depth = truncation_depth(rate_time, delta).map_err(err)?;
        if depth > 100_000 {
            return Err(format!("depth {depth} is too large to plot"));
        }
        let p = poisson_weights(rate_time, depth).map_err(err)?;
        let out = Weights {
            rate_time,
            depth,
            left: p.support().start,
            weights: p.weights(),
            tail_mass: p.tail_mass,
        };
        serde_json::to_string(&out).map_err(err)
    }

    #[derive(Serialize)]
    struct Curve {
        model: String,
        states: usize,
        times: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        value: Vec<f64>,
        rounds: Vec<usize>,
        converged: Vec<bool>,
    }

    /// Bounds at the initial state for `points` time bounds spread evenly
    /// over `(0, t_max]`.
    pub fn curve_json(
        kind: &str,
        params: &str,
        variant: &str,
        objective: &str,
        eps: f64,
        t_max: f64,
        points: usize,
    ) -> Result<String, String> {
        if points == 0 || points > MAX_POINTS {
            return Err(format!("points must lie in 1..={MAX_POINTS}"));
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(format!("time bound must be positive, got {t_max}"));
        }
        let b = model(kind, params)?;
        let mut c = Curve {
            model: b.name.clone(),
            states: b.model.num_states(),
            times: Vec::with_capacity(points),
            lower: Vec::with_capacity(points),
            upper: Vec::with_capacity(points),
            value: Vec::with_capacity(points),
            rounds: Vec::with_capacity(points),
            converged: Vec::with_capacity(points),
        };
        for i in 1..=points {
            let t = t_max * i as f64 / points as f64;
            let (sol, ok) = solve(&b, &parse_query(t, variant, objective, eps)?)?;
            let s = b.initial;
            c.times.push(t);
            c.lower.push(sol.bounds.lower[s]);
            c.upper.push(sol.bounds.upper[s]);
            c.value.push(sol.bounds.value[s]);
            c.rounds.push(sol.bounds.outer_iterations);
            c.converged.push(ok);
        }
        serde_json::to_string(&c).map_err(err)
    }

    #[derive(Serialize)]
    struct Round {
        lambda: f64,
        depth: usize,
        gap: f64,
    }

    #[derive(Serialize)]
    struct Trace {
        model: String,
        target: f64,
        converged: bool,
        value: f64,
        lower: f64,
        upper: f64,
        rounds: Vec<Round>,
    }

    /// Per-round rate, depth and gap of one solve.
    pub fn trace_json(
        kind: &str,
        params: &str,
        variant: &str,
        objective: &str,
        eps: f64,
        t: f64,
    ) -> Result<String, String> {
        let b = model(kind, params)?;
        let q = parse_query(t, variant, objective, eps)?;
        let (sol, converged) = solve(&b, &q)?;
        let s = b.initial;
        let out = Trace {
            model: b.name.clone(),
            target: q.gap_target(),
            converged,
            value: sol.bounds.value[s],
            lower: sol.bounds.lower[s],
            upper: sol.bounds.upper[s],
            rounds: sol
                .bounds
                .rounds
                .iter()
                .map(|r| Round {
                    lambda: r.lambda,
                    depth: r.depth,
                    gap: r.gap,
                })
                .collect(),
        };
        serde_json::to_string(&out).map_err(err)
    }
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Poisson weights for `λT` truncated so the tail is at most `delta`.
#[wasm_bindgen]
pub fn poisson(rate_time: f64, delta: f64) -> Result<String, JsError> {
    js(demo::poisson_json(rate_time, delta))
}

/// Lower and upper bounds at the initial state over a grid of time bounds.
#[wasm_bindgen]
pub fn value_curve(
    kind: &str,
    params: &str,
    variant: &str,
    objective: &str,
    eps: f64,
    t_max: f64,
    points: usize,
) -> Result<String, JsError> {
    js(demo::curve_json(kind, params, variant, objective, eps, t_max, points))
}

/// Gap of every rate-doubling round for one time bound.
#[wasm_bindgen]
pub fn gap_trace(
    kind: &str,
    params: &str,
    variant: &str,
    objective: &str,
    eps: f64,
    t: f64,
) -> Result<String, JsError> {
    js(demo::trace_json(kind, params, variant, objective, eps, t))
}
