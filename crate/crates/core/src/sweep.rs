//! Parameter sweeps over models, time bounds, precisions, variants and
//! objectives, written as one CSV row per configuration.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{bundled_suite, generate_birth_chain, generate_sjs, Benchmark, SjsParams};
use crate::error::{Error, Result};
use crate::model::{Ctmdp, GoalSpec, Objective, Query, Variant, DEFAULT_KAPPA};
use crate::solver::{gu_solve_with, BoundsResult, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepModel {
    /// The bundled regression suite.
    Suite,
    Sjs(SjsParams),
    Birth {
        n: usize,
        rate: f64,
    },
    File {
        path: PathBuf,
        goal: Vec<usize>,
        #[serde(default)]
        initial: usize,
        #[serde(default)]
        name: Option<String>,
    },
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::Late]
}

fn default_objectives() -> Vec<Objective> {
    vec![Objective::Maximize]
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

fn default_max_rounds() -> usize {
    SolverConfig::default().max_rounds
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub models: Vec<SweepModel>,
    pub time_bounds: Vec<f64>,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "default_objectives")]
    pub objectives: Vec<Objective>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    /// CSV destination used when the caller does not name one.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl SweepSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "sweep spec".into(),
            source,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("models", self.models.is_empty()),
            ("time_bounds", self.time_bounds.is_empty()),
            ("epsilons", self.epsilons.is_empty()),
            ("variants", self.variants.is_empty()),
            ("objectives", self.objectives.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidQuery(format!("sweep grid {name} is empty")));
        }
        for &t in &self.time_bounds {
            for &e in &self.epsilons {
                Query::new(t, Variant::Late, Objective::Maximize, e, self.kappa)?;
            }
        }
        Ok(())
    }

    /// Number of rows the sweep will produce, given the expanded model list.
    pub fn grid_size(&self, models: usize) -> usize {
        models * self.variants.len() * self.objectives.len() * self.time_bounds.len() * self.epsilons.len()
    }

    fn expand_models(&self, base_dir: &Path) -> Result<Vec<Benchmark>> {
        let mut out = Vec::new();
        for m in &self.models {
            match m {
                SweepModel::Suite => out.extend(bundled_suite()),
                SweepModel::Sjs(p) => out.push(generate_sjs(p)?),
                SweepModel::Birth { n, rate } => out.push(generate_birth_chain(*n, *rate)?),
                SweepModel::File {
                    path,
                    goal,
                    initial,
                    name,
                } => {
                    let full = base_dir.join(path);
                    let text = std::fs::read_to_string(&full).map_err(|source| Error::Io {
                        path: full.display().to_string(),
                        source,
                    })?;
                    let model = Ctmdp::from_json_str(&text)?;
                    let goal = GoalSpec::new(goal.iter().copied());
                    goal.validate_for(&model)?;
                    if *initial >= model.num_states() {
                        return Err(Error::StateOutOfRange(*initial));
                    }
                    out.push(Benchmark {
                        name: name.clone().unwrap_or_else(|| path.display().to_string()),
                        model,
                        goal,
                        initial: *initial,
                    });
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub model: String,
    pub variant: Variant,
    pub objective: Objective,
    #[serde(rename = "T")]
    pub time_bound: f64,
    pub eps: f64,
    pub kappa: f64,
    pub value: f64,
    pub gap: f64,
    pub lambda: f64,
    pub depth: usize,
    pub outer_iters: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub row: SweepRow,
    pub bounds: BoundsResult,
    pub initial: usize,
    pub converged: bool,
}

/// Runs every configuration in grid order: model, variant, objective, T, ε.
/// Relative file paths are resolved against `base_dir`.
pub fn run_sweep(spec: &SweepSpec, base_dir: &Path) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let models = spec.expand_models(base_dir)?;
    let cfg = SolverConfig {
        max_rounds: spec.max_rounds,
        ..SolverConfig::default()
    };
    let mut records = Vec::with_capacity(spec.grid_size(models.len()));
    for b in &models {
        for &variant in &spec.variants {
            for &objective in &spec.objectives {
                for &t in &spec.time_bounds {
                    for &eps in &spec.epsilons {
                        let query = Query::new(t, variant, objective, eps, spec.kappa)?;
                        let start = Instant::now();
                        let outcome = gu_solve_with(&b.model, &b.goal, &query, &cfg);
                        let wall = start.elapsed().as_secs_f64();
                        let (solution, converged) = match outcome {
                            Ok(s) => (s, true),
                            Err(Error::LambdaCapExceeded { best, .. }) => {
                                warn!("{}: {variant} {objective} T={t} eps={eps} did not converge", b.name);
                                (*best, false)
                            }
                            Err(e) => return Err(e),
                        };
                        let bounds = solution.bounds;
                        records.push(SweepRecord {
                            row: SweepRow {
                                model: b.name.clone(),
                                variant,
                                objective,
                                time_bound: t,
                                eps,
                                kappa: spec.kappa,
                                value: bounds.value[b.initial],
                                gap: bounds.gap,
                                lambda: bounds.lambda_used,
                                depth: bounds.depth_used,
                                outer_iters: bounds.outer_iterations,
                                wall_seconds: wall,
                            },
                            bounds,
                            initial: b.initial,
                            converged,
                        });
                    }
                }
            }
        }
    }
    Ok(records)
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(&r.row)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv>".into(),
        source,
    })?;
    Ok(())
}

/// Parses `a,b,c` or an inclusive range `start:stop:step`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidQuery(format!("cannot parse grid {text:?}"));
    if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // Round to 12 significant digits so 0.1 + 2*0.1 prints as 0.3.
        Ok((0..count)
            .map(|i| {
                let x = start + i as f64 * step;
                format!("{x:.12e}").parse().expect("round trip")
            })
            .collect())
    } else {
        text.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    }
}
