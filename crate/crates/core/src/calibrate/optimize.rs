use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nelder_mead::{minimize, SimplexOptions};
use crate::distribution::ObjectiveDistribution;
use crate::error::{Error, Result};
use crate::seeds::derive_seed;
use crate::simulator::{
    class_probs_into, evolve_into, metrics_of, run_circuit, CircuitParams, PhaseFunction,
    StateMetrics,
};

/// Metric the circuit parameters are tuned for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    MaxLambda,
    MaxExpectation,
    MinExpectation,
}

impl ObjectiveKind {
    fn metric(self, m: &StateMetrics) -> f64 {
        match self {
            ObjectiveKind::MaxLambda => m.lambda,
            ObjectiveKind::MaxExpectation | ObjectiveKind::MinExpectation => m.expectation,
        }
    }

    /// Sign that turns the metric into a quantity to minimize.
    fn sign(self) -> f64 {
        match self {
            ObjectiveKind::MinExpectation => 1.0,
            _ => -1.0,
        }
    }

    fn better(self, a: f64, b: f64) -> bool {
        self.sign() * a < self.sign() * b
    }
}

impl std::str::FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-lambda" | "lambda" => Ok(ObjectiveKind::MaxLambda),
            "max-expectation" | "expectation" => Ok(ObjectiveKind::MaxExpectation),
            "min-expectation" => Ok(ObjectiveKind::MinExpectation),
            other => Err(Error::Invalid(format!("unknown objective {other:?}"))),
        }
    }
}

/// Multi-start simplex search settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Number of starts, including the warm start when one is supplied.
    pub restarts: usize,
    /// Simplex iterations per start; `None` means 500·p.
    pub max_iters: Option<usize>,
    pub tol: f64,
    pub phase_fn: PhaseFunction,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 20,
            max_iters: None,
            tol: 1e-8,
            phase_fn: PhaseFunction::Objective,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_params: CircuitParams,
    /// λ or E of `best_params`, re-simulated.
    pub best_value: f64,
    pub metrics: StateMetrics,
    pub objective_kind: ObjectiveKind,
    pub restarts_used: usize,
    pub evaluations: usize,
    /// Best metric reached by each start, in start order.
    pub trace: Vec<f64>,
}

/// Sampling box for random starts: β ∈ [0, 2π); γ ∈ [0, 2π) when every phase
/// value is an integer, else γ ∈ [−π/c_max, π/c_max].
fn gamma_range(dist: &ObjectiveDistribution, phase_fn: &PhaseFunction) -> (f64, f64) {
    let integer = match phase_fn {
        PhaseFunction::Threshold { .. } => true,
        PhaseFunction::Objective => dist.integer_valued(),
    };
    if integer {
        (0.0, TAU)
    } else {
        let c_max = dist.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if c_max == 0.0 {
            (0.0, TAU)
        } else {
            (-PI / c_max, PI / c_max)
        }
    }
}

/// Tunes a depth-`p` circuit, warm-starting from the best circuit of every
/// smaller depth, and returns the depth-`p` result.
pub fn optimize_parameters(
    dist: &ObjectiveDistribution,
    p: usize,
    objective_kind: ObjectiveKind,
    config: &OptimizerConfig,
    seed: u64,
) -> Result<OptimizationResult> {
    let mut ladder = optimize_ladder(dist, p, objective_kind, config, seed)?;
    Ok(ladder.pop().expect("ladder holds depths 0..=p"))
}

/// Results for every depth `0..=p_max`, each warm-started from the previous one.
pub fn optimize_ladder(
    dist: &ObjectiveDistribution,
    p_max: usize,
    objective_kind: ObjectiveKind,
    config: &OptimizerConfig,
    seed: u64,
) -> Result<Vec<OptimizationResult>> {
    let mut out: Vec<OptimizationResult> = Vec::with_capacity(p_max + 1);
    for p in 0..=p_max {
        let warm = out.last().map(|r| &r.best_params);
        out.push(optimize_from(dist, p, objective_kind, config, seed, warm)?);
    }
    Ok(out)
}

/// One depth of the multi-start search. `warm`, when given, must have depth
/// `p − 1`; it is padded with a (γ, β) = (0, 0) layer and used as start 0.
pub fn optimize_from(
    dist: &ObjectiveDistribution,
    p: usize,
    objective_kind: ObjectiveKind,
    config: &OptimizerConfig,
    seed: u64,
    warm: Option<&CircuitParams>,
) -> Result<OptimizationResult> {
    let phase_fn = config.phase_fn;
    if p == 0 {
        let params = CircuitParams::depth_zero(phase_fn);
        let (_, metrics) = run_circuit(dist, &params);
        let value = objective_kind.metric(&metrics);
        return Ok(OptimizationResult {
            best_params: params,
            best_value: value,
            metrics,
            objective_kind,
            restarts_used: 0,
            evaluations: 1,
            trace: vec![value],
        });
    }
    if config.restarts == 0 {
        return Err(Error::Invalid("optimizer needs at least one start".into()));
    }
    let warm_start: Option<Vec<f64>> = match warm {
        Some(w) if w.p() + 1 == p => {
            let mut x = w.to_flat();
            x.extend([0.0, 0.0]);
            Some(x)
        }
        Some(w) => {
            return Err(Error::Invalid(format!(
                "warm start has depth {}, expected {}",
                w.p(),
                p - 1
            )));
        }
        None => None,
    };

    let (g_lo, g_hi) = gamma_range(dist, &phase_fn);
    let steps: Vec<f64> = (0..2 * p)
        .map(|i| {
            if i % 2 == 0 {
                (g_hi - g_lo) / 8.0
            } else {
                TAU / 8.0
            }
        })
        .collect();
    let opts = SimplexOptions {
        max_iters: config.max_iters.unwrap_or(500 * p),
        f_tol: config.tol,
        x_tol: config.tol.sqrt(),
    };
    let sign = objective_kind.sign();

    let runs: Vec<(Vec<f64>, f64, usize)> = (0..config.restarts)
        .into_par_iter()
        .map(|i| {
            let x0 = match (&warm_start, i) {
                (Some(w), 0) => w.clone(),
                _ => {
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(derive_seed(seed, &[p as u64, i as u64]));
                    (0..2 * p)
                        .map(|j| {
                            if j % 2 == 0 {
                                rng.gen_range(g_lo..g_hi)
                            } else {
                                rng.gen_range(0.0..TAU)
                            }
                        })
                        .collect()
                }
            };
            let mut amps: Vec<Complex64> = Vec::with_capacity(dist.classes());
            let mut probs = vec![0.0; dist.classes()];
            let f = |x: &[f64]| {
                let params = CircuitParams::from_flat(x, phase_fn);
                evolve_into(dist, &params, &mut amps);
                class_probs_into(dist, &amps, &mut probs);
                sign * objective_kind.metric(&metrics_of(dist, &probs))
            };
            let r = minimize(f, &x0, &steps, &opts);
            (r.x, sign * r.f, r.evaluations)
        })
        .collect();

    let mut best = 0;
    for (i, run) in runs.iter().enumerate().skip(1) {
        if objective_kind.better(run.1, runs[best].1) {
            best = i;
        }
    }
    let best_params = CircuitParams::from_flat(&runs[best].0, phase_fn);
    let (_, metrics) = run_circuit(dist, &best_params);
    Ok(OptimizationResult {
        best_value: objective_kind.metric(&metrics),
        metrics,
        best_params,
        objective_kind,
        restarts_used: runs.len(),
        evaluations: runs.iter().map(|r| r.2).sum(),
        trace: runs.iter().map(|r| r.1).collect(),
    })
}
