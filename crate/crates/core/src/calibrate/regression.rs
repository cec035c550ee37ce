use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_FIT_ITERS: usize = 500;
const STEP_TOL: f64 = 1e-9;
/// Relative SSE decrease below which an accepted step counts as stalled.
const COST_TOL: f64 = 1e-12;

/// Ordinary least squares line through `(n, ln ρ)` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Root-mean-square residual in ln units.
    pub rmse: f64,
}

pub fn fit_log_linear(points: &[(f64, f64)]) -> Result<LogLinearFit> {
    let distinct: BTreeSet<u64> = points.iter().map(|p| p.0.to_bits()).collect();
    if distinct.len() < 2 {
        return Err(Error::Fit {
            reason: "log-linear fit needs at least two distinct sizes".into(),
            theta: vec![],
            rmse: f64::NAN,
        });
    }
    let m = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    let rmse = (ss_res / m).sqrt();
    Ok(LogLinearFit {
        slope,
        intercept,
        r2,
        rmse,
    })
}

/// One averaged observation μ̄_r at problem size n.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuSample {
    pub n: f64,
    pub r: f64,
    pub mu: f64,
}

/// Which μ̂ family to fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MuVariant {
    /// √(−ln r / (θ1 n + θ2)) + θ3 / (1 + e^{−θ4 (n − θ5)}).
    Full,
    /// √(−ln r / (θ1 n + θ2)) + μ1, with the offset pinned.
    Fixed { mu1: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    /// λ̂ = min((2p+1)² e^{θ1 n + θ2}, 1).
    Lambda,
    MuFull,
    MuFixed,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub description: String,
    pub n_values: Vec<f64>,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
}

/// A fitted predictive model. For `MuFixed`, `theta[2]` is the pinned μ1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub variant: ModelVariant,
    pub theta: Vec<f64>,
    /// Training residuals; `None` for coefficients supplied by hand.
    pub rmse: Option<f64>,
    pub r2: Option<f64>,
    pub training: TrainingInfo,
    #[serde(skip)]
    pub iterations: usize,
    /// Sum of squared residuals after each accepted step.
    #[serde(skip)]
    pub sse_trace: Vec<f64>,
}

impl RegressionModel {
    /// Wraps a log-ρ line as a λ̂ model.
    pub fn lambda(fit: &LogLinearFit, training: TrainingInfo) -> Self {
        RegressionModel {
            variant: ModelVariant::Lambda,
            theta: vec![fit.slope, fit.intercept],
            rmse: Some(fit.rmse),
            r2: Some(fit.r2),
            training,
            iterations: 0,
            sse_trace: Vec::new(),
        }
    }

    /// μ̂ with the given coefficients, e.g. a reference table row.
    pub fn mu(variant: ModelVariant, theta: Vec<f64>) -> Result<Self> {
        let want = match variant {
            ModelVariant::Lambda => 2,
            ModelVariant::MuFull => 5,
            ModelVariant::MuFixed => 3,
        };
        if theta.len() != want {
            return Err(Error::Invalid(format!(
                "{variant:?} needs {want} coefficients, got {}",
                theta.len()
            )));
        }
        Ok(RegressionModel {
            variant,
            theta,
            rmse: None,
            r2: None,
            training: TrainingInfo::default(),
            iterations: 0,
            sse_trace: Vec::new(),
        })
    }

    /// μ̂(n, r); `None` when θ1 n + θ2 ≤ 0 makes the square-root term undefined.
    pub fn mu_hat(&self, n: f64, r: f64) -> Option<f64> {
        mu_eval(self.variant, &self.theta, n, r)
    }
}

fn mu_eval(variant: ModelVariant, theta: &[f64], n: f64, r: f64) -> Option<f64> {
    let den = theta[0] * n + theta[1];
    if den <= 0.0 {
        return None;
    }
    let root = (-r.ln() / den).max(0.0).sqrt();
    let offset = match variant {
        ModelVariant::MuFull => theta[2] / (1.0 + (-theta[3] * (n - theta[4])).exp()),
        ModelVariant::MuFixed => theta[2],
        ModelVariant::Lambda => return None,
    };
    Some(root + offset)
}

fn wrong_variant(want: &str, got: ModelVariant) -> Error {
    Error::Invalid(format!("expected a {want} model, got {got:?}"))
}

/// λ̂ = min((2p+1)² e^{θ1 n + θ2}, 1).
pub fn predict_lambda_ub(model: &RegressionModel, n: f64, p: usize) -> Result<f64> {
    if model.variant != ModelVariant::Lambda {
        return Err(wrong_variant("lambda", model.variant));
    }
    let q = (2 * p + 1) as f64;
    Ok((q * q * (model.theta[0] * n + model.theta[1]).exp()).min(1.0))
}

/// α̂ = min(μ̂(n, 1/(2p+1)²), 1). An undefined square-root term counts as unbounded.
pub fn predict_alpha_ub(model: &RegressionModel, n: f64, p: usize) -> Result<f64> {
    if model.variant == ModelVariant::Lambda {
        return Err(wrong_variant("mu", model.variant));
    }
    let q = (2 * p + 1) as f64;
    Ok(model.mu_hat(n, 1.0 / (q * q)).map_or(1.0, |m| m.min(1.0)))
}

/// Damped Gauss–Newton (Levenberg–Marquardt) fit of μ̂ to averaged μ̄_r samples.
///
/// The Jacobian is taken by central differences. Converges when an accepted
/// step has ∞-norm below 1e-9 or no damping level reduces the residual;
/// otherwise fails after 500 iterations with the last iterate.
pub fn fit_mu_model(samples: &[MuSample], variant: MuVariant) -> Result<RegressionModel> {
    let sizes: BTreeSet<u64> = samples.iter().map(|s| s.n.to_bits()).collect();
    let rs: BTreeSet<u64> = samples.iter().map(|s| s.r.to_bits()).collect();
    if sizes.len() < 3 || rs.len() < 5 {
        return Err(Error::Fit {
            reason: format!(
                "grid has {} sizes and {} r values; need at least 3 and 5",
                sizes.len(),
                rs.len()
            ),
            theta: vec![],
            rmse: f64::NAN,
        });
    }
    if samples
        .iter()
        .any(|s| !(s.r > 0.0 && s.r <= 1.0) || !s.mu.is_finite())
    {
        return Err(Error::Invalid(
            "samples need 0 < r <= 1 and finite mu".into(),
        ));
    }
    let n_min = samples.iter().map(|s| s.n).fold(f64::INFINITY, f64::min);
    // θ2 = −10(n_min − 1) keeps θ1 n + θ2 ≥ 10 on the training sizes
    let (model_variant, mut theta, free) = match variant {
        MuVariant::Full => (
            ModelVariant::MuFull,
            vec![10.0, -10.0 * (n_min - 1.0), 0.8, 0.1, 0.0],
            5,
        ),
        MuVariant::Fixed { mu1 } => (
            ModelVariant::MuFixed,
            vec![10.0, -10.0 * (n_min - 1.0), mu1],
            2,
        ),
    };

    let residuals = |theta: &[f64]| -> Option<DVector<f64>> {
        let mut out = DVector::zeros(samples.len());
        for (i, s) in samples.iter().enumerate() {
            out[i] = mu_eval(model_variant, theta, s.n, s.r)? - s.mu;
        }
        out.iter().all(|v| v.is_finite()).then_some(out)
    };
    let sse = |r: &DVector<f64>| r.norm_squared();
    let rmse_of = |v: f64| (v / samples.len() as f64).sqrt();

    let mut res = residuals(&theta).ok_or_else(|| Error::Fit {
        reason: "initial guess leaves the model domain".into(),
        theta: theta.clone(),
        rmse: f64::NAN,
    })?;
    let mut cost = sse(&res);
    let mut damping = 1e-3;
    let mut trace = vec![cost];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_FIT_ITERS {
        iterations += 1;
        let mut jac = DMatrix::zeros(samples.len(), free);
        for j in 0..free {
            let h = 1e-6 * theta[j].abs().max(1.0);
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[j] += h;
            minus[j] -= h;
            match (residuals(&plus), residuals(&minus)) {
                (Some(a), Some(b)) => jac.set_column(j, &((a - b) / (2.0 * h))),
                (Some(a), None) => jac.set_column(j, &((a - &res) / h)),
                (None, Some(b)) => jac.set_column(j, &((&res - b) / h)),
                (None, None) => {}
            }
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &res;
        let scale = jtj.diagonal().max().max(1e-300);

        let mut accepted = None;
        while damping <= 1e12 {
            let mut lhs = jtj.clone();
            for j in 0..free {
                lhs[(j, j)] += damping * jtj[(j, j)].max(1e-12 * scale);
            }
            let Some(step) = lhs.lu().solve(&(-&grad)) else {
                damping *= 10.0;
                continue;
            };
            let mut cand = theta.clone();
            for j in 0..free {
                cand[j] += step[j];
            }
            match residuals(&cand) {
                Some(r) if sse(&r) < cost => {
                    accepted = Some((cand, r, step.amax()));
                    break;
                }
                _ => damping *= 10.0,
            }
        }
        match accepted {
            Some((cand, r, step_norm)) => {
                let previous = cost;
                theta = cand;
                res = r;
                cost = sse(&res);
                trace.push(cost);
                damping = (damping / 10.0).max(1e-12);
                if step_norm < STEP_TOL || previous - cost <= COST_TOL * previous {
                    converged = true;
                    break;
                }
            }
            None => {
                converged = true;
                break;
            }
        }
    }

    let rmse = rmse_of(cost);
    if !converged {
        return Err(Error::Fit {
            reason: format!("no convergence after {MAX_FIT_ITERS} iterations"),
            theta,
            rmse,
        });
    }
    let mean = samples.iter().map(|s| s.mu).sum::<f64>() / samples.len() as f64;
    let ss_tot: f64 = samples.iter().map(|s| (s.mu - mean).powi(2)).sum();
    let r2 = (ss_tot > 0.0).then(|| 1.0 - cost / ss_tot);
    let n_values: Vec<f64> = sizes.iter().map(|&b| f64::from_bits(b)).collect();
    Ok(RegressionModel {
        variant: model_variant,
        training: TrainingInfo {
            description: String::new(),
            n_values,
            samples: samples.len(),
            mu1: match variant {
                MuVariant::Fixed { mu1 } => Some(mu1),
                MuVariant::Full => None,
            },
        },
        theta,
        rmse: Some(rmse),
        r2,
        iterations,
        sse_trace: trace,
    })
}
