//! Exact Grover-mixer QAOA evolution.
//!
//! Solutions sharing an objective value always carry the same amplitude, so
//! the state is stored as one per-solution amplitude per objective class and
//! each layer costs O(classes). [`run_reference`] keeps one amplitude per
//! solution and is used to validate the compressed path.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distribution::ObjectiveDistribution;
use crate::error::{Error, Result};
use crate::problems::{enumerate_feasible, Orientation, ProblemInstance};

/// Largest feasible set the per-solution reference path will simulate.
pub const REFERENCE_CAP: u64 = 100_000;

/// Tolerance for deciding that an angle is an integer multiple of 2π.
const ANGLE_TOL: f64 = 1e-9;

/// Phase function 𝒞 applied by the phase separator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum PhaseFunction {
    /// 𝒞(c) = c.
    #[default]
    Objective,
    /// 𝒞(c) = 1 if c ≤ th, else 0, for either orientation.
    Threshold { th: f64 },
}

impl PhaseFunction {
    pub fn eval(&self, c: f64) -> f64 {
        match *self {
            PhaseFunction::Objective => c,
            PhaseFunction::Threshold { th } => {
                if c <= th {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Depth-p circuit parameters; layer `i` applies phase `gammas[i]` then mixer `betas[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct CircuitParams {
    gammas: Vec<f64>,
    betas: Vec<f64>,
    phase_fn: PhaseFunction,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    p: usize,
    gammas: Vec<f64>,
    betas: Vec<f64>,
    #[serde(default)]
    phase_fn: PhaseFunction,
}

impl TryFrom<RawParams> for CircuitParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        if raw.gammas.len() != raw.p {
            return Err(Error::Invalid(format!(
                "p = {} but {} gammas",
                raw.p,
                raw.gammas.len()
            )));
        }
        CircuitParams::new(raw.gammas, raw.betas, raw.phase_fn)
    }
}

impl From<CircuitParams> for RawParams {
    fn from(c: CircuitParams) -> Self {
        RawParams {
            p: c.gammas.len(),
            gammas: c.gammas,
            betas: c.betas,
            phase_fn: c.phase_fn,
        }
    }
}

impl CircuitParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>, phase_fn: PhaseFunction) -> Result<Self> {
        if gammas.len() != betas.len() {
            return Err(Error::Invalid(format!(
                "{} gammas but {} betas",
                gammas.len(),
                betas.len()
            )));
        }
        if gammas.iter().chain(&betas).any(|x| !x.is_finite()) {
            return Err(Error::Invalid("circuit angles must be finite".into()));
        }
        Ok(CircuitParams {
            gammas,
            betas,
            phase_fn,
        })
    }

    /// The empty circuit: the uniform superposition itself.
    pub fn depth_zero(phase_fn: PhaseFunction) -> Self {
        CircuitParams {
            gammas: Vec::new(),
            betas: Vec::new(),
            phase_fn,
        }
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn phase_fn(&self) -> PhaseFunction {
        self.phase_fn
    }

    /// Flattened `[γ1, β1, γ2, β2, …]`.
    pub(crate) fn to_flat(&self) -> Vec<f64> {
        self.gammas
            .iter()
            .zip(&self.betas)
            .flat_map(|(&g, &b)| [g, b])
            .collect()
    }

    pub(crate) fn from_flat(x: &[f64], phase_fn: PhaseFunction) -> Self {
        CircuitParams {
            gammas: x.iter().step_by(2).copied().collect(),
            betas: x.iter().skip(1).step_by(2).copied().collect(),
            phase_fn,
        }
    }
}

/// λ, α, E and TTS of a prepared state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateMetrics {
    /// Probability of measuring an optimal solution.
    pub lambda: f64,
    /// E / max C; only for maximization with a positive maximum.
    pub alpha: Option<f64>,
    pub expectation: f64,
    /// Expected number of shots to see an optimum, 1/λ.
    pub tts: f64,
}

impl StateMetrics {
    /// `instance_id,p,lambda,alpha,expectation,tts`; alpha is blank when undefined.
    pub fn csv_row(&self, instance_id: &str, p: usize) -> String {
        let mut row = String::new();
        let _ = write!(row, "{instance_id},{p},{},", self.lambda);
        if let Some(a) = self.alpha {
            let _ = write!(row, "{a}");
        }
        let _ = write!(row, ",{},{}", self.expectation, self.tts);
        row
    }

    pub const CSV_HEADER: &'static str = "instance_id,p,lambda,alpha,expectation,tts";
}

/// State of the circuit as one per-solution amplitude per objective class.
///
/// Amplitudes are stored scaled by √|F|, so the uniform start is exactly 1
/// and depth-zero probabilities are exactly count/|F|.
#[derive(Clone, Debug)]
pub struct CompressedState<'a> {
    amps: Vec<Complex64>,
    dist: &'a ObjectiveDistribution,
}

/// Uniform superposition over F.
pub fn init_state(dist: &ObjectiveDistribution) -> CompressedState<'_> {
    CompressedState {
        amps: vec![Complex64::new(1.0, 0.0); dist.classes()],
        dist,
    }
}

impl<'a> CompressedState<'a> {
    /// Per-solution amplitude of each class.
    pub fn amplitudes(&self) -> Vec<Complex64> {
        let scale = (self.dist.total() as f64).sqrt();
        self.amps.iter().map(|a| a / scale).collect()
    }

    pub fn distribution(&self) -> &'a ObjectiveDistribution {
        self.dist
    }

    /// e^{-iγ𝒞(c_j)} on every class.
    pub fn apply_phase(&self, gamma: f64, phase_fn: &PhaseFunction) -> CompressedState<'a> {
        let mut next = self.clone();
        phase_in_place(&mut next.amps, self.dist.values(), gamma, phase_fn);
        next
    }

    /// I − (1 − e^{-iβ})|F⟩⟨F|.
    pub fn apply_mixer(&self, beta: f64) -> CompressedState<'a> {
        let mut next = self.clone();
        mixer_in_place(&mut next.amps, self.dist.counts(), self.dist.total(), beta);
        next
    }

    /// Probability mass per class, counts_j·|a_j|².
    pub fn class_probabilities(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.amps.len()];
        class_probs_into(self.dist, &self.amps, &mut out);
        out
    }

    /// Probability of each individual solution in class j, |a_j|².
    pub fn solution_probabilities(&self) -> Vec<f64> {
        let total = self.dist.total() as f64;
        self.amps.iter().map(|a| a.norm_sqr() / total).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.class_probabilities().iter().sum()
    }

    pub fn metrics(&self) -> StateMetrics {
        metrics_of(self.dist, &self.class_probabilities())
    }
}

pub(crate) fn class_probs_into(dist: &ObjectiveDistribution, amps: &[Complex64], out: &mut [f64]) {
    let total = dist.total() as f64;
    for ((p, a), &c) in out.iter_mut().zip(amps).zip(dist.counts()) {
        *p = c as f64 * a.norm_sqr() / total;
    }
}

pub(crate) fn metrics_of(dist: &ObjectiveDistribution, class_probs: &[f64]) -> StateMetrics {
    let lambda = class_probs[dist.optimal_index()];
    let expectation: f64 = class_probs
        .iter()
        .zip(dist.values())
        .map(|(p, v)| p * v)
        .sum();
    let max = dist.max_value();
    let alpha =
        (dist.orientation() == Orientation::Maximize && max > 0.0).then(|| expectation / max);
    StateMetrics {
        lambda,
        alpha,
        expectation,
        tts: 1.0 / lambda,
    }
}

fn phase_in_place(amps: &mut [Complex64], values: &[f64], gamma: f64, phase_fn: &PhaseFunction) {
    if gamma == 0.0 {
        return;
    }
    for (a, &c) in amps.iter_mut().zip(values) {
        let (s, co) = (gamma * phase_fn.eval(c)).sin_cos();
        *a *= Complex64::new(co, -s);
    }
}

fn mixer_in_place(amps: &mut [Complex64], counts: &[u64], total: u64, beta: f64) {
    if beta == 0.0 {
        return;
    }
    // (1 − e^{-iβ}) · ⟨F|ψ⟩ / √|F|  =  (1 − e^{-iβ}) · Σ_j counts_j a_j / |F|
    let overlap: Complex64 = amps.iter().zip(counts).map(|(a, &c)| a * c as f64).sum();
    let (s, co) = beta.sin_cos();
    let shift = Complex64::new(1.0 - co, s) * overlap / total as f64;
    for a in amps.iter_mut() {
        *a -= shift;
    }
}

/// Runs the circuit into `amps` (resized as needed) without allocating per layer.
pub(crate) fn evolve_into(
    dist: &ObjectiveDistribution,
    params: &CircuitParams,
    amps: &mut Vec<Complex64>,
) {
    amps.clear();
    amps.resize(dist.classes(), Complex64::new(1.0, 0.0));
    for (&g, &b) in params.gammas.iter().zip(&params.betas) {
        phase_in_place(amps, dist.values(), g, &params.phase_fn);
        mixer_in_place(amps, dist.counts(), dist.total(), b);
    }
}

/// Prepares |ψ(γ, β)⟩ from the uniform state and measures its metrics.
pub fn run_circuit<'a>(
    dist: &'a ObjectiveDistribution,
    params: &CircuitParams,
) -> (CompressedState<'a>, StateMetrics) {
    let mut amps = Vec::new();
    evolve_into(dist, params, &mut amps);
    let state = CompressedState { amps, dist };
    let metrics = state.metrics();
    (state, metrics)
}

/// Output of the per-solution simulation, in enumeration order.
#[derive(Clone, Debug)]
pub struct ReferenceRun {
    pub values: Vec<f64>,
    pub probabilities: Vec<f64>,
}

/// Per-solution simulation of the instance's full feasible set.
pub fn run_reference(instance: &ProblemInstance, params: &CircuitParams) -> Result<ReferenceRun> {
    let values: Vec<f64> = enumerate_feasible(instance, REFERENCE_CAP)?
        .map(|(_, v)| v)
        .collect();
    let probabilities = run_reference_values(&values, params)?;
    Ok(ReferenceRun {
        values,
        probabilities,
    })
}

/// Per-solution simulation given each solution's objective value.
pub fn run_reference_values(values: &[f64], params: &CircuitParams) -> Result<Vec<f64>> {
    let n = values.len();
    if n as u64 > REFERENCE_CAP {
        return Err(Error::Capacity {
            what: "reference simulation".into(),
            required: n as u128,
            cap: REFERENCE_CAP as u128,
        });
    }
    if n == 0 {
        return Err(Error::Invalid("empty feasible set".into()));
    }
    let norm = 1.0 / (n as f64).sqrt();
    let mut psi = vec![Complex64::new(norm, 0.0); n];
    for (&gamma, &beta) in params.gammas.iter().zip(&params.betas) {
        for (a, &c) in psi.iter_mut().zip(values) {
            *a *= Complex64::new(0.0, -gamma * params.phase_fn.eval(c)).exp();
        }
        let overlap: Complex64 = psi.iter().sum::<Complex64>() * norm;
        let factor = Complex64::new(1.0, 0.0) - Complex64::new(0.0, -beta).exp();
        for a in psi.iter_mut() {
            *a -= factor * overlap * norm;
        }
    }
    Ok(psi.iter().map(|a| a.norm_sqr()).collect())
}

/// Which trivial layer is removed by [`reduced_equivalent`].
#[derive(Clone, Copy, Debug)]
pub enum ReductionMode<'a> {
    /// β at the layer is a multiple of 2π: the mixer is the identity and the
    /// layer's γ merges into the next layer (or vanishes at the last layer).
    MixerTrivial,
    /// γ·𝒞(c) is a multiple of 2π for every objective value in `values`: the
    /// phase separator is the identity and the layer's β merges into the
    /// previous layer (or is a global phase at the first layer).
    PhaseTrivial { values: &'a [f64] },
}

fn is_multiple_of_tau(x: f64) -> bool {
    let k = x / TAU;
    (k - k.round()).abs() <= ANGLE_TOL
}

/// Depth-(p−1) parameters producing the same measurement probabilities.
///
/// `layer` is 0-based.
pub fn reduced_equivalent(
    params: &CircuitParams,
    layer: usize,
    mode: ReductionMode<'_>,
) -> Result<CircuitParams> {
    let p = params.p();
    if layer >= p {
        return Err(Error::NotReducible {
            layer,
            reason: format!("circuit has depth {p}"),
        });
    }
    let mut gammas = params.gammas.clone();
    let mut betas = params.betas.clone();
    match mode {
        ReductionMode::MixerTrivial => {
            if !is_multiple_of_tau(betas[layer]) {
                return Err(Error::NotReducible {
                    layer,
                    reason: format!("beta = {} is not a multiple of 2π", betas[layer]),
                });
            }
            if layer + 1 < p {
                gammas[layer + 1] += gammas[layer];
            }
        }
        ReductionMode::PhaseTrivial { values } => {
            let g = gammas[layer];
            if let Some(&c) = values
                .iter()
                .find(|&&c| !is_multiple_of_tau(g * params.phase_fn.eval(c)))
            {
                return Err(Error::NotReducible {
                    layer,
                    reason: format!(
                        "gamma·C({c}) = {} is not a multiple of 2π",
                        g * params.phase_fn.eval(c)
                    ),
                });
            }
            if layer > 0 {
                betas[layer - 1] += betas[layer];
            }
        }
    }
    gammas.remove(layer);
    betas.remove(layer);
    CircuitParams::new(gammas, betas, params.phase_fn)
}
