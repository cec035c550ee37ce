//! Depth-p performance ceilings and numeric witnesses of where the relaxed
//! per-state probability attains its maximum.
//!
//! All bounds are returned uncapped; a bound above 1 is vacuous but valid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distribution::ObjectiveDistribution;
use crate::error::{Error, Result};

/// Largest depth the relaxation and witness routines accept.
pub const MAX_RELAX_DEPTH: usize = 9;
/// Largest |F| for the direct subset expansion in [`relax_g`].
pub const MAX_RELAX_TOTAL: usize = 1000;

const WITNESS_TOL: f64 = 1e-9;

fn amplification(p: usize) -> f64 {
    let q = (2 * p + 1) as f64;
    q * q
}

/// (2p+1)² / |F|: ceiling on the probability of any single basis state.
pub fn basis_prob_ub(p: usize, total: u64) -> f64 {
    amplification(p) / total as f64
}

/// (2p+1)²·ρ: ceiling on the probability of sampling an optimum.
pub fn lambda_ub(p: usize, rho: f64) -> f64 {
    amplification(p) * rho
}

/// μ_r at r = 1/(2p+1)²: ceiling on the approximation ratio.
pub fn alpha_ub(p: usize, dist: &ObjectiveDistribution) -> Result<f64> {
    let q = (2 * p + 1) as u64;
    let q2 = q * q;
    let top = dist.total().div_ceil(q2);
    dist.mu_top(top, dist.total() as f64 / q2 as f64)
}

/// Optimality density of a TSP instance with distinct distances: 2/(n−1)!.
pub fn tsp_rho(n: usize) -> f64 {
    let fact: f64 = (1..n).map(|i| i as f64).product();
    2.0 / fact
}

/// 2(2p+1)²/(n−1)!.
pub fn tsp_lambda_ub(n: usize, p: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("tsp needs n >= 3, got {n}")));
    }
    Ok(lambda_ub(p, tsp_rho(n)))
}

/// All three bounds for one distribution and depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub p: usize,
    pub basis_ub: f64,
    pub lambda_ub: f64,
    /// Absent for minimization distributions.
    pub alpha_ub: Option<f64>,
    pub context: String,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str = "instance_id,p,basis_ub,lambda_ub,alpha_ub";

    pub fn new(p: usize, dist: &ObjectiveDistribution) -> Self {
        BoundReport {
            p,
            basis_ub: basis_prob_ub(p, dist.total()),
            lambda_ub: lambda_ub(p, dist.rho()),
            alpha_ub: alpha_ub(p, dist).ok(),
            context: dist.provenance().to_string(),
        }
    }

    pub fn csv_row(&self, instance_id: &str) -> String {
        let alpha = self.alpha_ub.map(|a| a.to_string()).unwrap_or_default();
        format!(
            "{instance_id},{},{},{},{alpha}",
            self.p, self.basis_ub, self.lambda_ub
        )
    }
}

/// H_k(r) from H_{k+1} = −2r·H_k − H_{k−1}, H_1 = −2r, H_2 = 4r² − 2.
pub fn h_poly(k: usize, r: f64) -> f64 {
    h_sequence(k, r).last().copied().unwrap_or(2.0)
}

/// `[H_1(r), …, H_k(r)]`.
fn h_sequence(k: usize, r: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k);
    let (mut prev, mut cur) = (2.0, -2.0 * r);
    for _ in 0..k {
        out.push(cur);
        let next = -2.0 * r * cur - prev;
        prev = cur;
        cur = next;
    }
    out
}

/// Parity of the relaxed phase value z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// cos(mπz) for integer z of this parity.
    fn cos_multiple(self, m: usize) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd if m.is_multiple_of(2) => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// 𝒢_{p,z}(r) = (cos(pπz) + Σ_k cos((p−k)πz)·H_k(r))² / |F|.
pub fn script_g(p: usize, z: Parity, r: f64, total: u64) -> Result<f64> {
    if p == 0 {
        return Err(Error::Domain("script_g needs p >= 1".into()));
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::Domain(format!("r = {r} outside [-1, 1]")));
    }
    let h = h_sequence(p, r);
    let inner = z.cos_multiple(p)
        + h.iter()
            .enumerate()
            .map(|(i, hk)| z.cos_multiple(p - (i + 1)) * hk)
            .sum::<f64>();
    Ok(inner * inner / total as f64)
}

/// Relaxed probability G_p = |g_p|²/|F| evaluated by the explicit subset expansion.
///
/// `v` holds one relaxed phase value per solution (so `v.len()` is |F|) and
/// `z` replaces the phase value of the measured state. Each subset
/// s = {s_1 < … < s_k} of layers contributes
/// e^{−i z Σ_{j>s_k} γ_j} · Π (e^{−iβ_{s_j}} − 1) · Π avg_m e^{−i v_m Σ_{s_{j−1}<l≤s_j} γ_l}
/// with s_0 = 0.
pub fn relax_g(gammas: &[f64], betas: &[f64], v: &[f64], z: f64) -> Result<f64> {
    let p = gammas.len();
    if betas.len() != p {
        return Err(Error::Invalid(format!(
            "{p} gammas but {} betas",
            betas.len()
        )));
    }
    if p > MAX_RELAX_DEPTH || v.len() > MAX_RELAX_TOTAL {
        return Err(Error::Capacity {
            what: "relaxation subset expansion".into(),
            required: (1u128 << p) * p.max(1) as u128 * v.len() as u128,
            cap: (1u128 << MAX_RELAX_DEPTH) * MAX_RELAX_DEPTH as u128 * MAX_RELAX_TOTAL as u128,
        });
    }
    if v.is_empty() {
        return Err(Error::Invalid(
            "relaxation needs at least one phase value".into(),
        ));
    }
    let total = v.len() as f64;
    // prefix[i] = γ_1 + … + γ_i
    let mut prefix = vec![0.0; p + 1];
    for i in 0..p {
        prefix[i + 1] = prefix[i] + gammas[i];
    }
    let mut g = Complex64::new(0.0, 0.0);
    for subset in 0u32..(1 << p) {
        let mut term = Complex64::new(1.0, 0.0);
        let mut last = 0usize;
        for layer in 1..=p {
            if subset & (1 << (layer - 1)) == 0 {
                continue;
            }
            term *= Complex64::new(0.0, -betas[layer - 1]).exp() - 1.0;
            let angle = prefix[layer] - prefix[last];
            let avg: Complex64 = v
                .iter()
                .map(|&vm| Complex64::new(0.0, -angle * vm).exp())
                .sum::<Complex64>()
                / total;
            term *= avg;
            last = layer;
        }
        term *= Complex64::new(0.0, -(prefix[p] - prefix[last]) * z).exp();
        g += term;
    }
    Ok(g.norm_sqr() / total)
}

/// Grid maximum of 𝒢_{p,z} for one (p, parity).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessRow {
    pub p: usize,
    pub parity: Parity,
    pub argmax_r: f64,
    pub max_value: f64,
    pub expected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub total: u64,
    pub grid_step: f64,
    pub rows: Vec<WitnessRow>,
}

impl WitnessReport {
    pub const CSV_HEADER: &'static str = "p,parity,argmax_r,max_value,expected";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.p, r.parity, r.argmax_r, r.max_value, r.expected
            ));
        }
        out
    }
}

/// Scans 𝒢_{p,z}(r) over a uniform r-grid on [−1, 1] for every p ≤ `p_max`
/// and both parities, checking that the maximum (2p+1)²/|F| sits at r = −1
/// for even z and r = +1 for odd z and that no grid point exceeds it.
pub fn verify_theorem1_witness(p_max: usize, total: u64, grid_step: f64) -> Result<WitnessReport> {
    if p_max > MAX_RELAX_DEPTH {
        return Err(Error::Domain(format!(
            "p_max = {p_max} exceeds {MAX_RELAX_DEPTH}"
        )));
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::Domain(format!(
            "grid step {grid_step} outside (0, 1]"
        )));
    }
    let steps = (2.0 / grid_step).round() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| -1.0 + 2.0 * i as f64 / steps as f64)
        .collect();

    let mut rows = Vec::new();
    for p in 1..=p_max {
        let expected = basis_prob_ub(p, total);
        for parity in [Parity::Even, Parity::Odd] {
            // ties go to the smaller r
            let mut best = (grid[0], script_g(p, parity, grid[0], total)?);
            for &r in &grid[1..] {
                let val = script_g(p, parity, r, total)?;
                if val > best.1 {
                    best = (r, val);
                }
            }
            let endpoint = match parity {
                Parity::Even => -1.0,
                Parity::Odd => 1.0,
            };
            let at_endpoint = script_g(p, parity, endpoint, total)?;
            let violation = |r: f64, detail: String| Error::Witness {
                p,
                z: parity.to_string(),
                r,
                detail,
            };
            if (at_endpoint - expected).abs() > WITNESS_TOL {
                return Err(violation(
                    endpoint,
                    format!("endpoint value {at_endpoint} != {expected}"),
                ));
            }
            if best.1 > at_endpoint + WITNESS_TOL {
                return Err(violation(
                    best.0,
                    format!("grid value {} exceeds endpoint {at_endpoint}", best.1),
                ));
            }
            if best.0 != endpoint && (best.1 - at_endpoint).abs() > WITNESS_TOL {
                return Err(violation(
                    best.0,
                    "maximum not attained at the endpoint".into(),
                ));
            }
            rows.push(WitnessRow {
                p,
                parity,
                argmax_r: endpoint,
                max_value: at_endpoint,
                expected,
            });
        }
    }
    Ok(WitnessReport {
        total,
        grid_step,
        rows,
    })
}
