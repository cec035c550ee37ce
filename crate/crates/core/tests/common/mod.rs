//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the crate's enumeration or simulation code.
#![allow(dead_code)]

use gmqaoa::{Orientation, PhaseFunction, ProblemInstance, ProblemKind};
use num_complex::Complex64;

/// Objective value of every feasible solution, by direct enumeration.
pub fn all_values(inst: &ProblemInstance) -> Vec<f64> {
    let n = inst.n();
    let edges = inst.edges();
    match inst.kind() {
        ProblemKind::Tsp => {
            let w = inst.weights().unwrap();
            let mut rest: Vec<usize> = (1..n).collect();
            let mut out = Vec::new();
            permutations(&mut rest, 0, &mut |perm| {
                let mut len = w[0][perm[0]] + w[perm[n - 2]][0];
                for i in 0..n - 2 {
                    len += w[perm[i]][perm[i + 1]];
                }
                out.push(len);
            });
            out
        }
        ProblemKind::MaxCut => (0u64..1 << n)
            .map(|m| {
                edges
                    .iter()
                    .filter(|&&(u, v)| (m >> u & 1) != (m >> v & 1))
                    .count() as f64
            })
            .collect(),
        ProblemKind::MaxKVertexCover => {
            let k = inst.k().unwrap() as u32;
            (0u64..1 << n)
                .filter(|m| m.count_ones() == k)
                .map(|m| {
                    edges
                        .iter()
                        .filter(|&&(u, v)| (m >> u & 1) == 1 || (m >> v & 1) == 1)
                        .count() as f64
                })
                .collect()
        }
        ProblemKind::MaxKColorableSubgraph => {
            let k = inst.k().unwrap();
            let total = k.pow(n as u32);
            (0..total)
                .map(|mut code| {
                    let mut colors = vec![0; n];
                    for c in colors.iter_mut() {
                        *c = code % k;
                        code /= k;
                    }
                    edges
                        .iter()
                        .filter(|&&(u, v)| colors[u] != colors[v])
                        .count() as f64
                })
                .collect()
        }
    }
}

fn permutations(items: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permutations(items, start + 1, visit);
        items.swap(start, i);
    }
}

pub fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

pub fn best(values: &[f64], orientation: Orientation) -> f64 {
    match orientation {
        Orientation::Maximize => values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        Orientation::Minimize => values.iter().cloned().fold(f64::INFINITY, f64::min),
    }
}

/// Fraction of solutions attaining the optimum.
pub fn rho(values: &[f64], orientation: Orientation) -> f64 {
    let b = best(values, orientation);
    values.iter().filter(|&&v| same_value(v, b)).count() as f64 / values.len() as f64
}

/// μ_r with an exact integer ceiling for r = 1/q.
pub fn mu_inv(values: &[f64], q: u64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let total = sorted.len() as u64;
    let top = total.div_ceil(q) as usize;
    let sum: f64 = sorted[..top].iter().sum();
    sum / (total as f64 / q as f64 * sorted[0])
}

/// Full state-vector simulation: |F⟩ start, e^{−iγ𝒞} phases and the mixer
/// I − (1 − e^{−iβ})|F⟩⟨F|. Returns per-solution probabilities.
pub fn dense_probabilities(
    values: &[f64],
    gammas: &[f64],
    betas: &[f64],
    phase: PhaseFunction,
) -> Vec<f64> {
    let n = values.len() as f64;
    let amp0 = Complex64::new(1.0 / n.sqrt(), 0.0);
    let mut psi = vec![amp0; values.len()];
    for (&g, &b) in gammas.iter().zip(betas) {
        for (a, &c) in psi.iter_mut().zip(values) {
            let h = match phase {
                PhaseFunction::Objective => c,
                PhaseFunction::Threshold { th } => {
                    if c <= th {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            *a *= Complex64::from_polar(1.0, -g * h);
        }
        let proj: Complex64 = psi.iter().sum::<Complex64>() / n;
        let factor = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -b);
        for a in psi.iter_mut() {
            *a -= factor * proj;
        }
    }
    psi.iter().map(|a| a.norm_sqr()).collect()
}

/// Probability of measuring an optimal solution.
pub fn dense_lambda(
    values: &[f64],
    orientation: Orientation,
    gammas: &[f64],
    betas: &[f64],
    phase: PhaseFunction,
) -> f64 {
    let b = best(values, orientation);
    dense_probabilities(values, gammas, betas, phase)
        .iter()
        .zip(values)
        .filter(|(_, &v)| same_value(v, b))
        .map(|(p, _)| p)
        .sum()
}

pub fn dense_expectation(
    values: &[f64],
    gammas: &[f64],
    betas: &[f64],
    phase: PhaseFunction,
) -> f64 {
    dense_probabilities(values, gammas, betas, phase)
        .iter()
        .zip(values)
        .map(|(p, v)| p * v)
        .sum()
}
