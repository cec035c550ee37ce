use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    enumerate_range, feasible_count, ProblemInstance, ProblemKind, DEFAULT_ENUMERATION_CAP,
};
use crate::error::{Error, Result};

/// How edges are drawn for graph kinds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum EdgeRule {
    /// Every vertex pair independently with probability `prob`.
    ErdosRenyi { prob: f64 },
    /// Uniform simple `degree`-regular graph via the pairing model.
    Regular { degree: usize },
}

impl EdgeRule {
    /// Default rule per kind: 3-regular for max-cut, G(n, 0.5) otherwise.
    pub fn default_for(kind: ProblemKind) -> EdgeRule {
        match kind {
            ProblemKind::MaxCut => EdgeRule::Regular { degree: 3 },
            _ => EdgeRule::ErdosRenyi { prob: 0.5 },
        }
    }
}

/// Retry budgets for rejection sampling.
#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub max_attempts: usize,
    pub enumeration_cap: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_attempts: 10_000,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// Random Euclidean TSP: `n` cities uniform in the unit square.
pub fn gen_tsp(n: usize, seed: u64) -> Result<ProblemInstance> {
    if n < 3 {
        return Err(Error::InvalidSize(format!(
            "tsp needs at least 3 cities, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1);
            w[i][j] = d;
            w[j][i] = d;
        }
    }
    ProblemInstance::tsp(w, seed)
}

/// Random graph instance of `kind`.
///
/// Max-k-colorable-subgraph graphs are redrawn until they are k-colorable,
/// i.e. the optimum equals |E|; the check enumerates colorings.
pub fn gen_graph_instance(
    kind: ProblemKind,
    n: usize,
    k: Option<usize>,
    edge_rule: EdgeRule,
    seed: u64,
    config: &GenConfig,
) -> Result<ProblemInstance> {
    // validates kind/k/n before any sampling
    ProblemInstance::graph(kind, n, k, vec![], seed)?;
    match edge_rule {
        EdgeRule::ErdosRenyi { prob } if !(0.0..=1.0).contains(&prob) => {
            return Err(Error::Invalid(format!(
                "edge probability {prob} outside [0, 1]"
            )));
        }
        EdgeRule::Regular { degree } if degree >= n || (n * degree) % 2 == 1 => {
            return Err(Error::InvalidSize(format!(
                "no simple {degree}-regular graph on {n} vertices"
            )));
        }
        _ => {}
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if kind != ProblemKind::MaxKColorableSubgraph {
        let edges = draw_edges(n, edge_rule, &mut rng, config.max_attempts)?;
        return ProblemInstance::graph(kind, n, k, edges, seed);
    }

    let probe = ProblemInstance::graph(kind, n, k, vec![], seed)?;
    let total = feasible_count(&probe);
    if total > config.enumeration_cap as u128 {
        return Err(Error::Capacity {
            what: format!("colorability check for {}", probe.descriptor()),
            required: total,
            cap: config.enumeration_cap as u128,
        });
    }
    for _ in 0..config.max_attempts {
        let edges = draw_edges(n, edge_rule, &mut rng, config.max_attempts)?;
        if edges.is_empty() {
            continue;
        }
        let candidate = ProblemInstance::graph(kind, n, k, edges, seed)?;
        if colorable_by_enumeration(&candidate) {
            return Ok(candidate);
        }
    }
    Err(Error::GenerationFailed {
        attempts: config.max_attempts,
        reason: format!("no {}-colorable graph drawn for n={n}", k.unwrap_or(0)),
    })
}

/// True when some enumerated coloring attains |E|.
pub(crate) fn colorable_by_enumeration(instance: &ProblemInstance) -> bool {
    let target = instance.edges().len() as f64;
    let mut it = enumerate_range(instance, 0..u64::MAX);
    while let Some(v) = it.next_value() {
        if v == target {
            return true;
        }
    }
    false
}

fn draw_edges(
    n: usize,
    rule: EdgeRule,
    rng: &mut ChaCha8Rng,
    max_attempts: usize,
) -> Result<Vec<(usize, usize)>> {
    match rule {
        EdgeRule::ErdosRenyi { prob } => {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen::<f64>() < prob {
                        edges.push((u, v));
                    }
                }
            }
            Ok(edges)
        }
        EdgeRule::Regular { degree } => {
            let mut stubs: Vec<usize> = (0..n)
                .flat_map(|v| std::iter::repeat_n(v, degree))
                .collect();
            'attempt: for _ in 0..max_attempts {
                stubs.shuffle(rng);
                let mut edges: Vec<(usize, usize)> = stubs
                    .chunks_exact(2)
                    .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
                    .collect();
                if edges.iter().any(|&(u, v)| u == v) {
                    continue;
                }
                edges.sort_unstable();
                for w in edges.windows(2) {
                    if w[0] == w[1] {
                        continue 'attempt;
                    }
                }
                return Ok(edges);
            }
            Err(Error::GenerationFailed {
                attempts: max_attempts,
                reason: format!(
                    "pairing model produced no simple {degree}-regular graph on {n} vertices"
                ),
            })
        }
    }
}
