//! Benchmark problems: travelling salesman, max-k-colorable-subgraph,
//! max-cut and max-k-vertex-cover.
//!
//! Every [`Solution`] is feasible by construction: tours are permutations
//! with city 0 fixed, colorings assign exactly one color per vertex, and
//! covers hold exactly `k` vertices. The Grover mixer never leaves the
//! feasible set, so the toolkit never needs to represent infeasible points.

mod enumerate;
mod generate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use enumerate::{enumerate_feasible, enumerate_range, feasible_count, Enumeration};
pub use generate::{gen_graph_instance, gen_tsp, EdgeRule, GenConfig};

/// Default upper limit on the number of feasible solutions we are willing to enumerate.
pub const DEFAULT_ENUMERATION_CAP: u64 = 200_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Tsp,
    MaxKColorableSubgraph,
    MaxCut,
    MaxKVertexCover,
}

impl ProblemKind {
    pub fn is_graph(self) -> bool {
        !matches!(self, ProblemKind::Tsp)
    }

    pub fn orientation(self) -> Orientation {
        match self {
            ProblemKind::Tsp => Orientation::Minimize,
            _ => Orientation::Maximize,
        }
    }

    /// Short label used in CSV output and file names.
    pub fn label(self) -> &'static str {
        match self {
            ProblemKind::Tsp => "tsp",
            ProblemKind::MaxKColorableSubgraph => "mkcs",
            ProblemKind::MaxCut => "maxcut",
            ProblemKind::MaxKVertexCover => "mkvc",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "tsp" => Some(ProblemKind::Tsp),
            "mkcs" | "max-k-colorable-subgraph" => Some(ProblemKind::MaxKColorableSubgraph),
            "maxcut" | "max-cut" => Some(ProblemKind::MaxCut),
            "mkvc" | "max-k-vertex-cover" => Some(ProblemKind::MaxKVertexCover),
            _ => None,
        }
    }

    pub(crate) fn id(self) -> u64 {
        match self {
            ProblemKind::Tsp => 1,
            ProblemKind::MaxKColorableSubgraph => 2,
            ProblemKind::MaxCut => 3,
            ProblemKind::MaxKVertexCover => 4,
        }
    }
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Maximize,
    Minimize,
}

/// A concrete, validated problem instance.
///
/// Graph kinds carry a simple edge list with `u < v`, sorted; TSP carries a
/// symmetric distance matrix with zero diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct ProblemInstance {
    kind: ProblemKind,
    n: usize,
    k: Option<usize>,
    edges: Vec<(usize, usize)>,
    weights: Option<Vec<Vec<f64>>>,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    kind: ProblemKind,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    orientation: Orientation,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w: Option<Vec<Vec<f64>>>,
}

impl TryFrom<RawInstance> for ProblemInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        if raw.orientation != raw.kind.orientation() {
            return Err(Error::Invalid(format!(
                "{} instances must be {:?}",
                raw.kind,
                raw.kind.orientation()
            )));
        }
        match raw.kind {
            ProblemKind::Tsp => {
                if raw.edges.is_some() {
                    return Err(Error::Invalid("tsp instance must not carry edges".into()));
                }
                let w = raw.w.ok_or_else(|| {
                    Error::Invalid("tsp instance needs a distance matrix \"w\"".into())
                })?;
                if w.len() != raw.n {
                    return Err(Error::Invalid(format!(
                        "distance matrix has {} rows, expected {}",
                        w.len(),
                        raw.n
                    )));
                }
                ProblemInstance::tsp(w, raw.seed)
            }
            kind => {
                if raw.w.is_some() {
                    return Err(Error::Invalid("graph instance must not carry \"w\"".into()));
                }
                ProblemInstance::graph(kind, raw.n, raw.k, raw.edges.unwrap_or_default(), raw.seed)
            }
        }
    }
}

impl From<ProblemInstance> for RawInstance {
    fn from(inst: ProblemInstance) -> Self {
        let orientation = inst.orientation();
        let (edges, w) = match inst.kind {
            ProblemKind::Tsp => (None, inst.weights),
            _ => (Some(inst.edges), None),
        };
        RawInstance {
            kind: inst.kind,
            n: inst.n,
            k: inst.k,
            orientation,
            seed: inst.seed,
            edges,
            w,
        }
    }
}

impl ProblemInstance {
    /// Builds a TSP instance from a full distance matrix.
    pub fn tsp(w: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let n = w.len();
        if n < 3 {
            return Err(Error::InvalidSize(format!(
                "tsp needs at least 3 cities, got {n}"
            )));
        }
        for (i, row) in w.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Invalid(format!(
                    "distance row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row[i] != 0.0 {
                return Err(Error::Invalid(format!(
                    "distance diagonal entry {i} is nonzero"
                )));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::Invalid(format!(
                        "distance w[{i}][{j}] = {d} is not a nonnegative real"
                    )));
                }
                if w[j][i] != d {
                    return Err(Error::Invalid(format!(
                        "distance matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(ProblemInstance {
            kind: ProblemKind::Tsp,
            n,
            k: None,
            edges: Vec::new(),
            weights: Some(w),
            seed,
        })
    }

    /// Builds a graph instance, normalizing each edge to `(min, max)` and sorting the list.
    pub fn graph(
        kind: ProblemKind,
        n: usize,
        k: Option<usize>,
        edges: Vec<(usize, usize)>,
        seed: u64,
    ) -> Result<Self> {
        match kind {
            ProblemKind::Tsp => {
                return Err(Error::Invalid(
                    "use ProblemInstance::tsp for travelling salesman".into(),
                ))
            }
            ProblemKind::MaxCut => {
                if k.is_some() {
                    return Err(Error::Invalid("max-cut takes no k".into()));
                }
            }
            ProblemKind::MaxKColorableSubgraph => match k {
                Some(k) if k >= 2 => {}
                _ => {
                    return Err(Error::InvalidSize(format!(
                        "max-k-colorable-subgraph needs k >= 2, got {k:?}"
                    )))
                }
            },
            ProblemKind::MaxKVertexCover => match k {
                Some(k) if k > 0 && k < n => {}
                _ => {
                    return Err(Error::InvalidSize(format!(
                        "max-k-vertex-cover needs 0 < k < n = {n}, got {k:?}"
                    )))
                }
            },
        }
        if n == 0 || n > 63 {
            return Err(Error::InvalidSize(format!("graph size {n} outside 1..=63")));
        }
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Invalid(format!(
                    "edge ({u}, {v}) has a vertex outside [0, {n})"
                )));
            }
            if u == v {
                return Err(Error::Invalid(format!("self-loop at vertex {u}")));
            }
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        if norm.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invalid("duplicate edge".into()));
        }
        Ok(ProblemInstance {
            kind,
            n,
            k,
            edges: norm,
            weights: None,
            seed,
        })
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> Option<usize> {
        self.k
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> Option<&[Vec<f64>]> {
        self.weights.as_deref()
    }

    pub fn orientation(&self) -> Orientation {
        self.kind.orientation()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stable short descriptor such as `mkvc-n12-k6-s42`.
    pub fn descriptor(&self) -> String {
        match self.k {
            Some(k) => format!("{}-n{}-k{}-s{}", self.kind, self.n, k, self.seed),
            None => format!("{}-n{}-s{}", self.kind, self.n, self.seed),
        }
    }

    pub(crate) fn color_count(&self) -> usize {
        match self.kind {
            ProblemKind::MaxKColorableSubgraph => self.k.unwrap_or(2),
            _ => 2,
        }
    }
}

/// A feasible solution in its kind-specific encoding.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Solution {
    /// Visiting order of cities `1..n`; city 0 is the fixed start and end.
    Tour(Vec<usize>),
    /// Color index per vertex.
    Coloring(Vec<usize>),
    /// Side of the cut per vertex.
    Cut(Vec<bool>),
    /// Chosen vertices, ascending.
    Cover(Vec<usize>),
}

/// Evaluates the objective of `solution` on `instance`.
///
/// Graph kinds return integral values. TSP tour length sums the edge weights
/// in ascending order, so a tour and its reversal give bit-identical lengths.
pub fn objective_value(instance: &ProblemInstance, solution: &Solution) -> Result<f64> {
    let n = instance.n;
    match (instance.kind, solution) {
        (ProblemKind::Tsp, Solution::Tour(order)) => {
            let mut seen = vec![false; n];
            seen[0] = true;
            if order.len() != n - 1 {
                return Err(Error::KindMismatch(format!(
                    "tour visits {} cities, expected {}",
                    order.len(),
                    n - 1
                )));
            }
            for &c in order {
                if c == 0 || c >= n || seen[c] {
                    return Err(Error::KindMismatch(format!(
                        "tour {order:?} is not a permutation of 1..{n}"
                    )));
                }
                seen[c] = true;
            }
            Ok(tour_length(
                instance.weights.as_deref().unwrap_or_default(),
                order,
            ))
        }
        (ProblemKind::MaxKColorableSubgraph, Solution::Coloring(colors)) => {
            let k = instance.color_count();
            if colors.len() != n || colors.iter().any(|&c| c >= k) {
                return Err(Error::KindMismatch(format!(
                    "coloring {colors:?} is not a {k}-coloring of {n} vertices"
                )));
            }
            let conflicts = instance
                .edges
                .iter()
                .filter(|&&(u, v)| colors[u] == colors[v])
                .count();
            Ok((instance.edges.len() - conflicts) as f64)
        }
        (ProblemKind::MaxCut, Solution::Cut(bits)) => {
            if bits.len() != n {
                return Err(Error::KindMismatch(format!(
                    "cut has {} bits, expected {n}",
                    bits.len()
                )));
            }
            Ok(instance
                .edges
                .iter()
                .filter(|&&(u, v)| bits[u] != bits[v])
                .count() as f64)
        }
        (ProblemKind::MaxKVertexCover, Solution::Cover(chosen)) => {
            let k = instance.k.unwrap_or(0);
            let mut mask = 0u64;
            for &v in chosen {
                if v >= n || mask & (1 << v) != 0 {
                    return Err(Error::KindMismatch(format!(
                        "cover {chosen:?} is not a vertex subset"
                    )));
                }
                mask |= 1 << v;
            }
            if chosen.len() != k {
                return Err(Error::KindMismatch(format!(
                    "cover has {} vertices, expected {k}",
                    chosen.len()
                )));
            }
            Ok(cover_value(&instance.edges, mask))
        }
        (kind, sol) => Err(Error::KindMismatch(format!(
            "{sol:?} is not a solution encoding for {kind}"
        ))),
    }
}

pub(crate) fn tour_length(w: &[Vec<f64>], order: &[usize]) -> f64 {
    let mut legs: Vec<f64> = Vec::with_capacity(order.len() + 1);
    let mut prev = 0;
    for &c in order {
        legs.push(w[prev][c]);
        prev = c;
    }
    legs.push(w[prev][0]);
    legs.sort_unstable_by(f64::total_cmp);
    legs.iter().sum()
}

pub(crate) fn cut_value(edges: &[(usize, usize)], mask: u64) -> f64 {
    edges
        .iter()
        .filter(|&&(u, v)| ((mask >> u) ^ (mask >> v)) & 1 == 1)
        .count() as f64
}

pub(crate) fn cover_value(edges: &[(usize, usize)], mask: u64) -> f64 {
    edges
        .iter()
        .filter(|&&(u, v)| (mask >> u) & 1 == 1 || (mask >> v) & 1 == 1)
        .count() as f64
}

pub(crate) fn coloring_value(edges: &[(usize, usize)], colors: &[u8]) -> f64 {
    edges
        .iter()
        .filter(|&&(u, v)| colors[u] != colors[v])
        .count() as f64
}
