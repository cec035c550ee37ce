use std::ops::Range;

use super::{
    coloring_value, cover_value, cut_value, tour_length, ProblemInstance, ProblemKind, Solution,
};
use crate::error::{Error, Result};

/// |F| for the instance, in closed form: (n-1)!, k^n, 2^n or C(n, k).
pub fn feasible_count(instance: &ProblemInstance) -> u128 {
    let n = instance.n() as u32;
    match instance.kind() {
        ProblemKind::Tsp => (1..n as u128).fold(1u128, |acc, i| acc.saturating_mul(i)),
        ProblemKind::MaxKColorableSubgraph => (instance.color_count() as u128).saturating_pow(n),
        ProblemKind::MaxCut => 1u128 << n,
        ProblemKind::MaxKVertexCover => {
            binomial(n as u64, instance.k().unwrap_or(0) as u64) as u128
        }
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Iterator over every feasible solution together with its objective value.
///
/// Order is deterministic: lexicographic permutations for tours, base-k
/// odometer (vertex 0 fastest) for colorings, increasing bitmask for cuts and
/// colex order for covers.
#[derive(Clone, Debug)]
pub struct Enumeration<'a> {
    instance: &'a ProblemInstance,
    cursor: Cursor,
    remaining: u64,
}

#[derive(Clone, Debug)]
enum Cursor {
    Tour(Vec<usize>),
    Coloring(Vec<u8>),
    Cut(u64),
    Cover(u64),
}

/// Enumerates all of F, failing when |F| exceeds `cap`.
pub fn enumerate_feasible(instance: &ProblemInstance, cap: u64) -> Result<Enumeration<'_>> {
    let total = feasible_count(instance);
    if total > cap as u128 {
        return Err(Error::Capacity {
            what: format!("enumerating {}", instance.descriptor()),
            required: total,
            cap: cap as u128,
        });
    }
    Ok(enumerate_range(instance, 0..total as u64))
}

/// Enumerates the solutions with ranks in `range` (clamped to |F|).
///
/// Disjoint ranges partition F, so workers can split the space without coordination.
pub fn enumerate_range(instance: &ProblemInstance, range: Range<u64>) -> Enumeration<'_> {
    let total = feasible_count(instance).min(u64::MAX as u128) as u64;
    let end = range.end.min(total);
    let start = range.start.min(end);
    Enumeration {
        instance,
        cursor: Cursor::unrank(instance, start),
        remaining: end - start,
    }
}

impl Cursor {
    fn unrank(instance: &ProblemInstance, rank: u64) -> Cursor {
        let n = instance.n();
        match instance.kind() {
            ProblemKind::Tsp => {
                let mut pool: Vec<usize> = (1..n).collect();
                let mut perm = Vec::with_capacity(n - 1);
                let mut rank = rank;
                for i in (0..n - 1).rev() {
                    let f = (1..=i as u64).product::<u64>();
                    let idx = (rank / f) as usize;
                    rank %= f;
                    perm.push(pool.remove(idx.min(pool.len() - 1)));
                }
                Cursor::Tour(perm)
            }
            ProblemKind::MaxKColorableSubgraph => {
                let k = instance.color_count() as u64;
                let mut rank = rank;
                let colors = (0..n)
                    .map(|_| {
                        let c = (rank % k) as u8;
                        rank /= k;
                        c
                    })
                    .collect();
                Cursor::Coloring(colors)
            }
            ProblemKind::MaxCut => Cursor::Cut(rank),
            ProblemKind::MaxKVertexCover => {
                let k = instance.k().unwrap_or(0) as u64;
                let mut rank = rank;
                let mut mask = 0u64;
                for i in (1..=k).rev() {
                    let mut c = i - 1;
                    while binomial(c + 1, i) <= rank {
                        c += 1;
                    }
                    rank -= binomial(c, i);
                    mask |= 1 << c;
                }
                Cursor::Cover(mask)
            }
        }
    }

    fn advance(&mut self, k: u8) {
        match self {
            Cursor::Tour(perm) => {
                next_permutation(perm);
            }
            Cursor::Coloring(colors) => {
                for c in colors.iter_mut() {
                    *c += 1;
                    if *c < k {
                        return;
                    }
                    *c = 0;
                }
            }
            Cursor::Cut(mask) => *mask += 1,
            Cursor::Cover(mask) => {
                let x = *mask;
                if x == 0 {
                    return;
                }
                let c = x & x.wrapping_neg();
                let r = x + c;
                *mask = (((r ^ x) >> 2) / c) | r;
            }
        }
    }

    fn value(&self, instance: &ProblemInstance) -> f64 {
        match self {
            Cursor::Tour(perm) => tour_length(instance.weights().unwrap_or_default(), perm),
            Cursor::Coloring(colors) => coloring_value(instance.edges(), colors),
            Cursor::Cut(mask) => cut_value(instance.edges(), *mask),
            Cursor::Cover(mask) => cover_value(instance.edges(), *mask),
        }
    }

    fn solution(&self, n: usize) -> Solution {
        match self {
            Cursor::Tour(perm) => Solution::Tour(perm.clone()),
            Cursor::Coloring(colors) => {
                Solution::Coloring(colors.iter().map(|&c| c as usize).collect())
            }
            Cursor::Cut(mask) => Solution::Cut((0..n).map(|i| (mask >> i) & 1 == 1).collect()),
            Cursor::Cover(mask) => {
                Solution::Cover((0..n).filter(|&i| (mask >> i) & 1 == 1).collect())
            }
        }
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        v.reverse();
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

impl Enumeration<'_> {
    /// Number of solutions not yet visited.
    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    /// Advances and returns only the objective value, skipping the solution allocation.
    pub(crate) fn next_value(&mut self) -> Option<f64> {
        if self.remaining == 0 {
            return None;
        }
        let v = self.cursor.value(self.instance);
        self.step();
        Some(v)
    }

    fn step(&mut self) {
        self.remaining -= 1;
        if self.remaining > 0 {
            self.cursor.advance(self.instance.color_count() as u8);
        }
    }
}

impl Iterator for Enumeration<'_> {
    type Item = (Solution, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        let item = (
            self.cursor.solution(self.instance.n()),
            self.cursor.value(self.instance),
        );
        self.step();
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.remaining as usize;
        (r, Some(r))
    }
}
