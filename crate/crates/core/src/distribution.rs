//! Objective-value distributions and the two statistics the bounds depend on:
//! optimality density and the top-r-proportion mean-max ratio.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{enumerate_range, feasible_count, Orientation, ProblemInstance, ProblemKind};

/// Enumeration chunk handed to one worker.
const CHUNK: u64 = 1 << 16;

/// TSP tour lengths are bucketed at this many decimal digits.
const TSP_DIGITS: f64 = 1e12;

/// Histogram of objective values over the feasible set.
///
/// `values` is strictly descending, so for maximization the optimal class is
/// index 0 and for minimization it is the last one.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct ObjectiveDistribution {
    orientation: Orientation,
    values: Vec<f64>,
    counts: Vec<u64>,
    total: u64,
    provenance: String,
}

#[derive(Deserialize)]
struct RawDistribution {
    orientation: Orientation,
    values: Vec<f64>,
    counts: Vec<u64>,
    total: Option<u64>,
    #[serde(default = "external")]
    provenance: String,
}

fn external() -> String {
    "external".to_string()
}

impl TryFrom<RawDistribution> for ObjectiveDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        let dist =
            ObjectiveDistribution::new(raw.values, raw.counts, raw.orientation, raw.provenance)?;
        if let Some(t) = raw.total {
            if t != dist.total {
                return Err(Error::Invalid(format!(
                    "total {t} does not equal the sum of counts {}",
                    dist.total
                )));
            }
        }
        Ok(dist)
    }
}

impl ObjectiveDistribution {
    /// Validating constructor: values strictly descending and finite, counts positive.
    pub fn new(
        values: Vec<f64>,
        counts: Vec<u64>,
        orientation: Orientation,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("distribution has no values".into()));
        }
        if values.len() != counts.len() {
            return Err(Error::Invalid(format!(
                "{} values but {} counts",
                values.len(),
                counts.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("distribution values must be finite".into()));
        }
        if values.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Invalid(
                "distribution values must be strictly descending".into(),
            ));
        }
        if counts.contains(&0) {
            return Err(Error::Invalid(
                "distribution counts must be positive".into(),
            ));
        }
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::Invalid("total count overflows".into()))?;
        Ok(ObjectiveDistribution {
            orientation,
            values,
            counts,
            total,
            provenance: provenance.into(),
        })
    }

    /// Histogram of an explicit list of per-solution values (exact equality).
    pub fn from_samples(
        samples: &[f64],
        orientation: Orientation,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let mut sorted = samples.to_vec();
        sorted.sort_unstable_by(|a, b| b.total_cmp(a));
        let mut values: Vec<f64> = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for v in sorted {
            match values.last() {
                Some(&last) if last == v => *counts.last_mut().unwrap() += 1,
                _ => {
                    values.push(v);
                    counts.push(1);
                }
            }
        }
        ObjectiveDistribution::new(values, counts, orientation, provenance)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// |F|.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Number of distinct objective values.
    pub fn classes(&self) -> usize {
        self.values.len()
    }

    pub fn optimal_index(&self) -> usize {
        match self.orientation {
            Orientation::Maximize => 0,
            Orientation::Minimize => self.values.len() - 1,
        }
    }

    pub fn optimal_value(&self) -> f64 {
        self.values[self.optimal_index()]
    }

    pub fn max_value(&self) -> f64 {
        self.values[0]
    }

    pub fn mean(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.counts)
            .map(|(v, &c)| v * c as f64)
            .sum::<f64>()
            / self.total as f64
    }

    /// True when every value is an integer, so e^{-i 2π c} = 1 exactly.
    pub fn integer_valued(&self) -> bool {
        self.values.iter().all(|v| v.fract() == 0.0)
    }

    /// Optimality density |F*| / |F|.
    pub fn rho(&self) -> f64 {
        self.counts[self.optimal_index()] as f64 / self.total as f64
    }

    /// Top-r-proportion mean-max ratio.
    ///
    /// The numerator sums the ⌈r|F|⌉ largest values and the denominator is
    /// r·|F|·max, so the ratio can exceed 1 when r|F| is not an integer.
    /// r|F| within 1e-9 (relative) of an integer is treated as that integer.
    pub fn mu_r(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::Domain(format!("mu_r needs 0 < r <= 1, got {r}")));
        }
        let scaled = r * self.total as f64;
        let nearest = scaled.round();
        let top = if (scaled - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest
        } else {
            scaled.ceil()
        };
        self.mu_top(top as u64, scaled)
    }

    /// Sum of the `top` largest values divided by `scaled_count · max`.
    pub(crate) fn mu_top(&self, top: u64, scaled_count: f64) -> Result<f64> {
        if self.orientation != Orientation::Maximize {
            return Err(Error::Orientation);
        }
        let max = self.values[0];
        if max <= 0.0 {
            return Err(Error::UndefinedRatio(max));
        }
        let mut left = top.min(self.total);
        let mut sum = 0.0;
        for (v, &c) in self.values.iter().zip(&self.counts) {
            if left == 0 {
                break;
            }
            let take = left.min(c);
            sum += v * take as f64;
            left -= take;
        }
        Ok(sum / (scaled_count * max))
    }

    /// `value,count` rows in descending value order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,count\n");
        for (v, c) in self.values.iter().zip(&self.counts) {
            let _ = writeln!(out, "{v},{c}");
        }
        out
    }
}

impl Serialize for ObjectiveDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ObjectiveDistribution", 5)?;
        st.serialize_field("orientation", &self.orientation)?;
        st.serialize_field("values", &self.values)?;
        st.serialize_field("counts", &self.counts)?;
        st.serialize_field("total", &self.total)?;
        st.serialize_field("provenance", &self.provenance)?;
        st.end()
    }
}

/// Bucket key: exact integers for graph kinds, 12 decimal digits for tour lengths.
fn bucket(kind: ProblemKind, v: f64) -> i64 {
    match kind {
        ProblemKind::Tsp => (v * TSP_DIGITS).round() as i64,
        _ => v as i64,
    }
}

fn unbucket(kind: ProblemKind, key: i64) -> f64 {
    match kind {
        ProblemKind::Tsp => key as f64 / TSP_DIGITS,
        _ => key as f64,
    }
}

/// Class value used for a raw objective value of `kind` (identity for graph kinds).
pub fn class_value(kind: ProblemKind, v: f64) -> f64 {
    unbucket(kind, bucket(kind, v))
}

/// Exact histogram of objective values over the instance's feasible set.
///
/// Enumeration is split into fixed rank ranges processed in parallel; the
/// merged histogram does not depend on the worker count.
pub fn distribution_of(instance: &ProblemInstance, cap: u64) -> Result<ObjectiveDistribution> {
    let total = feasible_count(instance);
    if total > cap as u128 {
        return Err(Error::Capacity {
            what: format!("distribution of {}", instance.descriptor()),
            required: total,
            cap: cap as u128,
        });
    }
    let total = total as u64;
    let kind = instance.kind();
    let chunks = total.div_ceil(CHUNK);
    let hist = (0..chunks)
        .into_par_iter()
        .fold(BTreeMap::<i64, u64>::new, |mut acc, c| {
            let mut it = enumerate_range(instance, c * CHUNK..(c + 1) * CHUNK);
            while let Some(v) = it.next_value() {
                *acc.entry(bucket(kind, v)).or_insert(0) += 1;
            }
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, c) in b {
                *a.entry(k).or_insert(0) += c;
            }
            a
        });
    let (values, counts): (Vec<f64>, Vec<u64>) = hist
        .into_iter()
        .rev()
        .map(|(k, c)| (unbucket(kind, k), c))
        .unzip();
    ObjectiveDistribution::new(
        values,
        counts,
        instance.orientation(),
        instance.descriptor(),
    )
}
