use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::MAX_RELAX_DEPTH;
use crate::calibrate::{ObjectiveKind, OptimizerConfig};
use crate::error::{Error, Result};
use crate::problems::{
    feasible_count, Orientation, ProblemInstance, ProblemKind, DEFAULT_ENUMERATION_CAP,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentId {
    #[serde(rename = "fig1-lambda-vs-bound")]
    LambdaVsBound,
    #[serde(rename = "fig2-rho-scaling")]
    RhoScaling,
    #[serde(rename = "fig3-lambda-prediction")]
    LambdaPrediction,
    #[serde(rename = "fig4-alpha-vs-bound")]
    AlphaVsBound,
    #[serde(rename = "fig5-mu-surface")]
    MuSurface,
    #[serde(rename = "fig6-mu-fit")]
    MuFit,
    #[serde(rename = "fig7-alpha-prediction")]
    AlphaPrediction,
    #[serde(rename = "thm1-witness")]
    Theorem1Witness,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::LambdaVsBound,
        ExperimentId::RhoScaling,
        ExperimentId::LambdaPrediction,
        ExperimentId::AlphaVsBound,
        ExperimentId::MuSurface,
        ExperimentId::MuFit,
        ExperimentId::AlphaPrediction,
        ExperimentId::Theorem1Witness,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ExperimentId::LambdaVsBound => "fig1-lambda-vs-bound",
            ExperimentId::RhoScaling => "fig2-rho-scaling",
            ExperimentId::LambdaPrediction => "fig3-lambda-prediction",
            ExperimentId::AlphaVsBound => "fig4-alpha-vs-bound",
            ExperimentId::MuSurface => "fig5-mu-surface",
            ExperimentId::MuFit => "fig6-mu-fit",
            ExperimentId::AlphaPrediction => "fig7-alpha-prediction",
            ExperimentId::Theorem1Witness => "thm1-witness",
        }
    }

    pub(crate) fn optimizes(self) -> bool {
        matches!(
            self,
            ExperimentId::LambdaVsBound
                | ExperimentId::LambdaPrediction
                | ExperimentId::AlphaVsBound
                | ExperimentId::AlphaPrediction
        )
    }

    pub(crate) fn needs_mu_grid(self) -> bool {
        matches!(
            self,
            ExperimentId::MuSurface | ExperimentId::MuFit | ExperimentId::AlphaPrediction
        )
    }

    pub(crate) fn maximization_only(self) -> bool {
        matches!(
            self,
            ExperimentId::AlphaVsBound
                | ExperimentId::MuSurface
                | ExperimentId::MuFit
                | ExperimentId::AlphaPrediction
        )
    }

    pub fn default_objective(self) -> ObjectiveKind {
        match self {
            ExperimentId::AlphaVsBound | ExperimentId::AlphaPrediction => {
                ObjectiveKind::MaxExpectation
            }
            _ => ObjectiveKind::MaxLambda,
        }
    }
}

impl std::fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.label() == s || id.label().split('-').next() == Some(s))
            .ok_or_else(|| Error::Invalid(format!("unknown experiment {s:?}")))
    }
}

/// One problem kind and the sizes to sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fleet {
    pub kind: ProblemKind,
    pub sizes: Vec<usize>,
    /// Colors or cover size. Defaults: 3 colors, cover size n/2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl Fleet {
    pub fn new(kind: ProblemKind, sizes: impl IntoIterator<Item = usize>) -> Self {
        Fleet {
            kind,
            sizes: sizes.into_iter().collect(),
            k: None,
        }
    }

    pub fn k_for(&self, n: usize) -> Option<usize> {
        match self.kind {
            ProblemKind::Tsp | ProblemKind::MaxCut => None,
            ProblemKind::MaxKColorableSubgraph => Some(self.k.unwrap_or(3)),
            ProblemKind::MaxKVertexCover => Some(self.k.unwrap_or(n / 2)),
        }
    }
}

/// Largest size per kind accepted without `allow_large`.
pub fn desk_limit(kind: ProblemKind) -> usize {
    match kind {
        ProblemKind::Tsp => 8,
        ProblemKind::MaxKColorableSubgraph => 10,
        ProblemKind::MaxCut => 20,
        ProblemKind::MaxKVertexCover => 18,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WitnessConfig {
    pub total: u64,
    pub grid_step: f64,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        WitnessConfig {
            total: 1000,
            grid_step: 1e-3,
        }
    }
}

fn default_r_depths() -> Vec<usize> {
    (0..=9).collect()
}

fn default_min_scaled_count() -> f64 {
    20.0
}

/// Everything that determines an experiment's output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: ExperimentId,
    #[serde(default)]
    pub fleets: Vec<Fleet>,
    pub instances: usize,
    /// Circuit depths to optimize (or, for the witness, up to the largest one).
    #[serde(default)]
    pub depths: Vec<usize>,
    /// Depths whose r = 1/(2p+1)² form the μ̄_r grid.
    #[serde(default = "default_r_depths")]
    pub r_depths: Vec<usize>,
    /// μ̄_r cells with r·|F| below this are left out: there ⌈r|F|⌉/(r|F|)
    /// dominates μ_r instead of the shape of the distribution.
    #[serde(default = "default_min_scaled_count")]
    pub min_scaled_count: f64,
    pub seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveKind>,
    #[serde(default)]
    pub witness: WitnessConfig,
    /// May be left out of a spec file when the caller supplies it.
    #[serde(default)]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub allow_large: bool,
    /// Worker threads; `None` uses every core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl ExperimentSpec {
    /// Desk-scale defaults for each experiment.
    pub fn preset(experiment: ExperimentId, out_dir: impl Into<PathBuf>, seed: u64) -> Self {
        use ProblemKind::*;
        let tsp = || Fleet::new(Tsp, 5..=8);
        let mkcs = || Fleet::new(MaxKColorableSubgraph, 6..=10);
        let maxcut = || Fleet::new(MaxCut, [12, 14, 16]);
        let mkvc = || Fleet::new(MaxKVertexCover, 10..=16);
        let (fleets, instances, depths) = match experiment {
            ExperimentId::LambdaVsBound => (vec![tsp(), mkcs(), mkvc()], 10, (1..=5).collect()),
            ExperimentId::RhoScaling => (vec![mkcs(), mkvc()], 20, vec![]),
            ExperimentId::LambdaPrediction => (vec![mkcs(), mkvc()], 10, (1..=5).collect()),
            ExperimentId::AlphaVsBound => (vec![mkcs(), maxcut(), mkvc()], 10, (1..=5).collect()),
            ExperimentId::MuSurface | ExperimentId::MuFit => {
                (vec![mkcs(), maxcut(), mkvc()], 20, vec![])
            }
            ExperimentId::AlphaPrediction => {
                (vec![mkcs(), maxcut(), mkvc()], 10, (1..=5).collect())
            }
            ExperimentId::Theorem1Witness => (vec![], 1, (1..=MAX_RELAX_DEPTH).collect()),
        };
        ExperimentSpec {
            experiment,
            fleets,
            instances,
            depths,
            r_depths: default_r_depths(),
            min_scaled_count: default_min_scaled_count(),
            seed,
            optimizer: OptimizerConfig::default(),
            objective: None,
            witness: WitnessConfig::default(),
            out_dir: out_dir.into(),
            allow_large: false,
            workers: None,
        }
    }

    pub fn objective(&self) -> ObjectiveKind {
        self.objective
            .unwrap_or(self.experiment.default_objective())
    }

    pub fn validate(&self) -> Result<()> {
        if self.out_dir.as_os_str().is_empty() {
            return Err(Error::Invalid("no output directory given".into()));
        }
        if self.instances == 0 {
            return Err(Error::Invalid("instances must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Invalid("workers must be at least 1".into()));
        }
        if self.experiment == ExperimentId::Theorem1Witness {
            let p_max = self.depths.iter().copied().max().unwrap_or(MAX_RELAX_DEPTH);
            if p_max > MAX_RELAX_DEPTH {
                return Err(Error::Domain(format!(
                    "witness depth {p_max} exceeds {MAX_RELAX_DEPTH}"
                )));
            }
            return Ok(());
        }
        if self.fleets.is_empty() {
            return Err(Error::Invalid("no problem fleets given".into()));
        }
        if self.experiment.optimizes() && self.depths.is_empty() {
            return Err(Error::Invalid(format!(
                "{} needs at least one depth",
                self.experiment
            )));
        }
        if self.experiment.needs_mu_grid() && self.r_depths.is_empty() {
            return Err(Error::Invalid(format!(
                "{} needs at least one r depth",
                self.experiment
            )));
        }
        for fleet in &self.fleets {
            if self.experiment.maximization_only()
                && fleet.kind.orientation() != Orientation::Maximize
            {
                return Err(Error::Invalid(format!(
                    "{} needs maximization problems, got {}",
                    self.experiment, fleet.kind
                )));
            }
            if fleet.sizes.is_empty() {
                return Err(Error::Invalid(format!("{} fleet has no sizes", fleet.kind)));
            }
            for &n in &fleet.sizes {
                self.check_size(fleet, n)?;
            }
        }
        Ok(())
    }

    fn check_size(&self, fleet: &Fleet, n: usize) -> Result<()> {
        let count = match fleet.kind {
            ProblemKind::Tsp => {
                if n < 3 {
                    return Err(Error::InvalidSize(format!(
                        "tsp needs at least 3 cities, got {n}"
                    )));
                }
                (1..n as u128).product::<u128>()
            }
            kind => feasible_count(&ProblemInstance::graph(kind, n, fleet.k_for(n), vec![], 0)?),
        };
        if !self.allow_large && n > desk_limit(fleet.kind) {
            return Err(Error::Capacity {
                what: format!(
                    "{} n={n} (desk limit {}; use allow_large)",
                    fleet.kind,
                    desk_limit(fleet.kind)
                ),
                required: count,
                cap: DEFAULT_ENUMERATION_CAP as u128,
            });
        }
        if count > DEFAULT_ENUMERATION_CAP as u128 {
            return Err(Error::Capacity {
                what: format!("{} n={n} enumeration", fleet.kind),
                required: count,
                cap: DEFAULT_ENUMERATION_CAP as u128,
            });
        }
        Ok(())
    }
}
