use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::{self, SCHEMA_VERSION};
use super::spec::{ExperimentId, ExperimentSpec};
use crate::bounds::{alpha_ub, lambda_ub, verify_theorem1_witness};
use crate::calibrate::{
    fit_log_linear, fit_mu_model, optimize_ladder, predict_alpha_ub, predict_lambda_ub, MuSample,
    MuVariant, RegressionModel, TrainingInfo,
};
use crate::distribution::distribution_of;
use crate::error::{Error, Result};
use crate::problems::{
    gen_graph_instance, gen_tsp, EdgeRule, GenConfig, Orientation, ProblemKind,
    DEFAULT_ENUMERATION_CAP,
};
use crate::seeds::derive_seed;

/// Slack allowed on floating-point bound comparisons.
pub const BOUND_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub kind: ProblemKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub seed: u64,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_code: Option<i32>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_code: Option<i32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub experiment: ExperimentId,
    pub seed: u64,
    /// "complete" only when every instance ran and every check passed.
    pub status: String,
    pub spec: ExperimentSpec,
    pub files: Vec<String>,
    pub instances: Vec<InstanceRecord>,
    pub checks: Vec<CheckRecord>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

impl RunReport {
    /// 0 when complete, otherwise the most severe code among failures.
    pub fn exit_code(&self) -> i32 {
        let m = &self.manifest;
        m.instances
            .iter()
            .filter_map(|i| i.exit_code)
            .chain(
                m.checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.exit_code.unwrap_or(2)),
            )
            .max()
            .unwrap_or(0)
    }

    pub fn is_complete(&self) -> bool {
        self.manifest.status == "complete"
    }
}

struct Task {
    kind: ProblemKind,
    n: usize,
    k: Option<usize>,
    id: String,
    seed: u64,
}

#[derive(Clone, Debug)]
struct DepthRow {
    p: usize,
    lambda: f64,
    alpha: Option<f64>,
    lambda_ub: f64,
    alpha_ub: Option<f64>,
}

#[derive(Clone, Debug)]
struct InstanceData {
    rho: f64,
    mu1: Option<f64>,
    /// (p, r, μ_r) over `r_depths`.
    mu_grid: Vec<(usize, f64, f64)>,
    rows: Vec<DepthRow>,
}

struct Outcome {
    task: Task,
    data: Result<InstanceData>,
    wall: f64,
}

fn tasks(spec: &ExperimentSpec) -> Vec<Task> {
    let mut out = Vec::new();
    for fleet in &spec.fleets {
        for &n in &fleet.sizes {
            let k = fleet.k_for(n);
            for i in 0..spec.instances {
                out.push(Task {
                    kind: fleet.kind,
                    n,
                    k,
                    id: format!("{}-n{n}-{i:03}", fleet.kind.label()),
                    seed: derive_seed(
                        spec.seed,
                        &[fleet.kind.id(), n as u64, k.unwrap_or(0) as u64, i as u64],
                    ),
                });
            }
        }
    }
    out
}

fn run_instance(spec: &ExperimentSpec, task: &Task) -> Result<InstanceData> {
    let instance = match task.kind {
        ProblemKind::Tsp => gen_tsp(task.n, task.seed)?,
        kind => gen_graph_instance(
            kind,
            task.n,
            task.k,
            EdgeRule::default_for(kind),
            task.seed,
            &GenConfig::default(),
        )?,
    };
    let dist = distribution_of(&instance, DEFAULT_ENUMERATION_CAP)?;
    let maximize = dist.orientation() == Orientation::Maximize;
    let mu1 = if maximize { dist.mu_r(1.0).ok() } else { None };
    let mut mu_grid = Vec::new();
    if spec.experiment.needs_mu_grid() {
        for &p in &spec.r_depths {
            let q = (2 * p + 1) as f64;
            let r = 1.0 / (q * q);
            if r * dist.total() as f64 >= spec.min_scaled_count {
                mu_grid.push((p, r, alpha_ub(p, &dist)?));
            }
        }
    }
    let mut rows = Vec::new();
    if spec.experiment.optimizes() {
        let p_max = spec.depths.iter().copied().max().unwrap_or(0);
        let ladder = optimize_ladder(
            &dist,
            p_max,
            spec.objective(),
            &spec.optimizer,
            derive_seed(task.seed, &[1]),
        )?;
        for &p in &spec.depths {
            let m = &ladder[p].metrics;
            rows.push(DepthRow {
                p,
                lambda: m.lambda,
                alpha: m.alpha,
                lambda_ub: lambda_ub(p, dist.rho()),
                alpha_ub: if maximize {
                    Some(alpha_ub(p, &dist)?)
                } else {
                    None
                },
            });
        }
    }
    Ok(InstanceData {
        rho: dist.rho(),
        mu1,
        mu_grid,
        rows,
    })
}

/// Output files and checks, keyed by file name so the manifest lists them sorted.
#[derive(Default)]
struct Bundle {
    files: BTreeMap<String, String>,
    checks: Vec<CheckRecord>,
}

impl Bundle {
    fn check(&mut self, name: &str, passed: bool, detail: String, code: i32) {
        self.checks.push(CheckRecord {
            name: name.into(),
            passed,
            detail,
            exit_code: (!passed).then_some(code),
        });
    }

    fn model(&mut self, name: String, model: &RegressionModel) -> Result<()> {
        self.files.insert(name, io::to_json(model)?);
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Runs generate → enumerate → optimize → bound/fit for every instance and
/// writes the CSV/JSON bundle plus `manifest.json` into `spec.out_dir`.
///
/// Spec-level problems (invalid spec, existing output without `force`) are
/// returned as errors; per-instance failures and failed checks are recorded
/// in the manifest and reflected in [`RunReport::exit_code`].
pub fn run_experiment(spec: &ExperimentSpec, force: bool) -> Result<RunReport> {
    spec.validate()?;
    let manifest_path = spec.out_dir.join("manifest.json");
    if manifest_path.exists() && !force {
        return Err(Error::AlreadyExists(manifest_path.display().to_string()));
    }
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Invalid(format!("worker pool: {e}")))?;

    let outcomes: Vec<Outcome> = pool.install(|| {
        tasks(spec)
            .into_par_iter()
            .map(|task| {
                let t = Instant::now();
                let data = run_instance(spec, &task);
                Outcome {
                    task,
                    data,
                    wall: t.elapsed().as_secs_f64(),
                }
            })
            .collect()
    });

    let mut bundle = Bundle::default();
    match spec.experiment {
        ExperimentId::Theorem1Witness => witness(spec, &mut bundle)?,
        ExperimentId::LambdaVsBound => lambda_vs_bound(&outcomes, &mut bundle),
        ExperimentId::RhoScaling => {
            rho_tables(&outcomes, &mut bundle);
            lambda_models(spec, &outcomes, &mut bundle)?;
        }
        ExperimentId::LambdaPrediction => {
            rho_tables(&outcomes, &mut bundle);
            let models = lambda_models(spec, &outcomes, &mut bundle)?;
            lambda_prediction(&outcomes, &models, &mut bundle)?;
        }
        ExperimentId::AlphaVsBound => alpha_vs_bound(&outcomes, &mut bundle),
        ExperimentId::MuSurface => {
            mu_surface(&outcomes, &mut bundle);
        }
        ExperimentId::MuFit => {
            let grid = mu_surface(&outcomes, &mut bundle);
            mu_models(spec, &outcomes, &grid, &mut bundle)?;
        }
        ExperimentId::AlphaPrediction => {
            let grid = mu_surface(&outcomes, &mut bundle);
            let models = mu_models(spec, &outcomes, &grid, &mut bundle)?;
            alpha_prediction(&outcomes, &models, &mut bundle)?;
        }
    }

    for (name, contents) in &bundle.files {
        io::write_new(&spec.out_dir.join(name), contents, true)?;
    }
    let instances: Vec<InstanceRecord> = outcomes
        .iter()
        .map(|o| InstanceRecord {
            id: o.task.id.clone(),
            kind: o.task.kind,
            n: o.task.n,
            k: o.task.k,
            seed: o.task.seed,
            status: if o.data.is_ok() { "ok" } else { "failed" }.into(),
            error: o.data.as_ref().err().map(|e| e.to_string()),
            exit_code: o.data.as_ref().err().map(Error::exit_code),
            wall_time_s: o.wall,
        })
        .collect();
    let complete =
        instances.iter().all(|i| i.exit_code.is_none()) && bundle.checks.iter().all(|c| c.passed);
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        experiment: spec.experiment,
        seed: spec.seed,
        status: if complete { "complete" } else { "incomplete" }.into(),
        spec: spec.clone(),
        files: bundle.files.keys().cloned().collect(),
        instances,
        checks: bundle.checks,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    io::write_new(&manifest_path, &text, true)?;
    Ok(RunReport {
        out_dir: spec.out_dir.clone(),
        manifest,
    })
}

fn ok_outcomes(outcomes: &[Outcome]) -> impl Iterator<Item = (&Task, &InstanceData)> {
    outcomes
        .iter()
        .filter_map(|o| o.data.as_ref().ok().map(|d| (&o.task, d)))
}

fn witness(spec: &ExperimentSpec, bundle: &mut Bundle) -> Result<()> {
    let p_max = spec
        .depths
        .iter()
        .copied()
        .max()
        .unwrap_or(crate::bounds::MAX_RELAX_DEPTH);
    match verify_theorem1_witness(p_max, spec.witness.total, spec.witness.grid_step) {
        Ok(report) => {
            bundle.files.insert("witness.csv".into(), report.to_csv());
            bundle.check(
                "theorem1-witness",
                true,
                format!(
                    "{} (p, parity) maxima at the expected endpoints",
                    report.rows.len()
                ),
                4,
            );
            Ok(())
        }
        Err(e @ Error::Witness { .. }) => {
            bundle.check("theorem1-witness", false, e.to_string(), 4);
            Ok(())
        }
        Err(e) => Err(e),
    }
}

/// `value < bound + BOUND_TOL`, false for NaN.
fn below(value: f64, bound: f64) -> bool {
    value < bound + BOUND_TOL
}

fn lambda_vs_bound(outcomes: &[Outcome], bundle: &mut Bundle) {
    let mut csv = String::from("instance,p,lambda,lambda_ub\n");
    let mut violations = Vec::new();
    let mut rows = 0;
    for (task, d) in ok_outcomes(outcomes) {
        for r in &d.rows {
            let _ = writeln!(csv, "{},{},{},{}", task.id, r.p, r.lambda, r.lambda_ub);
            rows += 1;
            if !below(r.lambda, r.lambda_ub) {
                violations.push(format!(
                    "{} p={}: {} >= {}",
                    task.id, r.p, r.lambda, r.lambda_ub
                ));
            }
        }
    }
    bundle.files.insert("lambda_vs_bound.csv".into(), csv);
    bound_check(bundle, "lambda-below-bound", rows, violations);
}

fn alpha_vs_bound(outcomes: &[Outcome], bundle: &mut Bundle) {
    let mut csv = String::from("instance,p,alpha,alpha_ub\n");
    let mut violations = Vec::new();
    let mut rows = 0;
    for (task, d) in ok_outcomes(outcomes) {
        for r in &d.rows {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                task.id,
                r.p,
                opt(r.alpha),
                opt(r.alpha_ub)
            );
            rows += 1;
            if let (Some(a), Some(ub)) = (r.alpha, r.alpha_ub) {
                if a > ub + BOUND_TOL {
                    violations.push(format!("{} p={}: {a} > {ub}", task.id, r.p));
                }
            }
        }
    }
    bundle.files.insert("alpha_vs_bound.csv".into(), csv);
    bound_check(bundle, "alpha-below-bound", rows, violations);
}

fn bound_check(bundle: &mut Bundle, name: &str, rows: usize, violations: Vec<String>) {
    let detail = if violations.is_empty() {
        format!("{rows} rows within bound")
    } else {
        format!(
            "{} of {rows} rows violate the bound: {}",
            violations.len(),
            violations.join("; ")
        )
    };
    bundle.check(name, violations.is_empty(), detail, 4);
}

fn rho_tables(outcomes: &[Outcome], bundle: &mut Bundle) {
    let mut csv = String::from("instance,kind,n,rho,ln_rho\n");
    let mut by_size: BTreeMap<(ProblemKind, usize), Vec<f64>> = BTreeMap::new();
    for (task, d) in ok_outcomes(outcomes) {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            task.id,
            task.kind,
            task.n,
            d.rho,
            d.rho.ln()
        );
        by_size
            .entry((task.kind, task.n))
            .or_default()
            .push(d.rho.ln());
    }
    bundle.files.insert("rho.csv".into(), csv);
    let mut summary = String::from("kind,n,instances,mean_ln_rho\n");
    for ((kind, n), v) in &by_size {
        let _ = writeln!(
            summary,
            "{kind},{n},{},{}",
            v.len(),
            v.iter().sum::<f64>() / v.len() as f64
        );
    }
    bundle.files.insert("rho_by_size.csv".into(), summary);
}

fn kinds_in(outcomes: &[Outcome]) -> Vec<ProblemKind> {
    let mut kinds: Vec<ProblemKind> = outcomes.iter().map(|o| o.task.kind).collect();
    kinds.dedup();
    kinds
}

fn lambda_models(
    spec: &ExperimentSpec,
    outcomes: &[Outcome],
    bundle: &mut Bundle,
) -> Result<BTreeMap<ProblemKind, RegressionModel>> {
    let mut models = BTreeMap::new();
    for kind in kinds_in(outcomes) {
        let points: Vec<(f64, f64)> = ok_outcomes(outcomes)
            .filter(|(t, _)| t.kind == kind)
            .map(|(t, d)| (t.n as f64, d.rho.ln()))
            .collect();
        // per-size mean ln ρ: same line as the per-instance fit when every
        // size has the same instance count, with r² free of within-size scatter
        let mut by_size: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for &(n, y) in &points {
            let e = by_size.entry(n as usize).or_insert((0.0, 0));
            e.0 += y;
            e.1 += 1;
        }
        let means: Vec<(f64, f64)> = by_size
            .iter()
            .map(|(&n, &(s, c))| (n as f64, s / c as f64))
            .collect();
        let name = format!("lambda-fit-{kind}");
        match fit_log_linear(&means).and_then(|m| Ok((m, fit_log_linear(&points)?))) {
            Ok((fit, per_instance)) => {
                let model = RegressionModel::lambda(
                    &fit,
                    TrainingInfo {
                        description: format!(
                            "{kind}: mean ln rho per size over {} instances, seed {}; per-instance r2 {}",
                            points.len(),
                            spec.seed,
                            per_instance.r2
                        ),
                        n_values: means.iter().map(|m| m.0).collect(),
                        samples: points.len(),
                        mu1: None,
                    },
                );
                let detail = format!(
                    "slope {} intercept {} r2 {} (per-instance slope {} r2 {})",
                    fit.slope, fit.intercept, fit.r2, per_instance.slope, per_instance.r2
                );
                bundle.check(&name, true, detail, 2);
                bundle.model(format!("lambda_model_{kind}.json"), &model)?;
                models.insert(kind, model);
            }
            Err(e) => bundle.check(&name, false, e.to_string(), e.exit_code()),
        }
    }
    Ok(models)
}

fn lambda_prediction(
    outcomes: &[Outcome],
    models: &BTreeMap<ProblemKind, RegressionModel>,
    bundle: &mut Bundle,
) -> Result<()> {
    let mut csv = String::from("instance,kind,n,p,lambda,lambda_ub,lambda_hat\n");
    let mut violations = Vec::new();
    let mut rows = 0;
    for (task, d) in ok_outcomes(outcomes) {
        let Some(model) = models.get(&task.kind) else {
            continue;
        };
        for r in &d.rows {
            let hat = predict_lambda_ub(model, task.n as f64, r.p)?;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{hat}",
                task.id, task.kind, task.n, r.p, r.lambda, r.lambda_ub
            );
            rows += 1;
            if !below(r.lambda, r.lambda_ub) {
                violations.push(format!(
                    "{} p={}: {} >= {}",
                    task.id, r.p, r.lambda, r.lambda_ub
                ));
            }
        }
    }
    bundle.files.insert("lambda_prediction.csv".into(), csv);
    bound_check(bundle, "lambda-below-bound", rows, violations);
    Ok(())
}

/// Averaged μ̄_r per (kind, n, p), in that order.
type MuGrid = BTreeMap<(ProblemKind, usize, usize), (f64, f64, usize)>;

fn mu_surface(outcomes: &[Outcome], bundle: &mut Bundle) -> MuGrid {
    let mut sums: MuGrid = BTreeMap::new();
    for (task, d) in ok_outcomes(outcomes) {
        for &(p, r, mu) in &d.mu_grid {
            let e = sums.entry((task.kind, task.n, p)).or_insert((r, 0.0, 0));
            e.1 += mu;
            e.2 += 1;
        }
    }
    let mut csv = String::from("kind,n,p,r,log_inv_r,mu_bar,instances\n");
    for ((kind, n, p), e) in sums.iter_mut() {
        e.1 /= e.2 as f64;
        let _ = writeln!(csv, "{kind},{n},{p},{},{},{},{}", e.0, -e.0.ln(), e.1, e.2);
    }
    bundle.files.insert("mu_surface.csv".into(), csv);
    sums
}

fn mu_models(
    spec: &ExperimentSpec,
    outcomes: &[Outcome],
    grid: &MuGrid,
    bundle: &mut Bundle,
) -> Result<BTreeMap<ProblemKind, RegressionModel>> {
    let mut models = BTreeMap::new();
    let mut fit_csv = String::from("kind,n,p,r,mu_bar,mu_hat\n");
    for kind in kinds_in(outcomes) {
        let samples: Vec<MuSample> = grid
            .iter()
            .filter(|((k, _, _), _)| *k == kind)
            .map(|(&(_, n, _), &(r, mu, _))| MuSample { n: n as f64, r, mu })
            .collect();
        let mu1s: Vec<f64> = ok_outcomes(outcomes)
            .filter(|(t, _)| t.kind == kind)
            .filter_map(|(_, d)| d.mu1)
            .collect();
        let mu1 = mu1s.iter().sum::<f64>() / mu1s.len().max(1) as f64;
        let name = format!("mu-fit-{kind}");
        // μ_1 is the same for every k-colorable instance, so the offset is pinned
        let first = if kind == ProblemKind::MaxKColorableSubgraph {
            MuVariant::Fixed { mu1 }
        } else {
            MuVariant::Full
        };
        let mut note = String::new();
        let fitted = match fit_mu_model(&samples, first) {
            Err(Error::Fit { reason, rmse, .. })
                if first == MuVariant::Full && !mu1s.is_empty() =>
            {
                note = format!(
                    "; full model failed ({reason}, rmse {rmse}), offset pinned to mean mu_1 {mu1}"
                );
                fit_mu_model(&samples, MuVariant::Fixed { mu1 })
            }
            other => other,
        };
        match fitted {
            Ok(mut model) => {
                model.training.description =
                    format!("{kind}: mean mu_r per (n, r), seed {}{note}", spec.seed);
                for ((k, n, p), &(r, mu, _)) in grid.iter().filter(|((k, _, _), _)| *k == kind) {
                    let hat = opt(model.mu_hat(*n as f64, r));
                    let _ = writeln!(fit_csv, "{k},{n},{p},{r},{mu},{hat}");
                }
                let detail = format!(
                    "{:?} rmse {} r2 {}{note}",
                    model.variant,
                    opt(model.rmse),
                    opt(model.r2)
                );
                bundle.check(&name, true, detail, 2);
                bundle.model(format!("mu_model_{kind}.json"), &model)?;
                models.insert(kind, model);
            }
            Err(e) => bundle.check(&name, false, e.to_string(), e.exit_code()),
        }
    }
    bundle.files.insert("mu_fit.csv".into(), fit_csv);
    Ok(models)
}

fn alpha_prediction(
    outcomes: &[Outcome],
    models: &BTreeMap<ProblemKind, RegressionModel>,
    bundle: &mut Bundle,
) -> Result<()> {
    let mut csv = String::from("instance,kind,n,p,alpha,alpha_ub,alpha_hat\n");
    let mut violations = Vec::new();
    let mut rows = 0;
    for (task, d) in ok_outcomes(outcomes) {
        let hat_for = |p| {
            models
                .get(&task.kind)
                .map(|m| predict_alpha_ub(m, task.n as f64, p))
                .transpose()
        };
        for r in &d.rows {
            let hat = hat_for(r.p)?;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                task.id,
                task.kind,
                task.n,
                r.p,
                opt(r.alpha),
                opt(r.alpha_ub),
                opt(hat)
            );
            rows += 1;
            if let (Some(a), Some(ub)) = (r.alpha, r.alpha_ub) {
                if a > ub + BOUND_TOL {
                    violations.push(format!("{} p={}: {a} > {ub}", task.id, r.p));
                }
            }
        }
    }
    bundle.files.insert("alpha_prediction.csv".into(), csv);
    bound_check(bundle, "alpha-below-bound", rows, violations);
    Ok(())
}
