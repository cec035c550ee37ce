use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gmqaoa::bounds::{verify_theorem1_witness, BoundReport, MAX_RELAX_DEPTH};
use gmqaoa::calibrate::{
    fit_log_linear, fit_mu_model, optimize_parameters, predict_alpha_ub, predict_lambda_ub,
    ModelVariant, MuSample, MuVariant, ObjectiveKind, OptimizerConfig, RegressionModel,
    TrainingInfo,
};
use gmqaoa::distribution::distribution_of;
use gmqaoa::harness::{io, run_experiment, ExperimentId, ExperimentSpec};
use gmqaoa::problems::{gen_graph_instance, gen_tsp, EdgeRule, GenConfig, DEFAULT_ENUMERATION_CAP};
use gmqaoa::simulator::{run_circuit, StateMetrics};
use gmqaoa::{
    CircuitParams, Error, ObjectiveDistribution, PhaseFunction, ProblemInstance, ProblemKind,
    Result,
};

/// Grover-mixer QAOA simulation, bounds and scaling experiments.
#[derive(Parser)]
#[command(name = "gmqaoa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Base seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (or directory for `experiment`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Accept sizes beyond the desk-scale limits.
    #[arg(long, global = true)]
    allow_large: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random instance.
    Gen(GenArgs),
    /// Enumerate an instance into its objective-value distribution.
    Dist(SourceArgs),
    /// Run a circuit and report λ, α, E and TTS.
    Simulate(SimulateArgs),
    /// Tune circuit parameters.
    Optimize(OptimizeArgs),
    /// Basis-state, λ and α upper bounds.
    Bounds(BoundsArgs),
    /// Fit or evaluate a regression model.
    #[command(subcommand)]
    Fit(FitCommand),
    /// Regenerate an experiment's data bundle.
    Experiment(ExperimentArgs),
    /// Run the basis-state bound witness or re-check a finished bundle.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Args)]
struct GenArgs {
    /// tsp, mkcs, maxcut or mkvc.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: Option<usize>,
    /// Erdős–Rényi edge probability (overrides the kind's default rule).
    #[arg(long, conflicts_with = "degree")]
    edge_prob: Option<f64>,
    /// Regular-graph degree (overrides the kind's default rule).
    #[arg(long)]
    degree: Option<usize>,
}

#[derive(Args)]
struct SourceArgs {
    /// Distribution JSON.
    #[arg(long, conflicts_with = "instance")]
    dist: Option<PathBuf>,
    /// Instance JSON, enumerated on the fly.
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Args)]
struct PhaseArgs {
    /// Use the threshold phase 𝒞(c) = [c ≤ th] instead of the objective.
    #[arg(long)]
    threshold: Option<f64>,
}

impl PhaseArgs {
    fn phase_fn(&self) -> PhaseFunction {
        self.threshold
            .map_or(PhaseFunction::Objective, |th| PhaseFunction::Threshold {
                th,
            })
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Circuit JSON.
    #[arg(long, conflicts_with_all = ["gammas", "betas"])]
    params: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    betas: Vec<f64>,
    #[command(flatten)]
    phase: PhaseArgs,
}

#[derive(Args)]
struct OptimizerArgs {
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// max-lambda, max-expectation or min-expectation.
    #[arg(long)]
    objective: Option<String>,
}

impl OptimizerArgs {
    fn apply(&self, config: &mut OptimizerConfig) {
        if let Some(r) = self.restarts {
            config.restarts = r;
        }
        if self.max_iters.is_some() {
            config.max_iters = self.max_iters;
        }
        if let Some(t) = self.tol {
            config.tol = t;
        }
    }

    fn objective(&self) -> Result<Option<ObjectiveKind>> {
        self.objective.as_deref().map(str::parse).transpose()
    }
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    p: usize,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    #[command(flatten)]
    phase: PhaseArgs,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Depths to report.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    depths: Vec<usize>,
}

#[derive(Subcommand)]
enum FitCommand {
    /// Least-squares line through (n, ln ρ) from a CSV with `n` and `rho` or `ln_rho` columns.
    Lambda {
        data: PathBuf,
        /// Only rows whose `kind` column matches.
        #[arg(long)]
        kind: Option<String>,
    },
    /// μ̂ fit from a CSV with `n`, `r` and `mu_bar` (or `mu`) columns.
    Mu {
        data: PathBuf,
        #[arg(long)]
        kind: Option<String>,
        /// Pin the offset to this μ_1 instead of fitting the logistic term.
        #[arg(long)]
        fixed: Option<f64>,
    },
    /// Evaluate a saved model at (n, p).
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: f64,
        #[arg(long, value_delimiter = ',')]
        p: Vec<usize>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment id, e.g. fig1-lambda-vs-bound or thm1-witness.
    id: Option<String>,
    /// Full spec as JSON; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Grid check that 𝒢_{p,z} peaks at (2p+1)²/|F| at the expected endpoint.
    Witness {
        #[arg(long, default_value_t = MAX_RELAX_DEPTH)]
        p_max: usize,
        #[arg(long, default_value_t = 1000)]
        total: u64,
        #[arg(long, default_value_t = 1e-3)]
        grid_step: f64,
    },
    /// Re-check the bound columns of a finished experiment bundle.
    Bundle { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let g = &cli.global;
    if let Some(w) = g.workers {
        if w == 0 {
            return Err(Error::Invalid("workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Error::Invalid(format!("worker pool: {e}")))?;
    }
    match &cli.command {
        Command::Gen(a) => gen(g, a),
        Command::Dist(a) => {
            let d = load_dist(a, g)?;
            let text = match g.format {
                Format::Csv => d.to_csv(),
                Format::Json => io::to_json(&d)?,
            };
            emit(g, &text)
        }
        Command::Simulate(a) => simulate(g, a),
        Command::Optimize(a) => optimize(g, a),
        Command::Bounds(a) => bounds(g, a),
        Command::Fit(f) => fit(g, f),
        Command::Experiment(a) => experiment(g, a),
        Command::Verify(v) => verify(g, v),
    }
}

fn emit(g: &Global, text: &str) -> Result<i32> {
    match &g.out {
        Some(path) => io::write_new(path, text, g.force)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn parse_kind(s: &str) -> Result<ProblemKind> {
    ProblemKind::from_label(s).ok_or_else(|| Error::Invalid(format!("unknown problem kind {s:?}")))
}

fn gen(g: &Global, a: &GenArgs) -> Result<i32> {
    let kind = parse_kind(&a.kind)?;
    let instance = if kind == ProblemKind::Tsp {
        gen_tsp(a.n, g.seed)?
    } else {
        let rule = match (a.edge_prob, a.degree) {
            (Some(prob), _) => EdgeRule::ErdosRenyi { prob },
            (None, Some(degree)) => EdgeRule::Regular { degree },
            (None, None) => EdgeRule::default_for(kind),
        };
        let k = match kind {
            ProblemKind::MaxKColorableSubgraph => Some(a.k.unwrap_or(3)),
            ProblemKind::MaxKVertexCover => Some(a.k.unwrap_or(a.n / 2)),
            _ => a.k,
        };
        gen_graph_instance(kind, a.n, k, rule, g.seed, &GenConfig::default())?
    };
    emit(g, &io::to_json(&instance)?)
}

fn load_dist(a: &SourceArgs, g: &Global) -> Result<ObjectiveDistribution> {
    match (&a.dist, &a.instance) {
        (Some(path), _) => io::load(path),
        (None, Some(path)) => {
            let instance: ProblemInstance = io::load(path)?;
            let limit = gmqaoa::harness::desk_limit(instance.kind());
            if !g.allow_large && instance.n() > limit {
                return Err(Error::Capacity {
                    what: format!(
                        "{} n={} (desk limit {limit}; pass --allow-large)",
                        instance.kind(),
                        instance.n()
                    ),
                    required: gmqaoa::problems::feasible_count(&instance),
                    cap: DEFAULT_ENUMERATION_CAP as u128,
                });
            }
            distribution_of(&instance, DEFAULT_ENUMERATION_CAP)
        }
        (None, None) => Err(Error::Invalid("pass --dist or --instance".into())),
    }
}

fn metrics_text(g: &Global, id: &str, p: usize, m: &StateMetrics) -> Result<String> {
    Ok(match g.format {
        Format::Csv => format!("{}\n{}\n", StateMetrics::CSV_HEADER, m.csv_row(id, p)),
        Format::Json => serde_json::to_string_pretty(m)? + "\n",
    })
}

fn simulate(g: &Global, a: &SimulateArgs) -> Result<i32> {
    let d = load_dist(&a.source, g)?;
    let params = match &a.params {
        Some(path) => io::load(path)?,
        None => CircuitParams::new(a.gammas.clone(), a.betas.clone(), a.phase.phase_fn())?,
    };
    let (_, m) = run_circuit(&d, &params);
    emit(g, &metrics_text(g, d.provenance(), params.p(), &m)?)
}

fn optimize(g: &Global, a: &OptimizeArgs) -> Result<i32> {
    let d = load_dist(&a.source, g)?;
    let mut config = OptimizerConfig {
        phase_fn: a.phase.phase_fn(),
        ..OptimizerConfig::default()
    };
    a.optimizer.apply(&mut config);
    let kind = a.optimizer.objective()?.unwrap_or(ObjectiveKind::MaxLambda);
    let result = optimize_parameters(&d, a.p, kind, &config, g.seed)?;
    let text = match g.format {
        Format::Csv => metrics_text(g, d.provenance(), a.p, &result.metrics)?,
        Format::Json => serde_json::to_string_pretty(&result)? + "\n",
    };
    emit(g, &text)
}

fn bounds(g: &Global, a: &BoundsArgs) -> Result<i32> {
    let d = load_dist(&a.source, g)?;
    let reports: Vec<BoundReport> = a.depths.iter().map(|&p| BoundReport::new(p, &d)).collect();
    let text = match g.format {
        Format::Csv => {
            let mut s = format!("{}\n", BoundReport::CSV_HEADER);
            for r in &reports {
                s.push_str(&r.csv_row(d.provenance()));
                s.push('\n');
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&reports)? + "\n",
    };
    emit(g, &text)
}

/// Header-indexed rows of a small CSV file.
fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Invalid(format!("{} is empty", path.display())))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|s| s.trim().to_string()).collect())
        .collect();
    Ok((header, rows))
}

fn column(header: &[String], names: &[&str]) -> Option<usize> {
    names
        .iter()
        .find_map(|n| header.iter().position(|h| h == n))
}

fn numeric_rows(path: &Path, kind: Option<&str>, cols: &[&[&str]]) -> Result<Vec<Vec<f64>>> {
    let (header, rows) = read_table(path)?;
    let idx: Vec<usize> = cols
        .iter()
        .map(|names| {
            column(&header, names)
                .ok_or_else(|| Error::Invalid(format!("missing column {}", names[0])))
        })
        .collect::<Result<_>>()?;
    let kind_col = column(&header, &["kind"]);
    let want = kind.map(parse_kind).transpose()?;
    let mut out = Vec::new();
    for (line, row) in rows.iter().enumerate() {
        if let (Some(want), Some(c)) = (want, kind_col) {
            if row.get(c).and_then(|s| ProblemKind::from_label(s)) != Some(want) {
                continue;
            }
        }
        let vals = idx
            .iter()
            .map(|&i| {
                row.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::Invalid(format!("bad number on data line {}", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(vals);
    }
    Ok(out)
}

fn fit(g: &Global, f: &FitCommand) -> Result<i32> {
    match f {
        FitCommand::Lambda { data, kind } => {
            let (header, _) = read_table(data)?;
            let log_given = column(&header, &["ln_rho"]).is_some();
            let rows = numeric_rows(data, kind.as_deref(), &[&["n"], &["ln_rho", "rho"]])?;
            let points: Vec<(f64, f64)> = rows
                .iter()
                .map(|r| (r[0], if log_given { r[1] } else { r[1].ln() }))
                .collect();
            let fit = fit_log_linear(&points)?;
            let mut n_values: Vec<f64> = points.iter().map(|p| p.0).collect();
            n_values.sort_by(f64::total_cmp);
            n_values.dedup();
            let model = RegressionModel::lambda(
                &fit,
                TrainingInfo {
                    description: data.display().to_string(),
                    n_values,
                    samples: points.len(),
                    mu1: None,
                },
            );
            emit(g, &io::to_json(&model)?)
        }
        FitCommand::Mu { data, kind, fixed } => {
            let rows = numeric_rows(data, kind.as_deref(), &[&["n"], &["r"], &["mu_bar", "mu"]])?;
            let samples: Vec<MuSample> = rows
                .iter()
                .map(|r| MuSample {
                    n: r[0],
                    r: r[1],
                    mu: r[2],
                })
                .collect();
            let variant = fixed.map_or(MuVariant::Full, |mu1| MuVariant::Fixed { mu1 });
            let mut model = fit_mu_model(&samples, variant)?;
            model.training.description = data.display().to_string();
            emit(g, &io::to_json(&model)?)
        }
        FitCommand::Predict { model, n, p } => {
            let m: RegressionModel = io::load(model)?;
            let mut rows = Vec::new();
            for &p in p {
                let v = match m.variant {
                    ModelVariant::Lambda => predict_lambda_ub(&m, *n, p)?,
                    _ => predict_alpha_ub(&m, *n, p)?,
                };
                rows.push((p, v));
            }
            let out = match g.format {
                Format::Csv => {
                    let mut out = String::from("n,p,prediction\n");
                    for (p, v) in &rows {
                        out.push_str(&format!("{n},{p},{v}\n"));
                    }
                    out
                }
                Format::Json => {
                    let list: Vec<_> = rows
                        .iter()
                        .map(|(p, v)| serde_json::json!({"n": n, "p": p, "prediction": v}))
                        .collect();
                    serde_json::to_string_pretty(&list)? + "\n"
                }
            };
            emit(g, &out)
        }
    }
}

fn experiment(g: &Global, a: &ExperimentArgs) -> Result<i32> {
    let mut spec = match (&a.spec, &a.id) {
        (Some(path), _) => serde_json::from_str::<ExperimentSpec>(&std::fs::read_to_string(path)?)?,
        (None, Some(id)) => {
            let out = g
                .out
                .clone()
                .ok_or_else(|| Error::Invalid("pass --out DIR".into()))?;
            ExperimentSpec::preset(id.parse::<ExperimentId>()?, out, g.seed)
        }
        (None, None) => return Err(Error::Invalid("pass an experiment id or --spec".into())),
    };
    if a.spec.is_some() {
        if let Some(out) = &g.out {
            spec.out_dir = out.clone();
        }
    }
    if let Some(n) = a.instances {
        spec.instances = n;
    }
    if let Some(d) = &a.depths {
        spec.depths = d.clone();
    }
    a.optimizer.apply(&mut spec.optimizer);
    if let Some(kind) = a.optimizer.objective()? {
        spec.objective = Some(kind);
    }
    spec.allow_large |= g.allow_large;
    if g.workers.is_some() {
        spec.workers = g.workers;
    }
    let report = run_experiment(&spec, g.force)?;
    let m = &report.manifest;
    for c in &m.checks {
        eprintln!(
            "{} {}: {}",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed = m.instances.iter().filter(|i| i.status != "ok").count();
    eprintln!(
        "{} -> {} ({} instances, {failed} failed, {})",
        m.experiment,
        report.out_dir.display(),
        m.instances.len(),
        m.status
    );
    Ok(report.exit_code())
}

fn verify(g: &Global, v: &VerifyCommand) -> Result<i32> {
    match v {
        VerifyCommand::Witness {
            p_max,
            total,
            grid_step,
        } => {
            let report = verify_theorem1_witness(*p_max, *total, *grid_step)?;
            let text = match g.format {
                Format::Csv => report.to_csv(),
                Format::Json => serde_json::to_string_pretty(&report)? + "\n",
            };
            emit(g, &text)
        }
        VerifyCommand::Bundle { dir } => {
            let mut rows = 0;
            let mut bad = Vec::new();
            let checks: [(&str, &str, &str, bool); 4] = [
                ("lambda_vs_bound.csv", "lambda", "lambda_ub", true),
                ("lambda_prediction.csv", "lambda", "lambda_ub", true),
                ("alpha_vs_bound.csv", "alpha", "alpha_ub", false),
                ("alpha_prediction.csv", "alpha", "alpha_ub", false),
            ];
            for (file, val, ub, strict) in checks {
                let path = dir.join(file);
                if !path.exists() {
                    continue;
                }
                for r in numeric_rows(&path, None, &[&[val], &[ub]])? {
                    rows += 1;
                    let ok = if strict {
                        r[0] < r[1] + gmqaoa::harness::BOUND_TOL
                    } else {
                        r[0] <= r[1] + gmqaoa::harness::BOUND_TOL
                    };
                    if !ok {
                        bad.push(format!("{file}: {} vs {}", r[0], r[1]));
                    }
                }
            }
            if !bad.is_empty() {
                return Err(Error::BoundViolation(bad.join("; ")));
            }
            println!("{rows} rows within bounds");
            Ok(0)
        }
    }
}
