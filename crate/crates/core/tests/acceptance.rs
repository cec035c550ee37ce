//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;
use std::time::Instant;

use gmqaoa::bounds::{
    lambda_ub, relax_g, script_g, tsp_lambda_ub, tsp_rho, verify_theorem1_witness, Parity,
};
use gmqaoa::calibrate::{
    fit_mu_model, optimize_ladder, optimize_parameters, predict_alpha_ub, ModelVariant, MuSample,
    MuVariant, ObjectiveKind, OptimizationResult, OptimizerConfig, RegressionModel,
};
use gmqaoa::distribution::distribution_of;
use gmqaoa::harness::{io, run_experiment, ExperimentId, ExperimentSpec, Fleet};
use gmqaoa::problems::{
    feasible_count, gen_graph_instance, gen_tsp, EdgeRule, GenConfig, DEFAULT_ENUMERATION_CAP,
};
use gmqaoa::seeds::derive_seed;
use gmqaoa::simulator::{reduced_equivalent, run_circuit, ReductionMode};
use gmqaoa::{
    CircuitParams, ObjectiveDistribution, Orientation, PhaseFunction, ProblemInstance, ProblemKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_917;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn instance(kind: ProblemKind, n: usize, k: Option<usize>, seed: u64) -> ProblemInstance {
    match kind {
        ProblemKind::Tsp => gen_tsp(n, seed).unwrap(),
        _ => gen_graph_instance(
            kind,
            n,
            k,
            EdgeRule::default_for(kind),
            seed,
            &GenConfig::default(),
        )
        .unwrap(),
    }
}

struct Fitted {
    id: String,
    values: Vec<f64>,
    orientation: Orientation,
    ladder: Vec<OptimizationResult>,
}

/// Optimized depth ladders 0..=5 for `instances` seeded instances per (kind, n).
fn fleet(
    spec: &[(ProblemKind, Vec<usize>)],
    instances: usize,
    objective: ObjectiveKind,
) -> Vec<Fitted> {
    let mut out = Vec::new();
    for (kind, sizes) in spec {
        for &n in sizes {
            let k = match kind {
                ProblemKind::MaxKColorableSubgraph => Some(3),
                ProblemKind::MaxKVertexCover => Some(n / 2),
                _ => None,
            };
            for i in 0..instances {
                let seed = derive_seed(SEED, &[*kind as u64, n as u64, i as u64]);
                let inst = instance(*kind, n, k, seed);
                let dist = distribution_of(&inst, DEFAULT_ENUMERATION_CAP).unwrap();
                let ladder =
                    optimize_ladder(&dist, 5, objective, &OptimizerConfig::default(), seed)
                        .unwrap();
                out.push(Fitted {
                    id: format!("{}-n{n}-{i}", kind.label()),
                    values: common::all_values(&inst),
                    orientation: inst.orientation(),
                    ladder,
                });
            }
        }
    }
    out
}

fn lambda_fleet() -> Vec<Fitted> {
    fleet(
        &[
            (ProblemKind::Tsp, (5..=8).collect()),
            (ProblemKind::MaxKColorableSubgraph, (6..=10).collect()),
            (ProblemKind::MaxKVertexCover, (10..=16).collect()),
        ],
        10,
        ObjectiveKind::MaxLambda,
    )
}

fn criterion_1(fits: &[Fitted]) -> Outcome {
    let mut rows = 0;
    let mut tightest = 0.0f64;
    for f in fits {
        let rho = common::rho(&f.values, f.orientation);
        for p in 1..=5 {
            let params = &f.ladder[p].best_params;
            let lambda = common::dense_lambda(
                &f.values,
                f.orientation,
                params.gammas(),
                params.betas(),
                params.phase_fn(),
            );
            let bound = ((2 * p + 1) * (2 * p + 1)) as f64 * rho;
            ensure(lambda < bound + 1e-9, || {
                format!("{} p={p}: lambda {lambda} >= bound {bound}", f.id)
            })?;
            ensure((lambda - f.ladder[p].best_value).abs() <= 1e-10, || {
                format!(
                    "{} p={p}: compressed lambda {} vs dense {lambda}",
                    f.id, f.ladder[p].best_value
                )
            })?;
            tightest = tightest.max(lambda / bound.min(1.0));
            rows += 1;
        }
    }
    Ok(format!(
        "{rows} rows, {} instances; max lambda/min(bound,1) = {tightest:.4}",
        fits.len()
    ))
}

fn criterion_9(fits: &[Fitted]) -> Outcome {
    let mut steps = 0;
    for f in fits {
        for p in 1..=5 {
            let (a, b) = (f.ladder[p - 1].best_value, f.ladder[p].best_value);
            ensure(b >= a - 1e-10, || format!("{} p={p}: {b} < {a}", f.id))?;
            steps += 1;
        }
    }
    Ok(format!(
        "{steps} depth steps non-decreasing over {} instances",
        fits.len()
    ))
}

fn criterion_2() -> Outcome {
    let fits = fleet(
        &[
            (ProblemKind::MaxKColorableSubgraph, (6..=10).collect()),
            (ProblemKind::MaxCut, vec![12, 14, 16]),
            (ProblemKind::MaxKVertexCover, (10..=16).collect()),
        ],
        10,
        ObjectiveKind::MaxExpectation,
    );
    let mut rows = 0;
    for f in &fits {
        let max = common::best(&f.values, Orientation::Maximize);
        for p in 1..=5 {
            let params = &f.ladder[p].best_params;
            let alpha = common::dense_expectation(
                &f.values,
                params.gammas(),
                params.betas(),
                params.phase_fn(),
            ) / max;
            let bound = common::mu_inv(&f.values, ((2 * p + 1) * (2 * p + 1)) as u64);
            ensure(alpha <= bound + 1e-9, || {
                format!("{} p={p}: alpha {alpha} > mu {bound}", f.id)
            })?;
            rows += 1;
        }
    }
    Ok(format!("{rows} rows, {} instances", fits.len()))
}

fn random_instance(rng: &mut ChaCha8Rng) -> ProblemInstance {
    loop {
        let seed = rng.gen();
        let inst = match rng.gen_range(0..4) {
            0 => gen_tsp(rng.gen_range(4..=7), seed).unwrap(),
            1 => {
                let rule = EdgeRule::ErdosRenyi {
                    prob: rng.gen_range(0.2..0.9),
                };
                gen_graph_instance(
                    ProblemKind::MaxCut,
                    rng.gen_range(3..=12),
                    None,
                    rule,
                    seed,
                    &GenConfig::default(),
                )
                .unwrap()
            }
            2 => instance(
                ProblemKind::MaxKColorableSubgraph,
                rng.gen_range(3..=7),
                Some(3),
                seed,
            ),
            _ => {
                let n = rng.gen_range(4..=14);
                let k = rng.gen_range(1..n);
                let probe =
                    ProblemInstance::graph(ProblemKind::MaxKVertexCover, n, Some(k), vec![], 0)
                        .unwrap();
                if feasible_count(&probe) > 5000 {
                    continue;
                }
                instance(ProblemKind::MaxKVertexCover, n, Some(k), seed)
            }
        };
        if feasible_count(&inst) <= 5000 {
            return inst;
        }
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 3);
    let (mut worst_class, mut worst_spread) = (0.0f64, 0.0f64);
    for trial in 0..100 {
        let inst = random_instance(&mut rng);
        let values = common::all_values(&inst);
        let dist = distribution_of(&inst, DEFAULT_ENUMERATION_CAP).unwrap();
        let p = rng.gen_range(0..=9);
        let gammas: Vec<f64> = (0..p).map(|_| rng.gen_range(-TAU..TAU)).collect();
        let betas: Vec<f64> = (0..p).map(|_| rng.gen_range(0.0..TAU)).collect();
        let phase = if rng.gen_bool(0.5) {
            PhaseFunction::Objective
        } else {
            // midway between neighbours so summation order cannot flip c <= th
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let j = rng.gen_range(0..sorted.len());
            let next = sorted[j..]
                .iter()
                .copied()
                .find(|&v| !common::same_value(v, sorted[j]))
                .unwrap_or(sorted[j] + 1.0);
            PhaseFunction::Threshold {
                th: 0.5 * (sorted[j] + next),
            }
        };
        let params = CircuitParams::new(gammas.clone(), betas.clone(), phase).unwrap();
        let (state, _) = run_circuit(&dist, &params);
        let compressed = state.class_probabilities();
        let dense = common::dense_probabilities(&values, &gammas, &betas, phase);
        let mut per_class = vec![(0.0, f64::INFINITY, f64::NEG_INFINITY, 0u64); dist.classes()];
        for (&v, &pr) in values.iter().zip(&dense) {
            let j = dist
                .values()
                .iter()
                .position(|&c| common::same_value(c, v))
                .ok_or_else(|| format!("trial {trial}: value {v} has no class"))?;
            let e = &mut per_class[j];
            e.0 += pr;
            e.1 = e.1.min(pr);
            e.2 = e.2.max(pr);
            e.3 += 1;
        }
        for (j, e) in per_class.iter().enumerate() {
            ensure(e.3 == dist.counts()[j], || {
                format!(
                    "trial {trial}: class {j} count {} vs {}",
                    e.3,
                    dist.counts()[j]
                )
            })?;
            worst_class = worst_class.max((e.0 - compressed[j]).abs());
            worst_spread = worst_spread.max(e.2 - e.1);
        }
        ensure(worst_class <= 1e-10, || {
            format!(
                "trial {trial} ({}): class error {worst_class}",
                inst.descriptor()
            )
        })?;
        ensure(worst_spread <= 1e-12, || {
            format!(
                "trial {trial} ({}): in-class spread {worst_spread}",
                inst.descriptor()
            )
        })?;
    }
    Ok(format!(
        "100 pairs; max class error {worst_class:.1e}, max in-class spread {worst_spread:.1e}"
    ))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 4);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let classes = rng.gen_range(2..8);
        let integer = rng.gen_bool(0.5);
        let values: Vec<f64> = (0..classes)
            .map(|i| {
                if integer {
                    (3 * i) as f64
                } else {
                    i as f64 * 0.73 + rng.gen::<f64>() * 0.5
                }
            })
            .rev()
            .collect();
        let counts: Vec<u64> = (0..classes).map(|_| rng.gen_range(1..50)).collect();
        let dist =
            ObjectiveDistribution::new(values.clone(), counts.clone(), Orientation::Maximize, "r")
                .unwrap();
        let base = rng.gen_range(1..=8);
        let mut gammas: Vec<f64> = (0..base).map(|_| rng.gen_range(-PI..PI)).collect();
        let mut betas: Vec<f64> = (0..base).map(|_| rng.gen_range(0.0..TAU)).collect();
        let layer = rng.gen_range(0..=base);
        let mixer_trivial = trial % 2 == 0;
        if mixer_trivial {
            gammas.insert(layer, rng.gen_range(-PI..PI));
            betas.insert(layer, TAU * [1.0, -1.0, 2.0][trial % 3]);
        } else {
            gammas.insert(layer, 0.0);
            betas.insert(layer, rng.gen_range(0.0..TAU));
        }
        let full = CircuitParams::new(gammas, betas, PhaseFunction::Objective).unwrap();
        let mode = if mixer_trivial {
            ReductionMode::MixerTrivial
        } else {
            ReductionMode::PhaseTrivial {
                values: dist.values(),
            }
        };
        let reduced = reduced_equivalent(&full, layer, mode).map_err(|e| e.to_string())?;
        ensure(reduced.p() == base, || {
            format!("trial {trial}: reduced depth {}", reduced.p())
        })?;
        let a = run_circuit(&dist, &full).0.class_probabilities();
        let b = run_circuit(&dist, &reduced).0.class_probabilities();
        let expanded: Vec<f64> = values
            .iter()
            .zip(&counts)
            .flat_map(|(&v, &c)| std::iter::repeat_n(v, c as usize))
            .collect();
        let da = common::dense_probabilities(
            &expanded,
            full.gammas(),
            full.betas(),
            PhaseFunction::Objective,
        );
        let db = common::dense_probabilities(
            &expanded,
            reduced.gammas(),
            reduced.betas(),
            PhaseFunction::Objective,
        );
        let err = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .chain(da.iter().zip(&db).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        worst = worst.max(err);
        ensure(err <= 1e-12, || {
            format!("trial {trial}: layer {layer} error {err}")
        })?;
    }
    Ok(format!(
        "50 configurations (25 per lemma); max probability change {worst:.1e}"
    ))
}

/// 𝒢 from H_k(−cos θ) = 2cos(kθ), independent of the recurrence.
fn script_g_oracle(p: usize, odd: bool, r: f64, total: f64) -> f64 {
    let theta = (-r).clamp(-1.0, 1.0).acos();
    let sign = |m: usize| if odd && m % 2 == 1 { -1.0 } else { 1.0 };
    let inner = sign(p)
        + (1..=p)
            .map(|k| sign(p - k) * 2.0 * (k as f64 * theta).cos())
            .sum::<f64>();
    inner * inner / total
}

fn criterion_5() -> Outcome {
    let total = 1000u64;
    let report = verify_theorem1_witness(9, total, 1e-3).map_err(|e| e.to_string())?;
    ensure(report.rows.len() == 18, || {
        format!("{} witness rows", report.rows.len())
    })?;
    let mut worst_relax = 0.0f64;
    for row in &report.rows {
        let p = row.p;
        let want = ((2 * p + 1) * (2 * p + 1)) as f64 / total as f64;
        let (odd, endpoint) = match row.parity {
            Parity::Even => (false, -1.0),
            Parity::Odd => (true, 1.0),
        };
        ensure((row.max_value - want).abs() <= 1e-9, || {
            format!("p={p}: max {} vs {want}", row.max_value)
        })?;
        ensure(row.argmax_r == endpoint, || {
            format!("p={p}: argmax {}", row.argmax_r)
        })?;
        for i in 0..=4000 {
            let r = -1.0 + i as f64 * 5e-4;
            let g = script_g_oracle(p, odd, r, total as f64);
            ensure(g <= want + 1e-9, || {
                format!("p={p} r={r}: oracle {g} exceeds {want}")
            })?;
            if i % 40 == 0 {
                let s = script_g(p, row.parity, r, total).unwrap();
                ensure((s - g).abs() <= 1e-9, || {
                    format!("p={p} r={r}: script_g {s} vs oracle {g}")
                })?;
            }
        }
        // γ = β = π with every relaxed value of the parity that makes r the endpoint
        let v: Vec<f64> = (0..total)
            .map(|i| (2 * i + usize::from(!odd) as u64) as f64)
            .collect();
        let z = if odd { 3.0 } else { 2.0 };
        let relaxed = relax_g(&vec![PI; p], &vec![PI; p], &v, z).unwrap();
        let s = script_g(p, row.parity, endpoint, total).unwrap();
        worst_relax = worst_relax.max((relaxed - s).abs());
        ensure((relaxed - s).abs() <= 1e-12, || {
            format!("p={p}: relax_g {relaxed} vs script_g {s}")
        })?;
    }
    Ok(format!(
        "p<=9 both parities at |F|={total}; max |relax_g - script_g| {worst_relax:.1e}"
    ))
}

fn criterion_6() -> Outcome {
    let mut checked = 0;
    for n in 5..=8 {
        for i in 0..5 {
            let inst = gen_tsp(n, derive_seed(SEED, &[6, n as u64, i])).unwrap();
            let w = inst.weights().unwrap();
            let mut d: Vec<f64> = (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                .map(|(a, b)| w[a][b])
                .collect();
            d.sort_by(f64::total_cmp);
            ensure(d.windows(2).all(|x| x[0] != x[1]), || {
                format!("n={n}: repeated distance")
            })?;
            let values = common::all_values(&inst);
            let best = common::best(&values, Orientation::Minimize);
            let optimal = values
                .iter()
                .filter(|&&v| common::same_value(v, best))
                .count();
            ensure(optimal == 2, || {
                format!("n={n} #{i}: {optimal} optimal tours")
            })?;
            let rho = distribution_of(&inst, DEFAULT_ENUMERATION_CAP)
                .unwrap()
                .rho();
            let fact: f64 = (1..n).map(|x| x as f64).product();
            ensure(rho == 2.0 / fact && rho == tsp_rho(n), || {
                format!("n={n}: rho {rho} vs {}", 2.0 / fact)
            })?;
            for p in 0..=9 {
                let a = tsp_lambda_ub(n, p).unwrap();
                ensure(a == lambda_ub(p, rho), || {
                    format!("n={n} p={p}: {a} vs {}", lambda_ub(p, rho))
                })?;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} instances, n in 5..=8, p in 0..=9"))
}

fn criterion_7() -> Outcome {
    let dist = ObjectiveDistribution::new(
        vec![3.0, 2.0, 1.0, 0.0],
        vec![1; 4],
        Orientation::Minimize,
        "g4",
    )
    .unwrap();
    let phase = PhaseFunction::Threshold { th: 0.5 };
    let params = CircuitParams::new(vec![PI], vec![PI], phase).unwrap();
    let (_, m) = run_circuit(&dist, &params);
    let dense = common::dense_lambda(
        &[3.0, 2.0, 1.0, 0.0],
        Orientation::Minimize,
        &[PI],
        &[PI],
        phase,
    );
    ensure((m.lambda - 1.0).abs() <= 1e-12, || {
        format!("lambda {}", m.lambda)
    })?;
    ensure((dense - 1.0).abs() <= 1e-12, || {
        format!("oracle lambda {dense}")
    })?;
    let config = OptimizerConfig {
        phase_fn: phase,
        ..OptimizerConfig::default()
    };
    let best = optimize_parameters(&dist, 1, ObjectiveKind::MaxLambda, &config, SEED).unwrap();
    ensure(best.best_value >= 1.0 - 1e-6, || {
        format!("optimizer reached {}", best.best_value)
    })?;
    Ok(format!(
        "lambda(pi, pi) = {}, optimizer {}",
        m.lambda, best.best_value
    ))
}

fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn num(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

fn ols(points: &[(f64, f64)]) -> (f64, f64) {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

fn criterion_8a() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::preset(ExperimentId::RhoScaling, dir.path(), SEED);
    spec.fleets = vec![Fleet::new(ProblemKind::MaxKVertexCover, 10..=16)];
    spec.instances = 20;
    let report = run_experiment(&spec, false).map_err(|e| e.to_string())?;
    ensure(report.is_complete(), || {
        format!("run incomplete: {:?}", report.manifest.checks)
    })?;
    let model: RegressionModel = io::load(&dir.path().join("lambda_model_mkvc.json")).unwrap();
    let rows = read_csv(&dir.path().join("rho.csv"));
    ensure(rows.len() == 140, || format!("{} rho rows", rows.len()))?;
    let per_instance: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (num(r, "n"), num(r, "rho").ln()))
        .collect();
    let mut by_n: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for &(n, y) in &per_instance {
        by_n.entry(n as u64).or_default().push(y);
    }
    let means: Vec<(f64, f64)> = by_n
        .iter()
        .map(|(&n, v)| (n as f64, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    let (slope, r2) = ols(&means);
    let (slope_i, r2_i) = ols(&per_instance);
    ensure((model.theta[0] - slope).abs() <= 1e-9, || {
        format!("model slope {} vs oracle {slope}", model.theta[0])
    })?;
    ensure((slope - slope_i).abs() <= 1e-9, || {
        format!("size-mean slope {slope} vs per-instance {slope_i}")
    })?;
    ensure(slope < 0.0, || format!("slope {slope} not negative"))?;
    let model_r2 = model.r2.unwrap_or(f64::NAN);
    ensure(model_r2 >= 0.9 && (model_r2 - r2).abs() <= 1e-9, || {
        format!("r2 {model_r2} (oracle {r2})")
    })?;
    Ok(format!(
        "MkVC n in 10..=16 x 20: slope {slope:.4}, r2 {r2:.4} on per-size mean ln rho (per-instance r2 {r2_i:.4})"
    ))
}

fn criterion_8b() -> Outcome {
    let truth = [7.68, -11.2, 0.667];
    let mut samples = Vec::new();
    for n in 11..=17 {
        for p in 0..=9 {
            let r = 1.0 / ((2 * p + 1) * (2 * p + 1)) as f64;
            let mu = (-r.ln() / (truth[0] * n as f64 + truth[1])).sqrt() + truth[2];
            samples.push(MuSample { n: n as f64, r, mu });
        }
    }
    let m = fit_mu_model(&samples, MuVariant::Fixed { mu1: 0.667 }).map_err(|e| e.to_string())?;
    let err = m
        .theta
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(err <= 1e-4, || format!("theta {:?}", m.theta))?;
    let rmse = m.rmse.unwrap_or(f64::NAN);
    ensure(rmse < 1e-8, || format!("rmse {rmse}"))?;
    Ok(format!(
        "theta {:?}, max error {err:.1e}, rmse {rmse:.1e}",
        m.theta
    ))
}

fn mu_hat_oracle(m: &RegressionModel, n: f64, r: f64) -> f64 {
    let t = &m.theta;
    let root = (-r.ln() / (t[0] * n + t[1])).sqrt();
    match m.variant {
        ModelVariant::MuFull => root + t[2] / (1.0 + (-t[3] * (n - t[4])).exp()),
        _ => root + t[2],
    }
}

fn criterion_8c() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec::preset(ExperimentId::MuFit, dir.path(), SEED);
    let report = run_experiment(&spec, false).map_err(|e| e.to_string())?;
    ensure(report.is_complete(), || {
        format!("run incomplete: {:?}", report.manifest.checks)
    })?;
    let grid = read_csv(&dir.path().join("mu_surface.csv"));
    let mut parts = Vec::new();
    for kind in ["mkcs", "maxcut", "mkvc"] {
        let model: RegressionModel =
            io::load(&dir.path().join(format!("mu_model_{kind}.json"))).unwrap();
        let cells: Vec<_> = grid.iter().filter(|r| r["kind"] == kind).collect();
        let sse: f64 = cells
            .iter()
            .map(|r| (mu_hat_oracle(&model, num(r, "n"), num(r, "r")) - num(r, "mu_bar")).powi(2))
            .sum();
        let rmse = (sse / cells.len() as f64).sqrt();
        ensure(rmse <= 0.05, || format!("{kind}: rmse {rmse}"))?;
        parts.push(format!(
            "{kind} {:?} rmse {rmse:.4} over {} cells",
            model.variant,
            cells.len()
        ));
    }
    Ok(parts.join("; "))
}

fn criterion_8d() -> Outcome {
    let m = RegressionModel::mu(ModelVariant::MuFixed, vec![7.68, -11.2, 0.667]).unwrap();
    let a = predict_alpha_ub(&m, 14.0, 1).unwrap();
    ensure((a - 0.818).abs() <= 1e-3, || format!("alpha_hat {a}"))?;
    Ok(format!("alpha_hat(14, 1) = {a:.6}"))
}

fn bundle_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn criterion_10() -> Outcome {
    let mut total_files = 0;
    for id in ExperimentId::ALL {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut spec = ExperimentSpec::preset(id, a.path(), SEED);
        if id.label().contains("lambda") || id.label().contains("alpha") {
            spec.instances = 2;
            spec.optimizer.restarts = 4;
        }
        spec.workers = Some(1);
        run_experiment(&spec, false).map_err(|e| format!("{id}: {e}"))?;
        spec.out_dir = b.path().to_path_buf();
        spec.workers = Some(3);
        run_experiment(&spec, false).map_err(|e| format!("{id}: {e}"))?;
        let (fa, fb) = (bundle_files(a.path()), bundle_files(b.path()));
        ensure(!fa.is_empty(), || format!("{id}: no data files"))?;
        ensure(fa == fb, || format!("{id}: outputs differ between reruns"))?;
        total_files += fa.len();
    }
    Ok(format!(
        "8 experiments rerun (1 vs 3 workers), {total_files} data files byte-identical"
    ))
}

fn main() {
    // optional substring filter, e.g. `cargo test --test acceptance -- C8`
    let filter = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let mut failures = 0;
    let mut run = |label: &str, f: &mut dyn FnMut() -> Outcome| {
        if filter.as_deref().is_some_and(|pat| !label.contains(pat)) {
            return;
        }
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(&mut *f))
            .unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {label}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {label}: {detail} [{secs:.1}s]");
            }
        }
    };
    let mut lambda_fits = None;
    run(
        "C1 lambda < (2p+1)^2 rho + 1e-9 on the TSP/MkCS/MkVC fleet",
        &mut || {
            let fits = lambda_fleet();
            let out = criterion_1(&fits);
            lambda_fits = Some(fits);
            out
        },
    );
    run(
        "C2 alpha <= mu_{1/(2p+1)^2} + 1e-9 on the maximization fleet",
        &mut criterion_2,
    );
    run(
        "C3 compressed simulator matches per-solution oracle",
        &mut criterion_3,
    );
    run(
        "C4 trivial-layer reductions preserve probabilities",
        &mut criterion_4,
    );
    run("C5 basis-state bound witness", &mut criterion_5);
    run("C6 TSP optimality density 2/(n-1)!", &mut criterion_6);
    run("C7 Grover |F|=4 exact case", &mut criterion_7);
    run("C8a log-rho fit on MkVC fleets", &mut criterion_8a);
    run(
        "C8b mu-model recovery from noiseless data",
        &mut criterion_8b,
    );
    run(
        "C8c fitted mu-hat reproduces the training grid",
        &mut criterion_8c,
    );
    run(
        "C8d alpha-hat from reference MkCS coefficients",
        &mut criterion_8d,
    );
    run(
        "C9 warm-started lambda non-decreasing in p",
        &mut || match &lambda_fits {
            Some(fits) => criterion_9(fits),
            None => Err("criterion 1 fleet unavailable".into()),
        },
    );
    run(
        "C10 experiment reruns are byte-identical",
        &mut criterion_10,
    );
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
