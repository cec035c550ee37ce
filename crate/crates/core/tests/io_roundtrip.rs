use std::f64::consts::PI;

use gmqaoa::calibrate::{
    fit_mu_model, predict_alpha_ub, predict_lambda_ub, LogLinearFit, MuSample, MuVariant,
    RegressionModel,
};
use gmqaoa::distribution::distribution_of;
use gmqaoa::harness::io;
use gmqaoa::problems::{gen_graph_instance, gen_tsp, EdgeRule, GenConfig, DEFAULT_ENUMERATION_CAP};
use gmqaoa::simulator::run_circuit;
use gmqaoa::{
    CircuitParams, Error, ObjectiveDistribution, PhaseFunction, ProblemInstance, ProblemKind,
};

fn instances() -> Vec<ProblemInstance> {
    let cfg = GenConfig::default();
    vec![
        gen_tsp(6, 11).unwrap(),
        gen_graph_instance(
            ProblemKind::MaxCut,
            8,
            None,
            EdgeRule::Regular { degree: 3 },
            12,
            &cfg,
        )
        .unwrap(),
        gen_graph_instance(
            ProblemKind::MaxKVertexCover,
            9,
            Some(4),
            EdgeRule::ErdosRenyi { prob: 0.4 },
            13,
            &cfg,
        )
        .unwrap(),
        gen_graph_instance(
            ProblemKind::MaxKColorableSubgraph,
            6,
            Some(3),
            EdgeRule::ErdosRenyi { prob: 0.5 },
            14,
            &cfg,
        )
        .unwrap(),
    ]
}

#[test]
fn instances_and_distributions_survive_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for inst in instances() {
        let path = dir.path().join(format!("{}.json", inst.kind().label()));
        io::save(&path, &inst, false).unwrap();
        let back: ProblemInstance = io::load(&path).unwrap();
        assert_eq!(back, inst);

        let dist = distribution_of(&inst, DEFAULT_ENUMERATION_CAP).unwrap();
        let dpath = dir
            .path()
            .join(format!("{}-dist.json", inst.kind().label()));
        io::save(&dpath, &dist, false).unwrap();
        let dback: ObjectiveDistribution = io::load(&dpath).unwrap();
        assert_eq!(dback, dist);
        assert_eq!(
            distribution_of(&back, DEFAULT_ENUMERATION_CAP).unwrap(),
            dist
        );
    }
}

#[test]
fn pi_angles_round_trip_bit_for_bit() {
    let params = CircuitParams::new(
        vec![PI, 0.1 + 0.2, -PI / 3.0],
        vec![PI, 1e-300, 2.0 * PI],
        PhaseFunction::Objective,
    )
    .unwrap();
    let back: CircuitParams = io::from_json(&io::to_json(&params).unwrap()).unwrap();
    for (a, b) in params
        .gammas()
        .iter()
        .chain(params.betas())
        .zip(back.gammas().iter().chain(back.betas()))
    {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    let dist = distribution_of(&instances()[0], DEFAULT_ENUMERATION_CAP).unwrap();
    let (sa, ma) = run_circuit(&dist, &params);
    let (sb, mb) = run_circuit(&dist, &back);
    assert_eq!(sa.class_probabilities(), sb.class_probabilities());
    assert_eq!(ma.lambda.to_bits(), mb.lambda.to_bits());
}

#[test]
fn models_predict_identically_after_reload() {
    let mut samples = Vec::new();
    for n in [8.0, 10.0, 12.0, 14.0] {
        for p in 0..8 {
            let r = 1.0 / ((2 * p + 1) * (2 * p + 1)) as f64;
            let mu = (-r.ln() / (5.0 * n - 20.0)).sqrt() + 0.55 + 0.01 * (n * r).sin();
            samples.push(MuSample { n, r, mu });
        }
    }
    let mu_model = fit_mu_model(&samples, MuVariant::Fixed { mu1: 0.55 }).unwrap();
    let fit = LogLinearFit {
        slope: -0.4,
        intercept: 1.3,
        r2: 0.97,
        rmse: 0.02,
    };
    let lambda_model = RegressionModel::lambda(&fit, Default::default());
    let dir = tempfile::tempdir().unwrap();
    for (name, model) in [("mu", &mu_model), ("lambda", &lambda_model)] {
        let path = dir.path().join(format!("{name}.json"));
        io::save(&path, model, false).unwrap();
        let back: RegressionModel = io::load(&path).unwrap();
        assert_eq!(back.variant, model.variant);
        assert_eq!(back.theta, model.theta);
        assert_eq!(back.rmse, model.rmse);
        for n in (8..=40).step_by(4) {
            for p in 0..10 {
                let (a, b) = if name == "mu" {
                    (
                        predict_alpha_ub(model, n as f64, p),
                        predict_alpha_ub(&back, n as f64, p),
                    )
                } else {
                    (
                        predict_lambda_ub(model, n as f64, p),
                        predict_lambda_ub(&back, n as f64, p),
                    )
                };
                assert_eq!(a.unwrap().to_bits(), b.unwrap().to_bits());
            }
        }
    }
}

#[test]
fn foreign_schema_version_is_rejected_with_guidance() {
    let text = io::to_json(&gen_tsp(5, 1).unwrap())
        .unwrap()
        .replace("\"schema_version\": 1", "\"schema_version\": 7");
    match io::from_json::<ProblemInstance>(&text) {
        Err(
            e @ Error::Schema {
                found: 7,
                expected: 1,
            },
        ) => assert!(e.to_string().contains("re-export")),
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn wrong_artifact_kind_is_rejected() {
    let text = io::to_json(&gen_tsp(5, 1).unwrap()).unwrap();
    assert!(matches!(
        io::from_json::<CircuitParams>(&text),
        Err(Error::Invalid(_))
    ));
}

#[test]
fn save_refuses_to_overwrite_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/inst.json");
    let a = gen_tsp(5, 1).unwrap();
    let b = gen_tsp(5, 2).unwrap();
    io::save(&path, &a, false).unwrap();
    assert!(matches!(
        io::save(&path, &b, false),
        Err(Error::AlreadyExists(_))
    ));
    assert_eq!(io::load::<ProblemInstance>(&path).unwrap(), a);
    io::save(&path, &b, true).unwrap();
    assert_eq!(io::load::<ProblemInstance>(&path).unwrap(), b);
}
