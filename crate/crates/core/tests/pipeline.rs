use boundwalk::criterion::{evaluate, is_adversarial};
use boundwalk::models::{
    load_mnist_idx, load_model, make_blobs, save_model, train_mlp, write_idx_images, write_idx_labels, TrainConfig,
};
use boundwalk::{
    lp_distance, run_adam_pgd, run_attack, run_pgd, AttackConfig, AttackResult, BoxBounds, Criterion, Dataset, Model,
    NormKind, PgdConfig,
};
use proptest::prelude::*;

fn check_result(model: &Model, x: &[f64], crit: &Criterion, norm: NormKind, res: &AttackResult) {
    assert_eq!(res.success, res.adversarial.is_some());
    if let Some(adv) = &res.adversarial {
        assert!(is_adversarial(&model.forward(adv).unwrap(), crit).unwrap());
        assert!(BoxBounds::default().contains(adv));
        assert_eq!(res.distance, lp_distance(x, adv, norm).unwrap());
    }
    for w in res.trace.windows(2) {
        assert!(w[0].queries <= w[1].queries && w[1].best_distance <= w[0].best_distance);
    }
}

#[test]
fn train_save_load_attack() {
    let data = make_blobs(60, 3, 5, 0.05, 3);
    let cfg = TrainConfig { hidden: vec![16], activation: boundwalk::Activation::Tanh, epochs: 30, ..TrainConfig::default() };
    let report = train_mlp(&data, &cfg).unwrap();
    assert!(report.accuracy > 0.95, "{}", report.accuracy);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_model(&report.model, &path).unwrap();
    let model = load_model(&path).unwrap();
    for x in data.samples.iter().take(10) {
        assert_eq!(model.forward(x).unwrap(), report.model.forward(x).unwrap());
    }

    let i = (0..data.len()).find(|&i| model.predict(&data.samples[i]).unwrap() == data.labels[i]).unwrap();
    let x = &data.samples[i];
    let label = data.labels[i];
    let targeted = Criterion::targeted(label, (label + 1) % 3).unwrap();
    for crit in [Criterion::untargeted(label), targeted] {
        for norm in NormKind::ALL {
            let cfg = AttackConfig { max_steps: 60, seed: 4, ..AttackConfig::new(norm, 0.01) };
            let res = run_attack(&model, x, &crit, &cfg, &data).unwrap();
            assert!(res.success, "{norm} {crit:?}");
            check_result(&model, x, &crit, norm, &res);
        }
        for run in [run_pgd, run_adam_pgd] {
            let res = run(&model, x, &crit, &PgdConfig { seed: 2, ..PgdConfig::new(0.5, 0.01, 200) }).unwrap();
            check_result(&model, x, &crit, NormKind::Linf, &res);
            if res.success {
                assert!(res.distance <= 0.5 + 1e-12);
            }
        }
    }
}

#[test]
fn idx_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let images: Vec<Vec<u8>> = (0..4u8).map(|k| (0..6).map(|p| k * 60 + p).collect()).collect();
    write_idx_images(dir.path().join("img"), 2, 3, &images).unwrap();
    write_idx_labels(dir.path().join("lbl"), &[3, 1, 4, 1]).unwrap();
    let data = load_mnist_idx(dir.path().join("img"), dir.path().join("lbl")).unwrap();
    assert_eq!(data.labels, vec![3, 1, 4, 1]);
    assert_eq!(data.dim(), 6);
    assert_eq!(data.samples[2][1], 121.0 / 255.0);
}

fn linear_case() -> impl Strategy<Value = (Vec<f64>, f64, Vec<f64>, usize)> {
    (2usize..5)
        .prop_flat_map(|n| {
            (prop::collection::vec(-4.0f64..4.0, n), prop::collection::vec(0.2f64..0.8, n), 0.05f64..0.5, 0usize..4)
        })
        .prop_map(|(w, x, gap, k)| {
            let value: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
            // x sits on the negative side, `gap` away in logit units
            (w, -value - gap, x, k)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn attacks_on_linear_models_keep_their_invariants((w, offset, x, k) in linear_case(), seed in 0u64..1000) {
        let n = x.len();
        let mut weights = vec![0.0; n];
        weights.extend(&w);
        let model = Model::linear(2, n, weights, vec![0.0, offset]).unwrap();
        let crit = Criterion::untargeted(0);
        prop_assume!(evaluate(&model, &x, &crit).unwrap() > 0.0);
        let norm = NormKind::ALL[k];
        let cfg = AttackConfig { max_steps: 30, seed, ..AttackConfig::new(norm, 0.05) };
        match run_attack(&model, &x, &crit, &cfg, &Dataset::default()) {
            Ok(res) => check_result(&model, &x, &crit, norm, &res),
            // the far side may not intersect the box
            Err(boundwalk::Error::StartFailure { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
