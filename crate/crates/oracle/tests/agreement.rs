use boundwalk::criterion::evaluate;
use boundwalk::trust_region::solve;
use boundwalk::{
    run_attack, AttackConfig, BoxBounds, Criterion, Dataset, Model, NormKind, SolverSettings, TrustRegionProblem,
};
use boundwalk_oracle::{grid_solve, l0_minimal_linear, linear_minimal_distance, GridSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(rng: &mut ChaCha8Rng, n: usize, norm: NormKind) -> TrustRegionProblem {
    let x_tilde: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let target: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let c = b.iter().zip(target.iter().zip(&x_tilde)).map(|(b, (t, xt))| b * (t - xt)).sum::<f64>() * 0.3;
    TrustRegionProblem {
        x: (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
        x_tilde,
        b,
        c,
        r: rng.random_range(0.01..0.3),
        bounds: BoxBounds::default(),
        norm,
    }
}

#[test]
fn solver_never_loses_to_a_coarse_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let spec = GridSpec::new(1e-2);
    for norm in [NormKind::L1, NormKind::L2, NormKind::Linf] {
        for _ in 0..60 {
            let n = rng.random_range(1..=3);
            let p = random_problem(&mut rng, n, norm);
            let grid = grid_solve(&p, &spec).unwrap();
            let sol = solve(&p, &SolverSettings::default()).unwrap();
            if grid.feasible {
                assert!(sol.feasible, "{norm}: {p:?}");
                assert!(sol.objective <= grid.objective + 1e-2, "{norm}: {} vs {}", sol.objective, grid.objective);
            }
        }
    }
}

#[test]
fn l0_solver_is_never_below_the_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let spec = GridSpec::new(1e-2);
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let p = random_problem(&mut rng, n, NormKind::L0);
        let grid = grid_solve(&p, &spec).unwrap();
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        if grid.feasible && sol.feasible {
            assert!(sol.objective >= grid.objective - 1e-12);
        }
    }
}

#[test]
fn attacks_on_random_linear_models_match_the_hyperplane_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    let mut compared = 0;
    while checked < 10 {
        let w = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
        let x = [rng.random_range(0.3..0.7), rng.random_range(0.3..0.7)];
        let value = w[0] * x[0] + w[1] * x[1];
        // boundary a little away from x on the positive side
        let offset = -value - rng.random_range(0.2..0.6);
        let model = Model::linear(2, 2, vec![0.0, 0.0, w[0], w[1]], vec![0.0, offset]).unwrap();
        let crit = Criterion::untargeted(0);
        if evaluate(&model, &x, &crit).unwrap() < 0.0 {
            continue;
        }
        for norm in [NormKind::L1, NormKind::L2, NormKind::Linf] {
            let expected = linear_minimal_distance(&w, offset, &x, norm).unwrap();
            // the analytic witness must lie inside the box
            let witness_inside = match norm {
                NormKind::L2 => {
                    let s = expected / (w[0].hypot(w[1]));
                    x.iter().zip(&w).all(|(xi, wi)| (0.0..=1.0).contains(&(xi + s * wi)))
                }
                NormKind::Linf => x.iter().zip(&w).all(|(xi, wi)| (0.0..=1.0).contains(&(xi + expected * wi.signum()))),
                _ => {
                    let j = if w[0].abs() >= w[1].abs() { 0 } else { 1 };
                    (0.0..=1.0).contains(&(x[j] + expected * w[j].signum()))
                }
            };
            if !witness_inside {
                continue;
            }
            let cfg = AttackConfig { max_steps: 200, ..AttackConfig::new(norm, 0.05) };
            let res = run_attack(&model, &x, &crit, &cfg, &Dataset::default()).unwrap();
            assert!((res.distance - expected).abs() <= 0.01 * expected, "{norm} {w:?} {x:?}: {} vs {expected}", res.distance);
            compared += 1;
        }
        checked += 1;
    }
    assert!(compared >= 15, "only {compared} comparisons");
}

#[test]
fn l0_attack_matches_subset_enumeration() {
    let model = Model::linear(2, 2, vec![0.0, 0.0, 3.0, 4.0], vec![0.0, -2.0]).unwrap();
    let x = [0.1, 0.1];
    let expected = l0_minimal_linear(&[3.0, 4.0], -2.0, &x, &BoxBounds::default()).unwrap();
    let cfg = AttackConfig { max_steps: 100, ..AttackConfig::new(NormKind::L0, 0.1) };
    let res = run_attack(&model, &x, &Criterion::untargeted(0), &cfg, &Dataset::default()).unwrap();
    assert_eq!((res.distance * 2.0).round() as usize, expected);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn refining_the_lattice_never_worsens_the_optimum(seed in any::<u64>(), k in 0usize..4, n in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_problem(&mut rng, n, NormKind::ALL[k]);
        let coarse = grid_solve(&p, &GridSpec::new(0.02)).unwrap();
        let fine = grid_solve(&p, &GridSpec::new(0.01)).unwrap();
        prop_assert!(fine.objective <= coarse.objective);
        if coarse.feasible {
            prop_assert!(fine.feasible);
        }
    }
}
