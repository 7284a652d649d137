//! Self-checks of the solver and attacks against the reference oracles.

use boundwalk::criterion::{adv_value_and_grad, evaluate};
use boundwalk::trust_region::solve;
use boundwalk::{
    run_attack, Activation, AttackConfig, BoxBounds, Criterion, Dataset, Layer, Model, NormKind, SolverSettings,
    TrustRegionProblem,
};
use boundwalk_oracle::{grid_solve, l0_minimal_linear, linear_minimal_distance, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Random trust-region instances per norm.
    pub instances: usize,
    /// Lattice spacing of the grid oracle, in box units.
    pub resolution: f64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { instances: 100, resolution: 1e-2, seed: 0 }
    }
}

pub fn run_verification(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();
    for norm in NormKind::ALL {
        checks.push(solver_against_grid(&mut rng, norm, opts)?);
    }
    checks.extend(linear_attacks()?);
    checks.push(gradients(&mut rng)?);
    Ok(checks)
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize, norm: NormKind) -> TrustRegionProblem {
    let x_tilde: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let target: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let c = b.iter().zip(target.iter().zip(&x_tilde)).map(|(b, (t, xt))| b * (t - xt)).sum::<f64>()
        * rng.random_range(0.1..0.6);
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

/// Convex norms must match the lattice optimum up to its spacing; L0 may not
/// beat the lattice and should rarely trail it by more than one component.
fn solver_against_grid(rng: &mut ChaCha8Rng, norm: NormKind, opts: &VerifyOptions) -> Result<Check> {
    let resolution = opts.resolution * BoxBounds::default().width();
    let spec = GridSpec::new(resolution);
    let (mut compared, mut violations, mut far) = (0, 0, 0);
    for _ in 0..opts.instances {
        let n = rng.random_range(1..=3);
        let p = random_problem(rng, n, norm);
        let grid = grid_solve(&p, &spec)?;
        let sol = solve(&p, &SolverSettings::default())?;
        if !grid.feasible {
            continue;
        }
        compared += 1;
        if !sol.feasible {
            violations += 1;
        } else if norm == NormKind::L0 {
            let count = |v: f64| (v * n as f64).round() as i64;
            let gap = count(sol.objective) - count(grid.objective);
            violations += usize::from(gap < 0);
            far += usize::from(gap > 1);
        } else if sol.objective > grid.objective + resolution {
            violations += 1;
        }
    }
    let passed = violations == 0 && far * 10 <= compared;
    let mut detail = format!("{compared} instances compared, {violations} violations");
    if norm == NormKind::L0 {
        detail.push_str(&format!(", {far} more than one component above the lattice"));
    }
    Ok(Check { name: format!("{norm} solver against grid oracle"), passed, detail })
}

fn linear_attacks() -> Result<Vec<Check>> {
    let (w, offset) = ([3.0, 4.0], -2.0);
    let model = Model::linear(2, 2, vec![0.0, 0.0, w[0], w[1]], vec![0.0, offset])?;
    let x = [0.1, 0.1];
    let crit = Criterion::untargeted(0);
    let pool = Dataset::default();
    let mut checks = Vec::new();
    for norm in [NormKind::L1, NormKind::L2, NormKind::Linf] {
        let expected = linear_minimal_distance(&w, offset, &x, norm)?;
        let cfg = AttackConfig { max_queries: Some(50), ..AttackConfig::new(norm, 0.1) };
        let res = run_attack(&model, &x, &crit, &cfg, &pool)?;
        checks.push(Check {
            name: format!("{norm} attack on a linear model"),
            passed: (res.distance - expected).abs() <= 0.01 * expected,
            detail: format!("{:.6} vs analytic {expected:.6} in {} queries", res.distance, res.queries_used),
        });
    }
    let expected = l0_minimal_linear(&w, offset, &x, &BoxBounds::default())?;
    let cfg = AttackConfig { max_steps: 100, ..AttackConfig::new(NormKind::L0, 0.1) };
    let res = run_attack(&model, &x, &crit, &cfg, &pool)?;
    let found = (res.distance * x.len() as f64).round() as usize;
    checks.push(Check {
        name: "l0 attack on a linear model".into(),
        passed: res.success && found == expected,
        detail: format!("{found} components vs {expected} by enumeration"),
    });
    Ok(checks)
}

fn gradients(rng: &mut ChaCha8Rng) -> Result<Check> {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut models = 0;
    while models < 50 {
        let n = rng.random_range(2..6);
        let hidden = rng.random_range(3..8);
        let classes = rng.random_range(2..5);
        let mut layer = |rows: usize, cols: usize| {
            let weights = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
            let bias = (0..rows).map(|_| rng.random_range(-0.5..0.5)).collect();
            Layer::new(rows, cols, weights, bias)
        };
        let layers = vec![layer(hidden, n)?, layer(classes, hidden)?];
        let model = Model::new(Activation::Tanh, layers)?;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
        let crit = Criterion::untargeted(rng.random_range(0..classes));
        let (_, grad) = adv_value_and_grad(&model, &x, &crit)?;
        let mut err = 0.0;
        let mut scale = 0.0;
        let mut kinked = false;
        for j in 0..n {
            let (mut up, mut down) = (x.clone(), x.clone());
            up[j] += h;
            down[j] -= h;
            kinked |= crit.competitor(&model.forward(&up)?)? != crit.competitor(&model.forward(&down)?)?;
            let fd = (evaluate(&model, &up, &crit)? - evaluate(&model, &down, &crit)?) / (2.0 * h);
            err += (fd - grad[j]).powi(2);
            scale += fd * fd;
        }
        if kinked {
            continue;
        }
        models += 1;
        worst = worst.max(err.sqrt() / scale.sqrt().max(1e-8));
    }
    Ok(Check {
        name: "criterion gradient against finite differences".into(),
        passed: worst <= 1e-4,
        detail: format!("largest relative error over {models} tanh networks {worst:.2e}"),
    })
}
