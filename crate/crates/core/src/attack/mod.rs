//! Boundary-walking attack and PGD baselines.

mod pgd;
mod start;

pub use pgd::{run_adam_pgd, run_pgd, PgdConfig};
pub use start::{binary_search_to_boundary, find_starting_point, StartPoint, UNIFORM_DRAWS};

use serde::{Deserialize, Serialize};

use crate::base::{lp_distance, norm2_sq, BoxBounds, NormKind, TrustRegionProblem};
use crate::criterion::{adv_value_and_grad, evaluate, Criterion};
use crate::models::{Dataset, Model};
use crate::trust_region::{solve, SolverSettings};
use crate::{Error, Result};

/// Each step aims this far past the linearised boundary, relative to `‖b‖₂`,
/// so that iterates on exactly linear boundaries land strictly inside the
/// adversarial region.
pub const OVERSHOOT: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub norm: NormKind,
    /// Bound on the squared L2 length of a single step.
    pub trust_radius: f64,
    pub max_steps: usize,
    pub radius_decay: f64,
    pub binary_search_steps: usize,
    pub seed: u64,
    pub bounds: BoxBounds,
    /// Stop once this many queries (bisection plus steps) are spent.
    pub max_queries: Option<usize>,
    pub solver: SolverSettings,
}

impl AttackConfig {
    pub fn new(norm: NormKind, trust_radius: f64) -> Self {
        Self {
            norm,
            trust_radius,
            max_steps: 1000,
            radius_decay: 0.98,
            binary_search_steps: 10,
            seed: 0,
            bounds: BoxBounds::default(),
            max_queries: None,
            solver: SolverSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.trust_radius > 0.0 && self.trust_radius.is_finite()) {
            return Err(Error::Precondition(format!("trust radius must be positive, got {}", self.trust_radius)));
        }
        if self.max_steps == 0 {
            return Err(Error::Precondition("max_steps must be at least 1".into()));
        }
        if !(self.radius_decay > 0.0 && self.radius_decay <= 1.0) {
            return Err(Error::Precondition(format!("radius decay must lie in (0, 1], got {}", self.radius_decay)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub queries: usize,
    pub best_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub success: bool,
    pub adversarial: Option<Vec<f64>>,
    /// Distance in the attack's norm; infinite without an adversarial.
    pub distance: f64,
    /// Bisection, step and final evaluations.
    pub queries_used: usize,
    /// Evaluations spent finding the starting point.
    pub start_queries: usize,
    /// `(queries, best distance)` whenever the best improves, plus the end.
    pub trace: Vec<TracePoint>,
}

fn budget_left(config: &AttackConfig, queries: usize) -> bool {
    config.max_queries.map_or(true, |cap| queries < cap)
}

/// Boundary-walking attack from the nearest adversarial pool sample.
pub fn run_attack(
    model: &Model,
    x: &[f64],
    crit: &Criterion,
    config: &AttackConfig,
    pool: &Dataset,
) -> Result<AttackResult> {
    config.validate()?;
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch { expected: model.input_dim(), found: x.len() });
    }
    if !config.bounds.contains(x) {
        return Err(Error::Precondition("clean input lies outside the box".into()));
    }
    if evaluate(model, x, crit)? < 0.0 {
        return Err(Error::Precondition("clean input is already adversarial".into()));
    }

    let start = find_starting_point(pool, x, crit, model, &config.bounds, config.seed)?;
    let mut current = binary_search_to_boundary(model, crit, x, &start.point, config.binary_search_steps)?;
    let mut queries = config.binary_search_steps;

    let mut best = current.clone();
    let mut best_distance = lp_distance(x, &best, config.norm)?;
    let mut trace = vec![TracePoint { queries, best_distance }];
    let mut radius = config.trust_radius;
    let mut fresh = true;

    for step in 0..config.max_steps {
        if !budget_left(config, queries) {
            break;
        }
        let (adv, b) = match adv_value_and_grad(model, &current, crit) {
            Ok(v) => v,
            Err(Error::ZeroGradient) => return Err(Error::GradientMasking { step, queries }),
            Err(e) => return Err(e),
        };
        queries += 1;

        let improved = adv < 0.0 && {
            let d = lp_distance(x, &current, config.norm)?;
            d < best_distance && {
                best.clone_from(&current);
                best_distance = d;
                trace.push(TracePoint { queries, best_distance });
                true
            }
        };
        if !improved && !fresh {
            radius *= config.radius_decay;
        }
        fresh = false;

        let c = -adv - OVERSHOOT * norm2_sq(&b).sqrt();
        let problem = TrustRegionProblem {
            x: x.to_vec(),
            x_tilde: current.clone(),
            b,
            c,
            r: radius,
            bounds: config.bounds,
            norm: config.norm,
        };
        let sol = solve(&problem, &config.solver)?;
        for (v, d) in current.iter_mut().zip(&sol.delta) {
            *v = (*v + d).clamp(config.bounds.lower, config.bounds.upper);
        }
    }

    if budget_left(config, queries) {
        queries += 1;
        if evaluate(model, &current, crit)? < 0.0 {
            let d = lp_distance(x, &current, config.norm)?;
            if d < best_distance {
                best = current;
                best_distance = d;
            }
        }
    }
    if trace.last().map_or(true, |t| t.queries != queries || t.best_distance != best_distance) {
        trace.push(TracePoint { queries, best_distance });
    }

    Ok(AttackResult {
        success: true,
        adversarial: Some(best),
        distance: best_distance,
        queries_used: queries,
        start_queries: start.queries,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_linear() -> Model {
        Model::linear(2, 2, vec![0.0, 0.0, 3.0, 4.0], vec![0.0, -2.0]).unwrap()
    }

    #[test]
    fn adversarial_input_is_rejected() {
        let cfg = AttackConfig::new(NormKind::L2, 0.1);
        let err = run_attack(&demo_linear(), &[0.9, 0.9], &Criterion::untargeted(0), &cfg, &Dataset::default());
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn config_validation() {
        let mut cfg = AttackConfig::new(NormKind::L2, 0.0);
        assert!(cfg.validate().is_err());
        cfg.trust_radius = 0.1;
        cfg.max_steps = 0;
        assert!(cfg.validate().is_err());
        cfg.max_steps = 1;
        cfg.radius_decay = 1.5;
        assert!(cfg.validate().is_err());
        cfg.radius_decay = 1.0;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn linear_model_converges_in_each_convex_norm() {
        let x = [0.1, 0.1];
        let crit = Criterion::untargeted(0);
        for (norm, expected) in [(NormKind::L2, 0.26), (NormKind::Linf, 1.3 / 7.0), (NormKind::L1, 0.325)] {
            let cfg = AttackConfig { max_queries: Some(50), ..AttackConfig::new(norm, 0.1) };
            let res = run_attack(&demo_linear(), &x, &crit, &cfg, &Dataset::default()).unwrap();
            assert!(res.queries_used <= 50);
            assert!(
                (res.distance - expected).abs() <= 0.01 * expected,
                "{norm}: {} vs {expected}",
                res.distance
            );
        }
    }

    #[test]
    fn first_step_lands_on_a_linear_boundary() {
        let model = demo_linear();
        let crit = Criterion::untargeted(0);
        let x = [0.1, 0.1];
        let start = find_starting_point(&Dataset::default(), &x, &crit, &model, &BoxBounds::default(), 0).unwrap();
        let x0 = binary_search_to_boundary(&model, &crit, &x, &start.point, 10).unwrap();
        let (adv, b) = adv_value_and_grad(&model, &x0, &crit).unwrap();
        let problem = TrustRegionProblem {
            x: x.to_vec(),
            x_tilde: x0.clone(),
            b: b.clone(),
            c: -adv - OVERSHOOT * norm2_sq(&b).sqrt(),
            r: 1.0,
            bounds: BoxBounds::default(),
            norm: NormKind::L2,
        };
        let sol = solve(&problem, &SolverSettings::default()).unwrap();
        assert!(sol.feasible);
        let x1: Vec<f64> = x0.iter().zip(&sol.delta).map(|(a, d)| a + d).collect();
        let after = evaluate(&model, &x1, &crit).unwrap();
        assert!(after.abs() <= 1e-6 * norm2_sq(&b).sqrt());
        assert!(after < 0.0);
    }

    #[test]
    fn trace_is_monotone_and_result_consistent() {
        let x = [0.1, 0.1];
        let crit = Criterion::untargeted(0);
        for norm in NormKind::ALL {
            let cfg = AttackConfig { max_steps: 40, seed: 5, ..AttackConfig::new(norm, 0.05) };
            let res = run_attack(&demo_linear(), &x, &crit, &cfg, &Dataset::default()).unwrap();
            for w in res.trace.windows(2) {
                assert!(w[1].queries >= w[0].queries);
                assert!(w[1].best_distance <= w[0].best_distance);
            }
            let adv = res.adversarial.as_ref().unwrap();
            assert!(evaluate(&demo_linear(), adv, &crit).unwrap() < 0.0);
            assert!(BoxBounds::default().contains(adv));
            assert_eq!(res.distance, lp_distance(&x, adv, norm).unwrap());
            assert_eq!(res.trace.last().unwrap().best_distance, res.distance);
        }
    }

    #[test]
    fn zero_gradient_is_reported_as_masking() {
        use crate::models::{Activation, Layer};
        // logit 1 ramps from 0 to 0.1 on [0.5, 0.6] and is flat beyond
        let hidden = Layer::new(2, 1, vec![1.0, 1.0], vec![-0.5, -0.6]).unwrap();
        let head = Layer::new(2, 2, vec![0.0, 0.0, 1.0, -1.0], vec![0.05, 0.0]).unwrap();
        let m = Model::new(Activation::Relu, vec![hidden, head]).unwrap();
        let pool = Dataset::new(vec![vec![0.9]], vec![1]).unwrap();
        let cfg = AttackConfig { binary_search_steps: 0, ..AttackConfig::new(NormKind::L2, 0.1) };
        let res = run_attack(&m, &[0.0], &Criterion::untargeted(0), &cfg, &pool);
        assert!(matches!(res, Err(Error::GradientMasking { step: 0, queries: 0 })));
    }

    #[test]
    fn same_seed_same_result() {
        let x = [0.1, 0.1];
        let crit = Criterion::untargeted(0);
        let cfg = AttackConfig { max_steps: 30, seed: 9, ..AttackConfig::new(NormKind::L1, 0.02) };
        let a = run_attack(&demo_linear(), &x, &crit, &cfg, &Dataset::default()).unwrap();
        let b = run_attack(&demo_linear(), &x, &crit, &cfg, &Dataset::default()).unwrap();
        assert_eq!(a, b);
    }
}
