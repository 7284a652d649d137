//! L∞ projected-gradient baselines on the cross-entropy loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AttackResult, TracePoint};
use crate::base::{lp_distance, BoxBounds, NormKind};
use crate::criterion::{adv_value, Criterion};
use crate::models::{softmax, Model};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgdConfig {
    pub epsilon: f64,
    /// Absolute step length per iteration.
    pub stepsize: f64,
    pub iterations: usize,
    pub seed: u64,
    #[serde(default)]
    pub bounds: BoxBounds,
}

impl PgdConfig {
    pub fn new(epsilon: f64, stepsize: f64, iterations: usize) -> Self {
        Self { epsilon, stepsize, iterations, seed: 0, bounds: BoxBounds::default() }
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

enum Update {
    Sign,
    Adam { m: Vec<f64>, v: Vec<f64>, t: i32 },
}

impl Update {
    /// Ascent direction for a loss gradient `g`.
    fn direction(&mut self, g: &[f64]) -> Vec<f64> {
        match self {
            Update::Sign => g.iter().map(|&v| if v == 0.0 { 0.0 } else { v.signum() }).collect(),
            Update::Adam { m, v, t } => {
                *t += 1;
                let c1 = 1.0 - BETA1.powi(*t);
                let c2 = 1.0 - BETA2.powi(*t);
                g.iter()
                    .enumerate()
                    .map(|(j, &gj)| {
                        m[j] = BETA1 * m[j] + (1.0 - BETA1) * gj;
                        v[j] = BETA2 * v[j] + (1.0 - BETA2) * gj * gj;
                        (m[j] / c1) / ((v[j] / c2).sqrt() + ADAM_EPS)
                    })
                    .collect()
            }
        }
    }
}

/// Signed-gradient PGD with a random start in the ε-ball. Stops at the first
/// adversarial iterate; each gradient evaluation is one query.
pub fn run_pgd(model: &Model, x: &[f64], crit: &Criterion, config: &PgdConfig) -> Result<AttackResult> {
    projected_ascent(model, x, crit, config, Update::Sign)
}

/// As [`run_pgd`] with Adam moments in place of the sign step.
pub fn run_adam_pgd(model: &Model, x: &[f64], crit: &Criterion, config: &PgdConfig) -> Result<AttackResult> {
    let n = x.len();
    projected_ascent(model, x, crit, config, Update::Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 })
}

fn projected_ascent(
    model: &Model,
    x: &[f64],
    crit: &Criterion,
    config: &PgdConfig,
    mut update: Update,
) -> Result<AttackResult> {
    if !(config.epsilon > 0.0) {
        return Err(Error::Precondition(format!("epsilon must be positive, got {}", config.epsilon)));
    }
    if !(config.stepsize >= 0.0) {
        return Err(Error::Precondition(format!("stepsize must be non-negative, got {}", config.stepsize)));
    }
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch { expected: model.input_dim(), found: x.len() });
    }
    let bounds = config.bounds;
    let lo: Vec<f64> = x.iter().map(|&v| (v - config.epsilon).max(bounds.lower)).collect();
    let hi: Vec<f64> = x.iter().map(|&v| (v + config.epsilon).min(bounds.upper)).collect();
    let project = |z: &mut [f64]| {
        for (j, v) in z.iter_mut().enumerate() {
            *v = v.clamp(lo[j], hi[j]);
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut z: Vec<f64> = (0..x.len())
        .map(|j| if lo[j] < hi[j] { rng.random_range(lo[j]..=hi[j]) } else { lo[j] })
        .collect();

    // ascent on the loss for untargeted, descent on the target's loss otherwise
    let (class, ascend) = match *crit {
        Criterion::Untargeted { label } => (label, true),
        Criterion::Targeted { target, .. } => (target, false),
    };

    let mut queries = 0;
    for it in 0..=config.iterations {
        let (logits, _, grad) = model.grad_with(&z, |logits| {
            let mut coeffs = softmax(logits);
            if class >= coeffs.len() {
                return Err(Error::InvalidClass { class, num_classes: coeffs.len() });
            }
            coeffs[class] -= 1.0;
            Ok(coeffs)
        })?;
        queries += 1;
        if adv_value(&logits, crit)? < 0.0 {
            let distance = lp_distance(x, &z, NormKind::Linf)?;
            return Ok(AttackResult {
                success: true,
                adversarial: Some(z),
                distance,
                queries_used: queries,
                start_queries: 0,
                trace: vec![TracePoint { queries, best_distance: distance }],
            });
        }
        if it == config.iterations {
            break;
        }
        let dir = update.direction(&grad);
        let sign = if ascend { 1.0 } else { -1.0 };
        for (zj, dj) in z.iter_mut().zip(&dir) {
            *zj += sign * config.stepsize * dj;
        }
        project(&mut z);
    }
    Ok(AttackResult {
        success: false,
        adversarial: None,
        distance: f64::INFINITY,
        queries_used: queries,
        start_queries: 0,
        trace: Vec::new(),
    })
}
