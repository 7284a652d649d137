//! The differentiable adversarial criterion.
//!
//! For logits `m`, the targeted criterion is `m_y − m_t` and the untargeted
//! one is `min_{t≠y} (m_y − m_t)`. Negative values are adversarial, zero is
//! the boundary and counts as not adversarial.

use serde::{Deserialize, Serialize};

use crate::models::Model;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    Untargeted { label: usize },
    Targeted { label: usize, target: usize },
}

impl Criterion {
    pub fn untargeted(label: usize) -> Self {
        Criterion::Untargeted { label }
    }

    pub fn targeted(label: usize, target: usize) -> Result<Self> {
        if label == target {
            return Err(Error::TargetEqualsLabel(label));
        }
        Ok(Criterion::Targeted { label, target })
    }

    pub fn label(&self) -> usize {
        match *self {
            Criterion::Untargeted { label } | Criterion::Targeted { label, .. } => label,
        }
    }

    fn check(&self, num_classes: usize) -> Result<()> {
        let classes = match *self {
            Criterion::Untargeted { label } => vec![label],
            Criterion::Targeted { label, target } => {
                if label == target {
                    return Err(Error::TargetEqualsLabel(label));
                }
                vec![label, target]
            }
        };
        if num_classes < 2 {
            return Err(Error::InvalidModel("need at least two classes".into()));
        }
        for class in classes {
            if class >= num_classes {
                return Err(Error::InvalidClass { class, num_classes });
            }
        }
        Ok(())
    }

    /// Competitor class: the fixed target, or the strongest other class (lowest
    /// index on ties).
    pub fn competitor(&self, logits: &[f64]) -> Result<usize> {
        self.check(logits.len())?;
        Ok(match *self {
            Criterion::Targeted { target, .. } => target,
            Criterion::Untargeted { label } => {
                let mut best: Option<usize> = None;
                for (t, &m) in logits.iter().enumerate() {
                    if t == label {
                        continue;
                    }
                    if best.map_or(true, |b| m > logits[b]) {
                        best = Some(t);
                    }
                }
                best.expect("at least two classes")
            }
        })
    }
}

pub fn adv_value(logits: &[f64], crit: &Criterion) -> Result<f64> {
    let t = crit.competitor(logits)?;
    Ok(logits[crit.label()] - logits[t])
}

/// Strict test: `adv < 0`.
pub fn is_adversarial(logits: &[f64], crit: &Criterion) -> Result<bool> {
    Ok(adv_value(logits, crit)? < 0.0)
}

/// Criterion value `c` and its input gradient `b`, from one forward and one
/// backward pass (one model query).
pub fn adv_value_and_grad(model: &Model, x: &[f64], crit: &Criterion) -> Result<(f64, Vec<f64>)> {
    let (logits, coeffs, grad) = model.grad_with(x, |logits| {
        let t = crit.competitor(logits)?;
        let mut coeffs = vec![0.0; logits.len()];
        coeffs[crit.label()] = 1.0;
        coeffs[t] = -1.0;
        Ok(coeffs)
    })?;
    let value: f64 = logits.iter().zip(&coeffs).map(|(l, c)| l * c).sum();
    if grad.iter().all(|&g| g == 0.0) {
        return Err(Error::ZeroGradient);
    }
    Ok((value, grad))
}

/// Criterion value at `x` (forward pass only).
pub fn evaluate(model: &Model, x: &[f64], crit: &Criterion) -> Result<f64> {
    adv_value(&model.forward(x)?, crit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Activation, Layer};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn demo_linear() -> Model {
        Model::linear(2, 2, vec![0.0, 0.0, 3.0, 4.0], vec![0.0, -2.0]).unwrap()
    }

    #[test]
    fn value_examples() {
        let logits = [2.0, 1.0, 3.0];
        assert_eq!(adv_value(&logits, &Criterion::untargeted(0)).unwrap(), -1.0);
        assert_eq!(adv_value(&logits, &Criterion::targeted(0, 1).unwrap()).unwrap(), 1.0);
        assert!(adv_value(&[5.0, 1.0, 3.0], &Criterion::untargeted(0)).unwrap() > 0.0);
    }

    #[test]
    fn membership_is_strict() {
        let crit = Criterion::targeted(0, 1).unwrap();
        assert!(is_adversarial(&[0.0, 1.0], &crit).unwrap());
        assert!(!is_adversarial(&[1.0, 0.0], &crit).unwrap());
        assert!(!is_adversarial(&[0.5, 0.5], &crit).unwrap());
    }

    #[test]
    fn invalid_classes_are_rejected() {
        assert!(matches!(
            adv_value(&[1.0, 2.0], &Criterion::untargeted(2)),
            Err(Error::InvalidClass { class: 2, num_classes: 2 })
        ));
        assert!(matches!(Criterion::targeted(1, 1), Err(Error::TargetEqualsLabel(1))));
        let forged = Criterion::Targeted { label: 0, target: 0 };
        assert!(adv_value(&[1.0, 2.0], &forged).is_err());
    }

    #[test]
    fn untargeted_ties_pick_lowest_index() {
        assert_eq!(Criterion::untargeted(1).competitor(&[2.0, 0.0, 2.0]).unwrap(), 0);
    }

    #[test]
    fn linear_value_and_gradient() {
        let (c, b) = adv_value_and_grad(&demo_linear(), &[0.1, 0.1], &Criterion::untargeted(0)).unwrap();
        assert!((c - 1.3).abs() < 1e-12);
        assert_eq!(b, vec![-3.0, -4.0]);
    }

    #[test]
    fn constant_model_signals_zero_gradient() {
        let m = Model::linear(2, 3, vec![0.0; 6], vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            adv_value_and_grad(&m, &[0.2, 0.2, 0.2], &Criterion::untargeted(0)),
            Err(Error::ZeroGradient)
        ));
    }

    #[test]
    fn untargeted_is_min_over_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let classes = rng.random_range(2..=10);
            let logits: Vec<f64> = (0..classes).map(|_| rng.random_range(-5.0..5.0)).collect();
            let y = rng.random_range(0..classes);
            let brute = (0..classes)
                .filter(|&t| t != y)
                .map(|t| adv_value(&logits, &Criterion::targeted(y, t).unwrap()).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(adv_value(&logits, &Criterion::untargeted(y)).unwrap(), brute);
            let shift = rng.random_range(-100.0..100.0);
            let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
            let a = adv_value(&logits, &Criterion::untargeted(y)).unwrap();
            let b = adv_value(&shifted, &Criterion::untargeted(y)).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = 1e-5;
        for _ in 0..100 {
            let n = rng.random_range(2..6);
            let hidden = rng.random_range(3..8);
            let classes = rng.random_range(2..5);
            let l1 = Layer::new(
                hidden,
                n,
                (0..n * hidden).map(|_| rng.random_range(-1.0..1.0)).collect(),
                (0..hidden).map(|_| rng.random_range(-0.5..0.5)).collect(),
            )
            .unwrap();
            let l2 = Layer::new(
                classes,
                hidden,
                (0..hidden * classes).map(|_| rng.random_range(-1.0..1.0)).collect(),
                (0..classes).map(|_| rng.random_range(-0.5..0.5)).collect(),
            )
            .unwrap();
            let m = Model::new(Activation::Tanh, vec![l1, l2]).unwrap();
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..0.9)).collect();
            let crit = Criterion::untargeted(rng.random_range(0..classes));
            let (_, b) = adv_value_and_grad(&m, &x, &crit).unwrap();
            let scale = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
            for j in 0..n {
                let mut up = x.clone();
                let mut down = x.clone();
                up[j] += h;
                down[j] -= h;
                let fd = (evaluate(&m, &up, &crit).unwrap() - evaluate(&m, &down, &crit).unwrap()) / (2.0 * h);
                // skip points where the competitor switches inside the stencil
                let t0 = crit.competitor(&m.forward(&up).unwrap()).unwrap();
                let t1 = crit.competitor(&m.forward(&down).unwrap()).unwrap();
                if t0 != t1 {
                    continue;
                }
                assert!((fd - b[j]).abs() <= 1e-4 * scale, "fd {fd} vs {}", b[j]);
            }
        }
    }
}
