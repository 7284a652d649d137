use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::base::{lp_distance, BoxBounds, NormKind};
use crate::criterion::{evaluate, Criterion};
use crate::models::{Dataset, Model};
use crate::{Error, Result};

/// Uniform draws tried once the pool is exhausted.
pub const UNIFORM_DRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct StartPoint {
    pub point: Vec<f64>,
    /// Criterion evaluations spent finding the point.
    pub queries: usize,
}

/// Closest (L2) adversarial sample of `pool`, falling back to uniform noise
/// in `bounds`. Pool candidates are tried nearest first.
pub fn find_starting_point(
    pool: &Dataset,
    x: &[f64],
    crit: &Criterion,
    model: &Model,
    bounds: &BoxBounds,
    seed: u64,
) -> Result<StartPoint> {
    if !pool.is_empty() && pool.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: pool.dim() });
    }
    let mut order: Vec<(f64, usize)> = pool
        .samples
        .iter()
        .enumerate()
        .filter(|(_, s)| bounds.contains(s))
        .map(|(i, s)| Ok((lp_distance(x, s, NormKind::L2)?, i)))
        .collect::<Result<_>>()?;
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut queries = 0;
    for (_, i) in order {
        let candidate = &pool.samples[i];
        queries += 1;
        if evaluate(model, candidate, crit)? < 0.0 {
            return Ok(StartPoint { point: candidate.clone(), queries });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..UNIFORM_DRAWS {
        let candidate: Vec<f64> = (0..x.len()).map(|_| rng.random_range(bounds.lower..=bounds.upper)).collect();
        queries += 1;
        if evaluate(model, &candidate, crit)? < 0.0 {
            return Ok(StartPoint { point: candidate, queries });
        }
    }
    Err(Error::StartFailure { pool: pool.len(), draws: UNIFORM_DRAWS })
}

/// Bisects the segment from `x` (not adversarial) to `start` (adversarial)
/// and returns the adversarial end of the final interval. Costs `steps`
/// criterion evaluations.
pub fn binary_search_to_boundary(
    model: &Model,
    crit: &Criterion,
    x: &[f64],
    start: &[f64],
    steps: usize,
) -> Result<Vec<f64>> {
    if x.len() != start.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: start.len() });
    }
    if evaluate(model, x, crit)? < 0.0 {
        return Err(Error::Precondition("clean input is already adversarial".into()));
    }
    if evaluate(model, start, crit)? >= 0.0 {
        return Err(Error::Precondition("starting point is not adversarial".into()));
    }
    let at = |t: f64| -> Vec<f64> { x.iter().zip(start).map(|(a, b)| a + t * (b - a)).collect() };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if evaluate(model, &at(mid), crit)? < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(if hi == 1.0 { start.to_vec() } else { at(hi) })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1-D model with adv(z) = z − 0.5 under the untargeted criterion for
    /// class 0.
    fn ramp() -> Model {
        Model::linear(2, 1, vec![0.0, 1.0], vec![0.0, -0.5]).unwrap()
    }

    fn demo_linear() -> Model {
        Model::linear(2, 2, vec![0.0, 0.0, 3.0, 4.0], vec![0.0, -2.0]).unwrap()
    }

    #[test]
    fn bisection_lands_just_past_the_boundary() {
        let crit = Criterion::untargeted(0);
        let z = binary_search_to_boundary(&ramp(), &crit, &[0.0], &[1.0], 10).unwrap();
        assert!(z[0] > 0.5 && z[0] - 0.5 <= 2f64.powi(-10));
    }

    #[test]
    fn single_step_bisection() {
        let crit = Criterion::untargeted(0);
        let z = binary_search_to_boundary(&ramp(), &crit, &[0.0], &[1.0], 1).unwrap();
        assert_eq!(z, vec![1.0]);
        let z = binary_search_to_boundary(&ramp(), &crit, &[0.0], &[0.8], 1).unwrap();
        assert_eq!(z, vec![0.8]);
        let z = binary_search_to_boundary(&ramp(), &crit, &[0.4], &[1.0], 1).unwrap();
        assert_eq!(z, vec![0.7]);
    }

    #[test]
    fn start_on_the_boundary_is_kept() {
        let crit = Criterion::untargeted(0);
        let start = [0.5 + 1e-6];
        let z = binary_search_to_boundary(&ramp(), &crit, &[0.0], &start, 10).unwrap();
        assert_eq!(z, start.to_vec());
    }

    #[test]
    fn bisection_preconditions() {
        let crit = Criterion::untargeted(0);
        assert!(matches!(
            binary_search_to_boundary(&ramp(), &crit, &[0.9], &[1.0], 10),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            binary_search_to_boundary(&ramp(), &crit, &[0.0], &[0.2], 10),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn pool_with_one_adversarial_sample() {
        let pool = Dataset::new(vec![vec![0.1, 0.0], vec![0.9, 0.9], vec![0.0, 0.2]], vec![0, 1, 0]).unwrap();
        let s = find_starting_point(&pool, &[0.1, 0.1], &Criterion::untargeted(0), &demo_linear(), &BoxBounds::default(), 0)
            .unwrap();
        assert_eq!(s.point, vec![0.9, 0.9]);
        assert_eq!(s.queries, 3);
    }

    #[test]
    fn nearest_adversarial_sample_wins() {
        let x = [0.1, 0.1];
        let far = vec![0.4, 0.5];
        let near = vec![0.28, 0.34];
        assert!((lp_distance(&x, &far, NormKind::L2).unwrap() - 0.5).abs() < 1e-12);
        assert!((lp_distance(&x, &near, NormKind::L2).unwrap() - 0.3).abs() < 1e-12);
        let pool = Dataset::new(vec![far, near.clone()], vec![1, 1]).unwrap();
        let s = find_starting_point(&pool, &x, &Criterion::untargeted(0), &demo_linear(), &BoxBounds::default(), 0)
            .unwrap();
        assert_eq!(s.point, near);
        assert_eq!(s.queries, 1);
    }

    #[test]
    fn empty_pool_falls_back_to_noise() {
        let model = demo_linear();
        let crit = Criterion::untargeted(0);
        let s = find_starting_point(&Dataset::default(), &[0.1, 0.1], &crit, &model, &BoxBounds::default(), 7).unwrap();
        assert!(evaluate(&model, &s.point, &crit).unwrap() < 0.0);
        assert!(BoxBounds::default().contains(&s.point));
        let again =
            find_starting_point(&Dataset::default(), &[0.1, 0.1], &crit, &model, &BoxBounds::default(), 7).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn unreachable_class_fails_to_start() {
        // class 1 can never win: its logit is always 1 below class 0
        let model = Model::linear(2, 1, vec![1.0, 1.0], vec![1.0, 0.0]).unwrap();
        let err = find_starting_point(&Dataset::default(), &[0.5], &Criterion::untargeted(0), &model, &BoxBounds::default(), 0)
            .unwrap_err();
        assert!(matches!(err, Error::StartFailure { pool: 0, draws: UNIFORM_DRAWS }));
    }
}
