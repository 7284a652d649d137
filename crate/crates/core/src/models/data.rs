use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub samples: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(samples: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::CountMismatch { images: samples.len(), labels: labels.len() });
        }
        if let Some(first) = samples.first() {
            if let Some(bad) = samples.iter().find(|s| s.len() != first.len()) {
                return Err(Error::DimensionMismatch { expected: first.len(), found: bad.len() });
            }
        }
        Ok(Self { samples, labels })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// First `n` samples.
    pub fn take(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset { samples: self.samples[..n].to_vec(), labels: self.labels[..n].to_vec() }
    }
}

/// Gaussian clusters in `[0, 1]^dimension`, `n_per_class` points per class.
///
/// Class centres are drawn uniformly from `[0.15, 0.85]^dimension`; points are
/// `centre + spread · N(0, I)` clipped to the unit box. Samples are
/// interleaved by class.
pub fn make_blobs(n_per_class: usize, classes: usize, dimension: usize, spread: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dimension).map(|_| rng.random_range(0.15..0.85)).collect())
        .collect();
    let mut samples = Vec::with_capacity(n_per_class * classes);
    let mut labels = Vec::with_capacity(n_per_class * classes);
    for _ in 0..n_per_class {
        for (class, centre) in centres.iter().enumerate() {
            let point = centre
                .iter()
                .map(|&c| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (c + spread * z).clamp(0.0, 1.0)
                })
                .collect();
            samples.push(point);
            labels.push(class);
        }
    }
    Dataset { samples, labels }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_spread_collapses_to_centres() {
        let d = make_blobs(5, 3, 4, 0.0, 11);
        for (s, &l) in d.samples.iter().zip(&d.labels) {
            assert_eq!(s, &d.samples[l]);
        }
    }

    #[test]
    fn blobs_stay_in_unit_box() {
        let d = make_blobs(50, 4, 3, 0.8, 3);
        assert_eq!(d.len(), 200);
        assert!(d.samples.iter().flatten().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn blobs_are_seed_deterministic() {
        assert_eq!(make_blobs(10, 2, 2, 0.1, 9), make_blobs(10, 2, 2, 0.1, 9));
        assert_ne!(make_blobs(10, 2, 2, 0.1, 9), make_blobs(10, 2, 2, 0.1, 10));
    }
}
