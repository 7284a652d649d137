use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{softmax, Activation, Dataset, Layer, Model};
use crate::{Error, Result};

/// Plain mini-batch SGD on softmax cross-entropy.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32],
            activation: Activation::Relu,
            epochs: 20,
            learning_rate: 0.1,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: Model,
    pub accuracy: f64,
}

fn init_model(dims: &[usize], activation: Activation, rng: &mut ChaCha8Rng) -> Result<Model> {
    let layers = dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = (0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)).collect();
            Layer::new(fan_out, fan_in, weights, vec![0.0; fan_out])
        })
        .collect::<Result<Vec<_>>>()?;
    Model::new(activation, layers)
}

pub fn accuracy(model: &Model, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut correct = 0;
    for (x, &y) in data.samples.iter().zip(&data.labels) {
        if model.predict(x)? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Trains an MLP with the given hidden widths. Deterministic for a fixed
/// seed; `epochs = 0` returns the seeded initialisation.
pub fn train_mlp(data: &Dataset, config: &TrainConfig) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = data.num_classes().max(2);
    let mut dims = vec![data.dim()];
    dims.extend(&config.hidden);
    dims.push(classes);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = init_model(&dims, config.activation, &mut rng)?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let batch = config.batch_size.max(1);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let mut grads: Vec<(Vec<f64>, Vec<f64>)> = model
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
                .collect();
            for &i in chunk {
                let tape = model.forward_tape(&data.samples[i]);
                let mut upstream = softmax(tape.pre.last().expect("non-empty model"));
                upstream[data.labels[i]] -= 1.0;
                let (_, params) = model.backward(&tape, &upstream, true);
                for ((gw, gb), (dw, db)) in grads.iter_mut().zip(params) {
                    gw.iter_mut().zip(dw).for_each(|(a, b)| *a += b);
                    gb.iter_mut().zip(db).for_each(|(a, b)| *a += b);
                }
            }
            let scale = config.learning_rate / chunk.len() as f64;
            for (layer, (gw, gb)) in model.layers.iter_mut().zip(grads) {
                layer.weights.iter_mut().zip(gw).for_each(|(w, g)| *w -= scale * g);
                layer.bias.iter_mut().zip(gb).for_each(|(b, g)| *b -= scale * g);
            }
        }
    }
    let accuracy = accuracy(&model, data)?;
    Ok(TrainReport { model, accuracy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_blobs;

    #[test]
    fn separable_blobs_train_to_high_accuracy() {
        // centres 0.32 apart, six spreads
        let data = make_blobs(100, 2, 2, 0.05, 3);
        let cfg = TrainConfig { hidden: vec![8], epochs: 30, learning_rate: 0.5, ..TrainConfig::default() };
        let report = train_mlp(&data, &cfg).unwrap();
        assert!(report.accuracy >= 0.95, "accuracy {}", report.accuracy);
    }

    #[test]
    fn zero_epochs_returns_initialisation() {
        let data = make_blobs(10, 2, 3, 0.1, 2);
        let cfg = TrainConfig { epochs: 0, seed: 4, ..TrainConfig::default() };
        let a = train_mlp(&data, &cfg).unwrap().model;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = init_model(&[3, 32, 2], Activation::Relu, &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn same_seed_same_weights() {
        let data = make_blobs(15, 3, 2, 0.2, 8);
        let cfg = TrainConfig { epochs: 4, ..TrainConfig::default() };
        let a = train_mlp(&data, &cfg).unwrap().model;
        let b = train_mlp(&data, &cfg).unwrap().model;
        assert_eq!(a, b);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(matches!(
            train_mlp(&Dataset::default(), &TrainConfig::default()),
            Err(Error::EmptyDataset)
        ));
    }
}
