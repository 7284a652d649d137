use std::path::PathBuf;

use boundwalk::models::{load_mnist_idx, load_model, make_blobs};
use boundwalk::{
    run_adam_pgd, run_attack, run_pgd, AttackConfig, AttackResult, BoxBounds, Criterion, Dataset, Error, Model,
    PgdConfig,
};
use log::{info, warn};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::metrics::{median_perturbation, success_rate_at_eps};
use crate::records::{write_csv, write_sidecar, RunRecord};
use crate::spec::{AttackKind, DatasetSource, ExperimentSpec, TargetSpec};
use crate::{io_err, HarnessError, Result};

pub fn load_dataset(source: &DatasetSource, model: &Model) -> Result<Dataset> {
    Ok(match source {
        DatasetSource::Mnist { images, labels } => load_mnist_idx(images, labels)?,
        DatasetSource::Blobs { n_per_class, classes, dimension, spread, seed } => {
            make_blobs(*n_per_class, *classes, *dimension, *spread, *seed)
        }
        DatasetSource::Uniform { count, dimension, seed } => {
            use rand::Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let samples: Vec<Vec<f64>> =
                (0..*count).map(|_| (0..*dimension).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
            let labels = samples.iter().map(|s| model.predict(s)).collect::<boundwalk::Result<Vec<_>>>()?;
            Dataset::new(samples, labels)?
        }
    })
}

/// The first `count` correctly classified samples that have a valid
/// criterion, as `(index, criterion)`.
pub fn select_targets(model: &Model, data: &Dataset, target: TargetSpec, count: usize) -> Result<Vec<(usize, Criterion)>> {
    let classes = model.num_classes();
    let mut out = Vec::with_capacity(count);
    for (i, (x, &label)) in data.samples.iter().zip(&data.labels).enumerate() {
        if out.len() == count {
            break;
        }
        if label >= classes || model.predict(x)? != label {
            continue;
        }
        let crit = match target {
            TargetSpec::Untargeted => Criterion::untargeted(label),
            TargetSpec::Next => Criterion::targeted(label, (label + 1) % classes)?,
            TargetSpec::Fixed(t) if t == label => continue,
            TargetSpec::Fixed(t) if t >= classes => {
                return Err(HarnessError::Core(Error::InvalidClass { class: t, num_classes: classes }))
            }
            TargetSpec::Fixed(t) => Criterion::targeted(label, t)?,
        };
        out.push((i, crit));
    }
    Ok(out)
}

/// Seed of one run, independent of the hyperparameter so that every grid
/// value sees the same random start.
pub fn run_seed(seed: u64, sample: usize, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((sample as u64) << 16) ^ rep as u64);
    rng.next_u64()
}

/// Runs one attack. Start failures and masked gradients become failed runs.
pub fn attack_once(
    spec: &ExperimentSpec,
    model: &Model,
    pool: &Dataset,
    x: &[f64],
    crit: &Criterion,
    hyperparameter: f64,
    seed: u64,
) -> std::result::Result<AttackResult, Error> {
    let bounds = BoxBounds::default();
    if spec.attack.is_pgd() {
        let cfg = PgdConfig {
            epsilon: spec.epsilon.unwrap_or(0.0),
            stepsize: hyperparameter,
            iterations: spec.max_steps.unwrap_or(1000),
            seed,
            bounds,
        };
        return match spec.attack {
            AttackKind::Pgd => run_pgd(model, x, crit, &cfg),
            _ => run_adam_pgd(model, x, crit, &cfg),
        };
    }
    let mut cfg = AttackConfig::new(spec.attack.norm(), hyperparameter);
    cfg.seed = seed;
    cfg.bounds = bounds;
    cfg.max_queries = spec.max_queries;
    if let Some(steps) = spec.max_steps {
        cfg.max_steps = steps;
    }
    run_attack(model, x, crit, &cfg, pool)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub attack: AttackKind,
    pub samples: usize,
    pub runs: usize,
    pub failed_runs: usize,
    pub median_distance: f64,
    pub accuracy_at_epsilon: Option<f64>,
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {} samples, {} runs ({} failed), median {} distance {:.6}",
            self.attack,
            self.samples,
            self.runs,
            self.failed_runs,
            self.attack.norm(),
            self.median_distance
        )?;
        if let Some(acc) = self.accuracy_at_epsilon {
            write!(f, ", accuracy under attack {acc:.3}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
    pub files: Vec<PathBuf>,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let model = load_model(&spec.model).map_err(|e| match e {
        Error::Io(source) => HarnessError::Io { path: spec.model.clone(), source },
        other => HarnessError::Core(other),
    })?;
    let data = load_dataset(&spec.dataset, &model)?;
    run_experiment_with(spec, &model, &data)
}

/// As [`run_experiment`] with the model and dataset already loaded. The
/// dataset doubles as the pool of starting points.
pub fn run_experiment_with(spec: &ExperimentSpec, model: &Model, data: &Dataset) -> Result<ExperimentOutput> {
    spec.validate()?;
    let targets = select_targets(model, data, spec.criterion, spec.samples)?;
    if targets.len() < spec.samples {
        warn!("only {} of {} requested samples are attackable", targets.len(), spec.samples);
    }
    let grid = spec.grid();
    let jobs: Vec<(usize, Criterion, usize, f64)> = targets
        .iter()
        .flat_map(|&(i, crit)| {
            let grid = &grid;
            (0..spec.repetitions).flat_map(move |rep| grid.iter().map(move |&h| (i, crit, rep, h)))
        })
        .collect();
    info!("{} runs of {} on {} samples", jobs.len(), spec.attack, targets.len());

    let records = jobs
        .par_iter()
        .map(|&(i, crit, rep, h)| {
            let seed = run_seed(spec.seed, i, rep);
            match attack_once(spec, model, data, &data.samples[i], &crit, h, seed) {
                Ok(res) => Ok(RunRecord::from_result(i, rep, spec.attack, h, &res)),
                Err(Error::GradientMasking { step, queries }) => {
                    warn!("sample {i} rep {rep} h {h}: gradient vanished at step {step}");
                    Ok(RunRecord::failed(i, rep, spec.attack, h, queries))
                }
                Err(Error::StartFailure { .. }) => {
                    warn!("sample {i} rep {rep} h {h}: no adversarial starting point");
                    Ok(RunRecord::failed(i, rep, spec.attack, h, 0))
                }
                Err(source) => Err(HarnessError::Run { sample: i, rep, hyperparameter: h, source }),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = Summary {
        attack: spec.attack,
        samples: targets.len(),
        runs: records.len(),
        failed_runs: records.iter().filter(|r| !r.success).count(),
        median_distance: if records.is_empty() { f64::INFINITY } else { median_perturbation(&records)? },
        accuracy_at_epsilon: match spec.epsilon {
            Some(eps) if !records.is_empty() => Some(success_rate_at_eps(&records, eps)?),
            _ => None,
        },
    };

    let mut files = Vec::new();
    if let Some(dir) = &spec.output {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let csv = dir.join("results.csv");
        let json = dir.join("results.json");
        write_csv(&csv, &records)?;
        write_sidecar(&json, &records)?;
        files.push(csv);
        files.push(json);
    }
    Ok(ExperimentOutput { records, summary, files })
}
