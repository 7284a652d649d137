//! Experiment orchestration, metrics and result files for boundwalk.

pub mod experiment;
pub mod metrics;
pub mod plot;
pub mod records;
pub mod spec;
pub mod verify;

pub use experiment::{
    attack_once, load_dataset, run_experiment, run_experiment_with, run_seed, select_targets, ExperimentOutput, Summary,
};
pub use metrics::{
    median_perturbation, per_sample_best, query_distortion_curve, sensitivity_report, success_rate_at_eps,
    CurveMetric, SensitivityReport, SensitivityRow,
};
pub use records::{read_csv, read_sidecar, write_csv, write_sidecar, RunRecord};
pub use spec::{AttackKind, DatasetSource, ExperimentSpec, TargetSpec};
pub use verify::{run_verification, Check, VerifyOptions};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] boundwalk::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Oracle(#[from] boundwalk_oracle::OracleError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("experiment spec: {0}")]
    Spec(String),
    #[error("no records to aggregate")]
    EmptyRecords,
    #[error("sensitivity needs at least 3 hyperparameter values spanning 100x, got {values} spanning {span:.3}x")]
    InsufficientGrid { values: usize, span: f64 },
    #[error("sample {sample}, repetition {rep}, hyperparameter {hyperparameter}: {source}")]
    Run { sample: usize, rep: usize, hyperparameter: f64, source: boundwalk::Error },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
