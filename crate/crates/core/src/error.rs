use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("class index {class} out of range for {num_classes} classes")]
    InvalidClass { class: usize, num_classes: usize },

    #[error("targeted criterion needs a target different from the label {0}")]
    TargetEqualsLabel(usize),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("gradient of the adversarial criterion vanished (possible gradient masking)")]
    ZeroGradient,

    #[error("gradient masking: zero boundary normal at step {step} after {queries} queries")]
    GradientMasking { step: usize, queries: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no adversarial starting point after scanning {pool} pool samples and {draws} uniform draws")]
    StartFailure { pool: usize, draws: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("IDX format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("image file holds {images} items but label file holds {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("unsupported weight file version {0}")]
    UnsupportedVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
