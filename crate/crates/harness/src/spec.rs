//! Experiment description, read from TOML:
//!
//! ```toml
//! model = "models/mnist.json"
//! attack = "ours-linf"
//! criterion = "untargeted"      # or "next", or { fixed = 3 }
//! samples = 100
//! repetitions = 1
//! grid = [1e-3, 1e-2, 1e-1]      # trust radii, or PGD step sizes
//! epsilon = 0.1
//! seed = 0
//!
//! [dataset]
//! kind = "mnist"
//! images = "data/mnist-subset/test-images-idx3-ubyte"
//! labels = "data/mnist-subset/test-labels-idx1-ubyte"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use boundwalk::NormKind;
use serde::{Deserialize, Serialize};

use crate::{io_err, HarnessError, Result};

/// Default trust radii for the boundary attack.
pub const TRUST_RADIUS_GRID: [f64; 7] = [3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1];
/// Default PGD step sizes.
pub const STEPSIZE_GRID: [f64; 8] = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    OursL0,
    OursL1,
    OursL2,
    OursLinf,
    Pgd,
    AdamPgd,
}

impl AttackKind {
    pub const ALL: [AttackKind; 6] = [
        AttackKind::OursL0,
        AttackKind::OursL1,
        AttackKind::OursL2,
        AttackKind::OursLinf,
        AttackKind::Pgd,
        AttackKind::AdamPgd,
    ];

    /// Norm distances are measured in.
    pub fn norm(self) -> NormKind {
        match self {
            AttackKind::OursL0 => NormKind::L0,
            AttackKind::OursL1 => NormKind::L1,
            AttackKind::OursL2 => NormKind::L2,
            AttackKind::OursLinf | AttackKind::Pgd | AttackKind::AdamPgd => NormKind::Linf,
        }
    }

    pub fn is_pgd(self) -> bool {
        matches!(self, AttackKind::Pgd | AttackKind::AdamPgd)
    }

    pub fn default_grid(self) -> Vec<f64> {
        if self.is_pgd() {
            STEPSIZE_GRID.to_vec()
        } else {
            TRUST_RADIUS_GRID.to_vec()
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackKind::OursL0 => "ours-l0",
            AttackKind::OursL1 => "ours-l1",
            AttackKind::OursL2 => "ours-l2",
            AttackKind::OursLinf => "ours-linf",
            AttackKind::Pgd => "pgd",
            AttackKind::AdamPgd => "adam-pgd",
        })
    }
}

impl FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        AttackKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown attack '{s}' (expected one of ours-l0, ours-l1, ours-l2, ours-linf, pgd, adam-pgd)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetSpec {
    #[default]
    Untargeted,
    /// Every sample towards the same class.
    Fixed(usize),
    /// Towards `(label + 1) mod classes`.
    Next,
}

impl FromStr for TargetSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "untargeted" => Ok(TargetSpec::Untargeted),
            "next" => Ok(TargetSpec::Next),
            other => other
                .strip_prefix("fixed:")
                .and_then(|t| t.parse().ok())
                .map(TargetSpec::Fixed)
                .ok_or_else(|| format!("unknown criterion '{other}' (untargeted, next or fixed:<class>)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    Mnist { images: PathBuf, labels: PathBuf },
    Blobs { n_per_class: usize, classes: usize, dimension: usize, spread: f64, seed: u64 },
    /// Uniform noise labelled by the model itself.
    Uniform { count: usize, dimension: usize, seed: u64 },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub model: PathBuf,
    pub dataset: DatasetSource,
    pub attack: AttackKind,
    #[serde(default)]
    pub criterion: TargetSpec,
    pub samples: usize,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Trust radii or PGD step sizes; empty selects the default grid.
    #[serde(default)]
    pub grid: Vec<f64>,
    pub epsilon: Option<f64>,
    pub seed: u64,
    /// Step budget of the boundary attack, iterations of PGD.
    pub max_steps: Option<usize>,
    pub max_queries: Option<usize>,
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| HarnessError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_with_overrides(Some(path.as_ref()), toml::Table::new())
    }

    /// Reads an optional spec file and replaces its top-level keys with
    /// `overrides`. Relative paths in the file are relative to the file;
    /// paths in `overrides` are taken as given.
    pub fn load_with_overrides(path: Option<&Path>, overrides: toml::Table) -> Result<Self> {
        let mut table = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(io_err(path))?;
                let mut table: toml::Table =
                    text.parse().map_err(|e: toml::de::Error| HarnessError::Spec(format!("{}: {e}", path.display())))?;
                resolve_paths(&mut table, path.parent().unwrap_or(Path::new(".")));
                table
            }
            None => toml::Table::new(),
        };
        table.extend(overrides);
        if !table.contains_key("seed") {
            return Err(HarnessError::Spec("seed is mandatory; set it in the experiment file or pass --seed".into()));
        }
        let text = toml::to_string(&table).map_err(|e| HarnessError::Spec(e.to_string()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Spec(e.to_string()))
    }

    pub fn grid(&self) -> Vec<f64> {
        if self.grid.is_empty() {
            self.attack.default_grid()
        } else {
            self.grid.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(HarnessError::Spec("samples must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(HarnessError::Spec("repetitions must be at least 1".into()));
        }
        if let Some(bad) = self.grid.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(HarnessError::Spec(format!("grid values must be finite and non-negative, got {bad}")));
        }
        if !self.attack.is_pgd() {
            if let Some(bad) = self.grid.iter().find(|v| **v <= 0.0) {
                return Err(HarnessError::Spec(format!("trust radii must be positive, got {bad}")));
            }
        }
        if self.attack.is_pgd() && !self.epsilon.is_some_and(|e| e > 0.0) {
            return Err(HarnessError::Spec(format!("{} needs a positive epsilon", self.attack)));
        }
        if self.max_steps == Some(0) && !self.attack.is_pgd() {
            return Err(HarnessError::Spec("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

fn resolve_paths(table: &mut toml::Table, base: &Path) {
    let fix = |v: &mut toml::Value| {
        if let toml::Value::String(s) = v {
            if Path::new(s.as_str()).is_relative() {
                *s = base.join(s.as_str()).to_string_lossy().into_owned();
            }
        }
    };
    for key in ["model", "output"] {
        if let Some(v) = table.get_mut(key) {
            fix(v);
        }
    }
    if let Some(toml::Value::Table(dataset)) = table.get_mut("dataset") {
        for key in ["images", "labels"] {
            if let Some(v) = dataset.get_mut(key) {
                fix(v);
            }
        }
    }
}
