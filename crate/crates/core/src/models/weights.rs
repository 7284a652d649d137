//! Plain-text weight files:
//!
//! ```json
//! {"version": 1, "activation": "relu",
//!  "layers": [{"rows": 2, "cols": 3, "weights": [...row-major...], "bias": [...]}]}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Activation, Layer, Model};
use crate::{Error, Result};

const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct WeightFile {
    version: u32,
    activation: Activation,
    layers: Vec<Layer>,
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let file = WeightFile { version: VERSION, activation: model.activation, layers: model.layers.clone() };
    fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let file: WeightFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    if file.version != VERSION {
        return Err(Error::UnsupportedVersion(file.version));
    }
    Model::new(file.activation, file.layers)
}
