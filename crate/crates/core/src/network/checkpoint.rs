//! JSON checkpoints: model configuration (bank specs, not matrices) plus
//! every parameter tensor as base64 little-endian `f64` planes.

use super::model::{HoloNetModel, ModelConfig};
use super::{NetworkError, ScalarField};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

const FORMAT: &str = "holonet-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Column-major real plane.
    pub re: String,
    pub im: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub tensors: Vec<TensorRecord>,
}

fn encode(values: impl Iterator<Item = f64>) -> String {
    let bytes: Vec<u8> = values.flat_map(f64::to_le_bytes).collect();
    STANDARD.encode(bytes)
}

fn decode(text: &str, expected: usize, name: &str) -> Result<Vec<f64>, NetworkError> {
    let bytes = STANDARD
        .decode(text)
        .map_err(|e| NetworkError::Checkpoint(format!("{name}: {e}")))?;
    if bytes.len() != 8 * expected {
        return Err(NetworkError::Checkpoint(format!(
            "{name}: expected {expected} values, found {} bytes",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks of eight")))
        .collect())
}

impl Checkpoint {
    pub fn from_model(model: &HoloNetModel) -> Self {
        let complex = model.config().field == ScalarField::Complex;
        let n_layer_tensors = model.tensors().len() - if model.readout().is_some() { 2 } else { 0 };
        let tensors = model
            .tensors()
            .into_iter()
            .enumerate()
            .map(|(k, (name, t))| TensorRecord {
                name,
                rows: t.nrows(),
                cols: t.ncols(),
                re: encode(t.re().iter().copied()),
                im: (complex && k < n_layer_tensors).then(|| encode(t.im_or_zeros().iter().copied())),
            })
            .collect();
        Self {
            format: FORMAT.into(),
            version: VERSION,
            config: model.config().clone(),
            tensors,
        }
    }

    pub fn to_model(&self) -> Result<HoloNetModel, NetworkError> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(NetworkError::Checkpoint(format!(
                "unsupported container {} v{}",
                self.format, self.version
            )));
        }
        let mut model = HoloNetModel::new(self.config.clone(), &mut ChaCha8Rng::seed_from_u64(0))?;
        let expected = model.tensors();
        if expected.len() != self.tensors.len() {
            return Err(NetworkError::Checkpoint(format!(
                "expected {} tensors, found {}",
                expected.len(),
                self.tensors.len()
            )));
        }
        let sizes = model.tensor_sizes();
        let mut flat = Vec::with_capacity(model.n_params());
        for (((name, t), record), size) in expected.iter().zip(&self.tensors).zip(sizes) {
            if &record.name != name || (record.rows, record.cols) != t.shape() {
                return Err(NetworkError::Checkpoint(format!(
                    "tensor {} ({}x{}) does not match {name} {:?}",
                    record.name,
                    record.rows,
                    record.cols,
                    t.shape()
                )));
            }
            let count = record.rows * record.cols;
            flat.extend(decode(&record.re, count, name)?);
            match (&record.im, size == 2 * count) {
                (Some(im), true) => flat.extend(decode(im, count, name)?),
                (None, false) => {}
                _ => {
                    return Err(NetworkError::Checkpoint(format!(
                        "{name}: imaginary plane does not match the scalar field"
                    )))
                }
            }
        }
        model.set_params_flat(&flat)?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        serde_json::from_str(text).map_err(|e| NetworkError::Checkpoint(e.to_string()))
    }
}

pub fn save_checkpoint(model: &HoloNetModel, path: &Path) -> Result<(), NetworkError> {
    std::fs::write(path, Checkpoint::from_model(model).to_json())
        .map_err(|e| NetworkError::Checkpoint(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> Result<HoloNetModel, NetworkError> {
    let text = std::fs::read_to_string(path).map_err(|e| NetworkError::Checkpoint(format!("{}: {e}", path.display())))?;
    Checkpoint::from_json(&text)?.to_model()
}
