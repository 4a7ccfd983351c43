use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Layer, MlpConfig, MlpModel, Normalizer};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "chebkern-mlp";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    rows: usize,
    cols: usize,
    /// Row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelRecord {
    format: String,
    version: u32,
    config: MlpConfig,
    normalizer: Normalizer,
    layers: Vec<LayerRecord>,
}

impl From<&Layer> for LayerRecord {
    fn from(layer: &Layer) -> Self {
        let (rows, cols) = layer.weights.shape();
        let weights = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|rc| layer.weights[rc])
            .collect();
        Self {
            rows,
            cols,
            weights,
            bias: layer.bias.as_slice().to_vec(),
        }
    }
}

impl TryFrom<LayerRecord> for Layer {
    type Error = Error;

    fn try_from(rec: LayerRecord) -> Result<Self> {
        if rec.weights.len() != rec.rows * rec.cols || rec.bias.len() != rec.rows {
            return Err(Error::Format(format!(
                "layer record {}x{} has {} weights and {} biases",
                rec.rows,
                rec.cols,
                rec.weights.len(),
                rec.bias.len()
            )));
        }
        Ok(Layer {
            weights: DMatrix::from_row_slice(rec.rows, rec.cols, &rec.weights),
            bias: DVector::from_vec(rec.bias),
        })
    }
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    let record = ModelRecord {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        config: model.config.clone(),
        normalizer: model.normalizer.clone(),
        layers: model.layers.iter().map(LayerRecord::from).collect(),
    };
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut out, &record)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    let record: ModelRecord = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    if record.format != MODEL_FORMAT {
        return Err(Error::Format(format!("unknown model format `{}`", record.format)));
    }
    if record.version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {} (expected {MODEL_VERSION})",
            record.version
        )));
    }
    let layers = record
        .layers
        .into_iter()
        .map(Layer::try_from)
        .collect::<Result<Vec<_>>>()?;
    let model = MlpModel {
        config: record.config,
        layers,
        normalizer: record.normalizer,
    };
    model.validate()?;
    Ok(model)
}
