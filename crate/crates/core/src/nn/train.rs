use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adam_update, backward, fit_normalizer, AdamState, Batch, MlpConfig, MlpModel};
use crate::chebyshev::MomentVector;
use crate::error::{Error, Result};
use crate::response::DatasetSample;

const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Size-weighted mean of the mini-batch losses seen during the epoch.
    pub train: f64,
    /// Loss on the validation split after the epoch; `None` without a validation split.
    pub validation: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochLoss>,
    /// Epoch whose parameters were kept.
    pub best_epoch: Option<usize>,
}

impl History {
    pub fn first_validation(&self) -> Option<f64> {
        self.epochs.first().and_then(|e| e.validation)
    }

    pub fn best_validation(&self) -> Option<f64> {
        self.epochs
            .iter()
            .filter_map(|e| e.validation)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
    }
}

struct Examples {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

impl Examples {
    fn from_samples(samples: &[DatasetSample], config: &MlpConfig) -> Result<Self> {
        let mut inputs = Vec::with_capacity(samples.len());
        let mut targets = Vec::with_capacity(samples.len());
        for sample in samples {
            if sample.moments.len() != config.input_size {
                return Err(Error::mismatch(
                    "training moments",
                    config.input_size,
                    sample.moments.len(),
                ));
            }
            let kernel = sample.target_kernel()?;
            if kernel.as_flat().len() != config.output_size {
                return Err(Error::mismatch(
                    "training target",
                    config.output_size,
                    kernel.as_flat().len(),
                ));
            }
            inputs.push(sample.moments.values().to_vec());
            targets.push(kernel.as_flat().to_vec());
        }
        Ok(Self { inputs, targets })
    }

    fn len(&self) -> usize {
        self.inputs.len()
    }

    fn mean_loss(&self, model: &MlpModel, batch_size: usize) -> Result<f64> {
        let mut total = 0.0;
        let idx: Vec<usize> = (0..self.len()).collect();
        for chunk in idx.chunks(batch_size.max(1)) {
            let inputs: Vec<&[f64]> = chunk.iter().map(|&i| self.inputs[i].as_slice()).collect();
            let out = model.forward_batch(&inputs)?;
            for (col, &i) in chunk.iter().enumerate() {
                let target = &self.targets[i];
                total += out
                    .column(col)
                    .iter()
                    .zip(target)
                    .map(|(p, t)| (p - t) * (p - t))
                    .sum::<f64>();
            }
        }
        Ok(total / (self.len() * model.output_size()) as f64)
    }
}

/// Trains on samples carrying least-squares targets; returns the parameters
/// with the lowest validation loss (training loss when `validation` is empty).
pub fn train(
    training: &[DatasetSample],
    validation: &[DatasetSample],
    config: &MlpConfig,
) -> Result<(MlpModel, History)> {
    config.validate()?;
    if training.is_empty() {
        return Err(Error::Precondition("training split is empty".into()));
    }
    let train_set = Examples::from_samples(training, config)?;
    let val_set = Examples::from_samples(validation, config)?;

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    init_rng.set_stream(INIT_STREAM);
    let mut model = MlpModel::init(config, &mut init_rng)?;
    let train_moments: Vec<MomentVector> = training.iter().map(|s| s.moments.clone()).collect();
    model.normalizer = fit_normalizer(&train_moments)?;

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(SHUFFLE_STREAM);
    let mut adam = AdamState::for_layers(&model.layers);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = History::default();
    let mut best: Option<(f64, Vec<super::Layer>)> = None;

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let inputs: Vec<&[f64]> = chunk.iter().map(|&i| train_set.inputs[i].as_slice()).collect();
            let targets: Vec<&[f64]> = chunk.iter().map(|&i| train_set.targets[i].as_slice()).collect();
            let (loss, grads) = backward(
                &model,
                Batch {
                    inputs: &inputs,
                    targets: &targets,
                },
            )?;
            epoch_loss += loss * chunk.len() as f64;
            adam_update(&mut model.layers, &grads, &mut adam, config)?;
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let val_loss = if val_set.len() > 0 {
            Some(val_set.mean_loss(&model, 512)?)
        } else {
            None
        };
        if !train_loss.is_finite() {
            return Err(Error::invalid(format!("training diverged at epoch {}", epoch + 1)));
        }
        history.epochs.push(EpochLoss {
            epoch: epoch + 1,
            train: train_loss,
            validation: val_loss,
        });
        let score = val_loss.unwrap_or(train_loss);
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, model.layers.clone()));
            history.best_epoch = Some(epoch + 1);
        }
    }
    if let Some((_, layers)) = best {
        model.layers = layers;
    }
    Ok((model, history))
}
