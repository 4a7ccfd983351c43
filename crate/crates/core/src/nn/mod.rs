//! From-scratch multilayer perceptron mapping `M` moments to the `M²` entries of
//! a kernel coefficient matrix, trained with Adam on a mean-squared error.

mod adam;
mod mlp;
mod persist;
mod train;

pub use adam::{adam_update, AdamState};
pub use mlp::{backward, forward, mse_loss, predict_kernel, Batch, Layer, MlpModel};
pub use persist::{load_model, save_model, MODEL_FORMAT, MODEL_VERSION};
pub use train::{train, EpochLoss, History};

use serde::{Deserialize, Serialize};

use crate::chebyshev::MomentVector;
use crate::error::{Error, Result};

/// Lower bound applied to per-moment standard deviations.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub input_size: usize,
    pub output_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![30, 25, 40],
            learning_rate: 0.00025,
            batch_size: 80,
            epochs: 300,
            input_size: 10,
            output_size: 100,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl MlpConfig {
    /// Same hyperparameters sized for `moment_count` inputs and its square as outputs.
    pub fn for_moments(&self, moment_count: usize) -> Self {
        Self {
            input_size: moment_count,
            output_size: moment_count * moment_count,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes_ok = self.input_size > 0
            && self.output_size > 0
            && self.batch_size > 0
            && self.hidden_sizes.iter().all(|h| *h > 0);
        if !sizes_ok {
            return Err(Error::invalid("network sizes and batch size must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        let beta_ok = |b: f64| b > 0.0 && b < 1.0;
        if !beta_ok(self.adam_beta1) || !beta_ok(self.adam_beta2) {
            return Err(Error::invalid("Adam betas must lie in (0, 1)"));
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(Error::invalid("Adam epsilon must be positive"));
        }
        Ok(())
    }

    /// Layer widths from input to output.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_sizes.len() + 2);
        sizes.push(self.input_size);
        sizes.extend(&self.hidden_sizes);
        sizes.push(self.output_size);
        sizes
    }
}

/// Per-coordinate z-score statistics of the training moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn identity(size: usize) -> Self {
        Self {
            mean: vec![0.0; size],
            std: vec![1.0; size],
        }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Population mean and standard deviation per coordinate; std floored at [`STD_FLOOR`].
pub fn fit_normalizer(training_moments: &[MomentVector]) -> Result<Normalizer> {
    let first = training_moments
        .first()
        .ok_or_else(|| Error::invalid("cannot fit a normalizer to an empty set"))?;
    let size = first.len();
    if let Some(bad) = training_moments.iter().find(|m| m.len() != size) {
        return Err(Error::mismatch("normalizer input", size, bad.len()));
    }
    let n = training_moments.len() as f64;
    let mut mean = vec![0.0; size];
    for m in training_moments {
        for (acc, v) in mean.iter_mut().zip(m.values()) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n);
    let mut var = vec![0.0; size];
    for m in training_moments {
        for ((acc, v), mu) in var.iter_mut().zip(m.values()).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let std = var.into_iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
    Ok(Normalizer { mean, std })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mv(v: &[f64]) -> MomentVector {
        MomentVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn constant_inputs_hit_the_floor() {
        let set = vec![mv(&[1.0, 0.3]), mv(&[1.0, 0.3]), mv(&[1.0, 0.3])];
        let n = fit_normalizer(&set).unwrap();
        assert_eq!(n.mean, vec![1.0, 0.3]);
        assert_eq!(n.std, vec![STD_FLOOR, STD_FLOOR]);
    }

    #[test]
    fn leading_moment_is_constant() {
        let set = vec![mv(&[1.0, 0.1]), mv(&[1.0, -0.5]), mv(&[1.0, 0.2])];
        let n = fit_normalizer(&set).unwrap();
        assert_eq!(n.mean[0], 1.0);
        assert_eq!(n.std[0], STD_FLOOR);
    }

    #[test]
    fn matches_two_pass_statistics() {
        let rows: Vec<Vec<f64>> = (0..37)
            .map(|i| vec![1.0, (i as f64 * 0.37).sin(), (i as f64 * 1.3).cos() * 0.5])
            .collect();
        let set: Vec<MomentVector> = rows.iter().map(|r| mv(r)).collect();
        let n = fit_normalizer(&set).unwrap();
        for j in 1..3 {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
            assert!((n.mean[j] - mean).abs() < 1e-15);
            assert!((n.std[j] - var.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_and_ragged_inputs_fail() {
        assert!(fit_normalizer(&[]).is_err());
        assert!(fit_normalizer(&[mv(&[1.0]), mv(&[1.0, 0.0])]).is_err());
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = MlpConfig::default().for_moments(7);
        assert_eq!(c.layer_sizes(), vec![7, 30, 25, 40, 49]);
        c.validate().unwrap();
        let bad = MlpConfig {
            adam_beta1: 1.0,
            ..c.clone()
        };
        assert!(bad.validate().is_err());
        let bad = MlpConfig {
            learning_rate: 0.0,
            ..c
        };
        assert!(bad.validate().is_err());
    }
}
