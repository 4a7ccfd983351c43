use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{MlpConfig, Normalizer};
use crate::chebyshev::MomentVector;
use crate::cost::KernelCoefficients;
use crate::error::{Error, Result};

/// One affine map `z = W a + b`; `weights` is `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: DMatrix::zeros(outputs, inputs),
            bias: DVector::zeros(outputs),
        }
    }

    /// Glorot-uniform weights in `±√(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        // row-major fill keeps the draw order independent of storage layout
        let mut weights = DMatrix::zeros(outputs, inputs);
        for r in 0..outputs {
            for c in 0..inputs {
                weights[(r, c)] = rng.random_range(-limit..limit);
            }
        }
        Self {
            weights,
            bias: DVector::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn apply(&self, input: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = &self.weights * input;
        for mut col in z.column_iter_mut() {
            col += &self.bias;
        }
        z
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub layers: Vec<Layer>,
    pub normalizer: Normalizer,
}

impl MlpModel {
    /// Freshly initialized network with an identity normalizer.
    pub fn init<R: Rng + ?Sized>(config: &MlpConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let sizes = config.layer_sizes();
        let layers = sizes
            .windows(2)
            .map(|w| Layer::glorot(w[0], w[1], rng))
            .collect();
        Ok(Self {
            config: config.clone(),
            layers,
            normalizer: Normalizer::identity(config.input_size),
        })
    }

    /// All weights and biases zero.
    pub fn zeros(config: &MlpConfig) -> Result<Self> {
        config.validate()?;
        let layers = config
            .layer_sizes()
            .windows(2)
            .map(|w| Layer::zeros(w[0], w[1]))
            .collect();
        Ok(Self {
            config: config.clone(),
            layers,
            normalizer: Normalizer::identity(config.input_size),
        })
    }

    pub fn input_size(&self) -> usize {
        self.config.input_size
    }

    pub fn output_size(&self) -> usize {
        self.config.output_size
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Layer::parameter_count).sum()
    }

    /// Checks that layer shapes chain from `input_size` to `output_size`.
    pub fn validate(&self) -> Result<()> {
        let sizes = self.config.layer_sizes();
        if self.layers.len() + 1 != sizes.len() {
            return Err(Error::Format(format!(
                "expected {} layers, found {}",
                sizes.len() - 1,
                self.layers.len()
            )));
        }
        for (layer, w) in self.layers.iter().zip(sizes.windows(2)) {
            if layer.inputs() != w[0] || layer.outputs() != w[1] || layer.bias.len() != w[1] {
                return Err(Error::Format(format!(
                    "layer shape {}x{} does not match {}x{}",
                    layer.outputs(),
                    layer.inputs(),
                    w[1],
                    w[0]
                )));
            }
        }
        if self.normalizer.len() != self.config.input_size
            || self.normalizer.std.len() != self.config.input_size
        {
            return Err(Error::mismatch(
                "normalizer",
                self.config.input_size,
                self.normalizer.len(),
            ));
        }
        Ok(())
    }

    fn normalized_inputs(&self, inputs: &[&[f64]]) -> Result<DMatrix<f64>> {
        let n = self.input_size();
        let mut x = DMatrix::zeros(n, inputs.len());
        for (col, input) in inputs.iter().enumerate() {
            if input.len() != n {
                return Err(Error::mismatch("network input", n, input.len()));
            }
            for (row, v) in self.normalizer.apply(input).into_iter().enumerate() {
                x[(row, col)] = v;
            }
        }
        Ok(x)
    }

    /// Pre-activations and activations of every layer; column `k` is sample `k`.
    fn forward_cached(&self, x: DMatrix<f64>) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = Vec::with_capacity(self.layers.len() + 1);
        act.push(x);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(act.last().expect("input pushed"));
            let a = if i == last {
                z.clone()
            } else {
                z.map(|v| v.max(0.0))
            };
            pre.push(z);
            act.push(a);
        }
        (pre, act)
    }

    /// Outputs for a batch of raw (unnormalized) inputs; column `k` is sample `k`.
    pub fn forward_batch(&self, inputs: &[&[f64]]) -> Result<DMatrix<f64>> {
        let x = self.normalized_inputs(inputs)?;
        let (_, mut act) = self.forward_cached(x);
        Ok(act.pop().expect("at least one layer"))
    }
}

/// Network output for one moment vector: normalize, three ReLU layers, linear head.
pub fn forward(model: &MlpModel, moments: &MomentVector) -> Result<Vec<f64>> {
    let out = model.forward_batch(&[moments.values()])?;
    Ok(out.column(0).iter().copied().collect())
}

/// Mean of squared differences.
pub fn mse_loss(prediction: &[f64], target: &[f64]) -> Result<f64> {
    if prediction.len() != target.len() {
        return Err(Error::mismatch("mse", target.len(), prediction.len()));
    }
    if prediction.is_empty() {
        return Err(Error::invalid("mse of empty vectors"));
    }
    let sum: f64 = prediction
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / prediction.len() as f64)
}

/// Inputs and flattened targets of a mini-batch.
#[derive(Clone, Copy, Debug)]
pub struct Batch<'a> {
    pub inputs: &'a [&'a [f64]],
    pub targets: &'a [&'a [f64]],
}

/// Batch-mean MSE and its exact gradient with respect to every layer.
/// The ReLU derivative at zero is taken as zero.
pub fn backward(model: &MlpModel, batch: Batch<'_>) -> Result<(f64, Vec<Layer>)> {
    let size = batch.inputs.len();
    if size == 0 {
        return Err(Error::invalid("empty batch"));
    }
    if batch.targets.len() != size {
        return Err(Error::mismatch("batch targets", size, batch.targets.len()));
    }
    let out_size = model.output_size();
    let x = model.normalized_inputs(batch.inputs)?;
    let (pre, act) = model.forward_cached(x);
    let prediction = act.last().expect("output present");

    let scale = 1.0 / (size * out_size) as f64;
    let mut loss = 0.0;
    let mut delta = DMatrix::zeros(out_size, size);
    for (col, target) in batch.targets.iter().enumerate() {
        if target.len() != out_size {
            return Err(Error::mismatch("batch target", out_size, target.len()));
        }
        for (row, t) in target.iter().enumerate() {
            let diff = prediction[(row, col)] - t;
            loss += diff * diff;
            delta[(row, col)] = 2.0 * scale * diff;
        }
    }
    loss *= scale;

    let mut grads: Vec<Layer> = Vec::with_capacity(model.layers.len());
    for i in (0..model.layers.len()).rev() {
        let weights = &delta * act[i].transpose();
        let bias = DVector::from_iterator(delta.nrows(), delta.row_iter().map(|r| r.sum()));
        grads.push(Layer { weights, bias });
        if i > 0 {
            let mut back = model.layers[i].weights.transpose() * &delta;
            back.zip_apply(&pre[i - 1], |d, z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = back;
        }
    }
    grads.reverse();
    Ok((loss, grads))
}

/// Forward pass reshaped row-major into an `M × M` kernel.
pub fn predict_kernel(model: &MlpModel, moments: &MomentVector) -> Result<KernelCoefficients> {
    let m = moments.len();
    if m != model.input_size() || m * m != model.output_size() {
        return Err(Error::mismatch("kernel prediction", model.input_size(), m));
    }
    KernelCoefficients::from_flat(m, forward(model, moments)?)
}
