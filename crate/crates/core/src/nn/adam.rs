use super::{Layer, MlpConfig};
use crate::error::{Error, Result};

/// First and second moment accumulators, shaped like the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub first: Vec<Layer>,
    pub second: Vec<Layer>,
    pub step: u64,
}

impl AdamState {
    pub fn for_layers(layers: &[Layer]) -> Self {
        let zeros: Vec<Layer> = layers
            .iter()
            .map(|l| Layer::zeros(l.inputs(), l.outputs()))
            .collect();
        Self {
            first: zeros.clone(),
            second: zeros,
            step: 0,
        }
    }
}

fn step_slice(
    theta: &mut [f64],
    grad: &[f64],
    first: &mut [f64],
    second: &mut [f64],
    lr_t: f64,
    config: &MlpConfig,
    bias2: f64,
) {
    let (b1, b2, eps) = (config.adam_beta1, config.adam_beta2, config.adam_epsilon);
    for (((p, g), m), v) in theta.iter_mut().zip(grad).zip(first).zip(second) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let v_hat = *v / bias2;
        *p -= lr_t * *m / (v_hat.sqrt() + eps);
    }
}

/// One bias-corrected Adam step:
/// `θ ← θ - lr · m̂ / (√v̂ + ε)` with `m̂ = m / (1 - β₁ᵗ)`, `v̂ = v / (1 - β₂ᵗ)`.
pub fn adam_update(
    params: &mut [Layer],
    grads: &[Layer],
    state: &mut AdamState,
    config: &MlpConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first.len() {
        return Err(Error::mismatch("adam layers", params.len(), grads.len()));
    }
    for (p, g) in params.iter().zip(grads) {
        if p.weights.shape() != g.weights.shape() || p.bias.len() != g.bias.len() {
            return Err(Error::invalid("gradient shape does not match parameters"));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - config.adam_beta1.powi(t);
    let bias2 = 1.0 - config.adam_beta2.powi(t);
    let lr_t = config.learning_rate / bias1;
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(&mut state.first)
        .zip(&mut state.second)
    {
        step_slice(
            p.weights.as_mut_slice(),
            g.weights.as_slice(),
            m.weights.as_mut_slice(),
            v.weights.as_mut_slice(),
            lr_t,
            config,
            bias2,
        );
        step_slice(
            p.bias.as_mut_slice(),
            g.bias.as_slice(),
            m.bias.as_mut_slice(),
            v.bias.as_mut_slice(),
            lr_t,
            config,
            bias2,
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn scalar(value: f64) -> Vec<Layer> {
        vec![Layer {
            weights: DMatrix::from_element(1, 1, value),
            bias: DVector::from_element(1, value),
        }]
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let config = MlpConfig::default();
        let mut params = scalar(0.7);
        let mut state = AdamState::for_layers(&params);
        adam_update(&mut params, &scalar(0.0), &mut state, &config).unwrap();
        assert_eq!(params, scalar(0.7));
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let config = MlpConfig::default();
        let mut params = scalar(0.0);
        let mut state = AdamState::for_layers(&params);
        adam_update(&mut params, &scalar(1.0), &mut state, &config).unwrap();
        let moved = params[0].weights[(0, 0)];
        assert!((moved + 0.00025).abs() < 1e-11, "{moved}");
    }

    #[test]
    fn two_steps_match_unrolled_recurrence() {
        let config = MlpConfig {
            learning_rate: 0.01,
            ..MlpConfig::default()
        };
        let g = 0.3;
        let mut params = scalar(1.0);
        let mut state = AdamState::for_layers(&params);
        adam_update(&mut params, &scalar(g), &mut state, &config).unwrap();
        adam_update(&mut params, &scalar(g), &mut state, &config).unwrap();

        let (b1, b2, eps, lr) = (0.9f64, 0.999f64, 1e-8, 0.01);
        let mut theta = 1.0;
        let m1 = (1.0 - b1) * g;
        let v1 = (1.0 - b2) * g * g;
        theta -= lr * (m1 / (1.0 - b1)) / ((v1 / (1.0 - b2)).sqrt() + eps);
        let m2 = b1 * m1 + (1.0 - b1) * g;
        let v2 = b2 * v1 + (1.0 - b2) * g * g;
        theta -= lr * (m2 / (1.0 - b1 * b1)) / ((v2 / (1.0 - b2 * b2)).sqrt() + eps);
        assert!((params[0].weights[(0, 0)] - theta).abs() < 1e-15);
        assert!((params[0].bias[0] - theta).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_fails() {
        let config = MlpConfig::default();
        let mut params = scalar(0.0);
        let mut state = AdamState::for_layers(&params);
        let bad = vec![Layer::zeros(2, 1)];
        assert!(adam_update(&mut params, &bad, &mut state, &config).is_err());
    }
}
