//! Fully connected branches with batched forward and backward passes.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    /// Input width first, output width last.
    pub layer_widths: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub dropout_rate: f64,
}

impl MlpSpec {
    /// `tanh` hidden layers and a `sigmoid` output.
    pub fn new(layer_widths: Vec<usize>, dropout_rate: f64) -> Result<Self> {
        let spec = MlpSpec {
            layer_widths,
            hidden_activation: Activation::Tanh,
            output_activation: Activation::Sigmoid,
            dropout_rate,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 || self.layer_widths.contains(&0) {
            return Err(Error::InvalidInput(format!(
                "layer widths {:?} need at least two entries, all >= 1",
                self.layer_widths
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidInput(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().expect("validated")
    }
}

/// One affine map `a W + b` with `W` stored as fan_in × fan_out.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Layer {
    pub(crate) fn zeros_like(&self) -> Layer {
        Layer {
            weights: DMatrix::zeros(self.weights.nrows(), self.weights.ncols()),
            bias: DVector::zeros(self.bias.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub layers: Vec<Layer>,
}

/// Values kept from a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to each layer (after dropout of the previous layer).
    inputs: Vec<DMatrix<f64>>,
    /// Pre-activations of each layer.
    pub pre_activations: Vec<DMatrix<f64>>,
    /// Activation outputs before dropout.
    outputs: Vec<DMatrix<f64>>,
    /// Inverted-dropout multipliers per hidden layer, if dropout was active.
    masks: Vec<Option<DMatrix<f64>>>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init(spec: MlpSpec, rng: &mut impl Rng) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_widths
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Layer {
                    weights: DMatrix::from_fn(w[0], w[1], |_, _| rng.random_range(-limit..=limit)),
                    bias: DVector::zeros(w[1]),
                }
            })
            .collect();
        Ok(Mlp { spec, layers })
    }

    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_widths
            .windows(2)
            .map(|w| Layer {
                weights: DMatrix::zeros(w[0], w[1]),
                bias: DVector::zeros(w[1]),
            })
            .collect();
        Ok(Mlp { spec, layers })
    }

    /// Forward a batch of rows; dropout is applied to hidden outputs when `train` is set.
    pub fn forward(
        &self,
        input: &DMatrix<f64>,
        train: bool,
        rng: &mut impl Rng,
    ) -> Result<(DMatrix<f64>, MlpCache)> {
        if input.ncols() != self.spec.input_width() {
            return Err(Error::DimensionMismatch(format!(
                "branch expects width {}, got {}",
                self.spec.input_width(),
                input.ncols()
            )));
        }
        let last = self.layers.len() - 1;
        let keep = 1.0 - self.spec.dropout_rate;
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre_activations: Vec::with_capacity(self.layers.len()),
            outputs: Vec::with_capacity(self.layers.len()),
            masks: Vec::with_capacity(self.layers.len()),
        };
        let mut current = input.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = &current * &layer.weights;
            for mut row in z.row_iter_mut() {
                row += layer.bias.transpose();
            }
            let act = if l == last {
                self.spec.output_activation
            } else {
                self.spec.hidden_activation
            };
            let a = z.map(|v| act.apply(v));
            let mask = (l != last && train && self.spec.dropout_rate > 0.0).then(|| {
                DMatrix::from_fn(a.nrows(), a.ncols(), |_, _| {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
            });
            let next = match &mask {
                Some(m) => a.component_mul(m),
                None => a.clone(),
            };
            cache.inputs.push(std::mem::replace(&mut current, next));
            cache.pre_activations.push(z);
            cache.outputs.push(a);
            cache.masks.push(mask);
        }
        Ok((current, cache))
    }

    /// Parameter gradients given `d_out`, the loss gradient w.r.t. the branch output.
    pub fn backward(&self, cache: &MlpCache, d_out: &DMatrix<f64>) -> Vec<Layer> {
        let last = self.layers.len() - 1;
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        let mut upstream = d_out.clone();
        for l in (0..self.layers.len()).rev() {
            let act = if l == last {
                self.spec.output_activation
            } else {
                self.spec.hidden_activation
            };
            if let Some(mask) = &cache.masks[l] {
                upstream.component_mul_assign(mask);
            }
            let dz = upstream.zip_map(&cache.outputs[l], |g, a| g * act.derivative_from_output(a));
            let weights = cache.inputs[l].tr_mul(&dz);
            let bias = dz.row_sum().transpose();
            if l > 0 {
                upstream = &dz * self.layers[l].weights.transpose();
            }
            grads.push(Layer { weights, bias });
        }
        grads.reverse();
        grads
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn zero_parameters_give_half() {
        let mlp = Mlp::zeros(MlpSpec::new(vec![3, 4, 2], 0.2).unwrap()).unwrap();
        let x = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 3.0, 0.5, 0.5, 0.5]);
        let (out, _) = mlp.forward(&x, true, &mut seed::rng(0)).unwrap();
        assert!(out.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn spec_validation() {
        assert!(MlpSpec::new(vec![3], 0.0).is_err());
        assert!(MlpSpec::new(vec![3, 0, 2], 0.0).is_err());
        assert!(MlpSpec::new(vec![3, 2], 1.0).is_err());
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let mlp = Mlp::init(MlpSpec::new(vec![3, 2], 0.0).unwrap(), &mut seed::rng(1)).unwrap();
        assert!(mlp.forward(&DMatrix::zeros(1, 4), false, &mut seed::rng(0)).is_err());
    }

    #[test]
    fn inverted_dropout_keeps_expected_activation() {
        let spec = MlpSpec::new(vec![1, 2000, 1], 0.2).unwrap();
        let mut mlp = Mlp::zeros(spec).unwrap();
        mlp.layers[0].bias.fill(1.0);
        let x = DMatrix::zeros(1, 1);
        let (_, cache) = mlp.forward(&x, true, &mut seed::rng(3)).unwrap();
        let hidden = &cache.inputs[1];
        let mean = hidden.mean();
        assert!((mean - 1f64.tanh()).abs() < 0.03, "{mean}");
        let dropped = hidden.iter().filter(|&&v| v == 0.0).count() as f64 / 2000.0;
        assert!((dropped - 0.2).abs() < 0.03, "{dropped}");
    }

    #[test]
    fn backward_matches_finite_differences_on_sum_of_outputs() {
        let spec = MlpSpec::new(vec![3, 5, 4, 2], 0.0).unwrap();
        let mut rng = seed::rng(9);
        let mut mlp = Mlp::init(spec, &mut rng).unwrap();
        for layer in &mut mlp.layers {
            layer.bias = DVector::from_fn(layer.bias.len(), |i, _| 0.1 * i as f64 - 0.2);
        }
        let x = DMatrix::from_fn(4, 3, |i, j| ((i * 3 + j) as f64 * 0.37).sin());
        let loss = |m: &Mlp| m.forward(&x, false, &mut seed::rng(0)).unwrap().0.sum();
        let (out, cache) = mlp.forward(&x, false, &mut seed::rng(0)).unwrap();
        let grads = mlp.backward(&cache, &DMatrix::from_element(out.nrows(), out.ncols(), 1.0));
        let h = 1e-6;
        for l in 0..mlp.layers.len() {
            for idx in 0..mlp.layers[l].weights.len() {
                let mut plus = mlp.clone();
                plus.layers[l].weights[idx] += h;
                let mut minus = mlp.clone();
                minus.layers[l].weights[idx] -= h;
                let num = (loss(&plus) - loss(&minus)) / (2.0 * h);
                assert!((num - grads[l].weights[idx]).abs() < 1e-7);
            }
            for idx in 0..mlp.layers[l].bias.len() {
                let mut plus = mlp.clone();
                plus.layers[l].bias[idx] += h;
                let mut minus = mlp.clone();
                minus.layers[l].bias[idx] -= h;
                let num = (loss(&plus) - loss(&minus)) / (2.0 * h);
                assert!((num - grads[l].bias[idx]).abs() < 1e-7);
            }
        }
    }
}
