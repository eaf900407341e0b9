use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::quant::quantize_q15;
use super::EngineError;
use crate::scalar::Scalar;

/// Arithmetic mode for the forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    /// Q1.15 weights and activations with a wide accumulator.
    Fixed16,
    /// Native arithmetic of the scalar type.
    Float32,
}

impl TryFrom<u32> for Precision {
    type Error = String;

    fn try_from(bits: u32) -> Result<Self, String> {
        match bits {
            16 => Ok(Precision::Fixed16),
            32 => Ok(Precision::Float32),
            other => Err(format!("precision must be 16 or 32, got {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

impl Activation {
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Identity => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<T>,
        bias: Vec<T>,
    ) -> Result<Self, EngineError> {
        if weights.len() != in_dim * out_dim {
            return Err(EngineError::ShapeMismatch {
                what: "layer weights",
                expected: in_dim * out_dim,
                got: weights.len(),
            });
        }
        if bias.len() != out_dim {
            return Err(EngineError::ShapeMismatch {
                what: "layer bias",
                expected: out_dim,
                got: bias.len(),
            });
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            bias,
        })
    }

    fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            weights: self.weights.iter().copied().map(&f).collect(),
            bias: self.bias.iter().copied().map(&f).collect(),
        }
    }

    fn forward(&self, x: &[T]) -> Vec<T> {
        self.weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (&w, &v)| acc + w * v))
            .collect()
    }
}

/// Top MLP: hidden layers then a one-wide output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpWeights<T> {
    layers: Vec<DenseLayer<T>>,
    pub activation: Activation,
}

impl<T: Scalar> MlpWeights<T> {
    pub fn new(layers: Vec<DenseLayer<T>>) -> Result<Self, EngineError> {
        let last = layers.last().ok_or(EngineError::ShapeMismatch {
            what: "layer count",
            expected: 1,
            got: 0,
        })?;
        if last.out_dim != 1 {
            return Err(EngineError::ShapeMismatch {
                what: "output width",
                expected: 1,
                got: last.out_dim,
            });
        }
        for w in layers.windows(2) {
            if w[0].out_dim != w[1].in_dim {
                return Err(EngineError::ShapeMismatch {
                    what: "layer chaining",
                    expected: w[0].out_dim,
                    got: w[1].in_dim,
                });
            }
        }
        Ok(Self {
            layers,
            activation: Activation::default(),
        })
    }

    /// Seeded weights, uniform in `±1/sqrt(fan_in)`; biases in `±0.1`.
    pub fn random(input_dim: usize, hidden_dims: &[u32], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dims = vec![input_dim];
        dims.extend(hidden_dims.iter().map(|&d| d as usize));
        dims.push(1);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (i, o) = (w[0], w[1]);
                let scale = 1.0 / (i as f64).sqrt();
                let weights = (0..i * o)
                    .map(|_| T::of((rng.random::<f64>() * 2.0 - 1.0) * scale))
                    .collect();
                let bias = (0..o)
                    .map(|_| T::of((rng.random::<f64>() * 2.0 - 1.0) * 0.1))
                    .collect();
                DenseLayer::new(i, o, weights, bias).expect("shapes chain by construction")
            })
            .collect();
        Self::new(layers).expect("non-empty with unit output")
    }

    pub fn zeros(input_dim: usize, hidden_dims: &[u32]) -> Self {
        let mut dims = vec![input_dim];
        dims.extend(hidden_dims.iter().map(|&d| d as usize));
        dims.push(1);
        let layers = dims
            .windows(2)
            .map(|w| {
                DenseLayer::new(
                    w[0],
                    w[1],
                    vec![T::zero(); w[0] * w[1]],
                    vec![T::zero(); w[1]],
                )
                .unwrap()
            })
            .collect();
        Self::new(layers).unwrap()
    }

    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    /// Weights ready for repeated inference at `precision`.
    pub fn prepare(&self, precision: Precision) -> PreparedMlp<T> {
        let layers = match precision {
            Precision::Float32 => self.layers.clone(),
            Precision::Fixed16 => self.layers.iter().map(|l| l.map(quantize_q15)).collect(),
        };
        PreparedMlp {
            layers,
            activation: self.activation,
            precision,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedMlp<T> {
    layers: Vec<DenseLayer<T>>,
    activation: Activation,
    precision: Precision,
}

impl<T: Scalar> PreparedMlp<T> {
    /// CTR in the open interval (0, 1).
    pub fn forward(&self, input: &[T]) -> Result<T, EngineError> {
        let expected = self.layers[0].in_dim;
        if input.len() != expected {
            return Err(EngineError::ShapeMismatch {
                what: "input vector",
                expected,
                got: input.len(),
            });
        }
        let fixed = self.precision == Precision::Fixed16;
        let mut x: Vec<T> = if fixed {
            input.iter().copied().map(quantize_q15).collect()
        } else {
            input.to_vec()
        };
        let (last, hidden) = self.layers.split_last().expect("at least one layer");
        for layer in hidden {
            x = layer.forward(&x);
            for v in &mut x {
                *v = self.activation.apply(*v);
                if fixed {
                    *v = quantize_q15(*v);
                }
            }
        }
        let logit = last.forward(&x)[0];
        Ok(logistic(logit))
    }
}

/// Logistic squashing clamped so the result stays strictly inside (0, 1).
pub fn logistic<T: Scalar>(z: T) -> T {
    let y = T::one() / (T::one() + (-z).exp());
    let eps = T::epsilon();
    y.max(eps).min(T::one() - eps)
}

pub fn mlp_forward<T: Scalar>(
    weights: &MlpWeights<T>,
    input: &[T],
    precision: Precision,
) -> Result<T, EngineError> {
    weights.prepare(precision).forward(input)
}
