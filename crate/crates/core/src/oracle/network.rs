//! Dense feed-forward networks: the built-in desk-scale classifiers.

use serde::{Deserialize, Serialize};

use super::{Classifier, Label, OracleError};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    pub fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            _ => None,
        }
    }

    #[inline]
    fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Activation::Identity => v,
            Activation::Relu => v.max(T::zero()),
        }
    }
}

/// `activation(W x + b)` with `W` stored row-major, `rows x cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> Layer<T> {
    pub fn new(
        rows: usize,
        cols: usize,
        weights: Vec<T>,
        bias: Vec<T>,
        activation: Activation,
    ) -> Result<Self, OracleError> {
        if rows == 0 || cols == 0 || weights.len() != rows * cols || bias.len() != rows {
            return Err(OracleError::LayerShape {
                rows,
                cols,
                weights: weights.len(),
                bias: bias.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            weights,
            bias,
            activation,
        })
    }

    pub fn forward(&self, input: &[T]) -> Vec<T> {
        debug_assert_eq!(input.len(), self.cols);
        self.weights
            .chunks_exact(self.cols)
            .zip(&self.bias)
            .map(|(row, &b)| {
                let z = row.iter().zip(input).fold(b, |acc, (&w, &x)| acc + w * x);
                self.activation.apply(z)
            })
            .collect()
    }
}

/// Chain of dense layers. The last layer's outputs are class scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    layers: Vec<Layer<T>>,
}

impl<T: Scalar> Network<T> {
    pub fn new(layers: Vec<Layer<T>>) -> Result<Self, OracleError> {
        if layers.is_empty() {
            return Err(OracleError::NoLayers);
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].rows != pair[1].cols {
                return Err(OracleError::DimensionChain {
                    layer: i + 1,
                    expected: pair[0].rows,
                    found: pair[1].cols,
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn scores(&self, x: &[T]) -> Vec<T> {
        let mut h = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            h = layer.forward(&h);
        }
        h
    }

    /// Converts every parameter to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::lit(x.as_f64())).collect::<Vec<U>>();
        Network {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    rows: l.rows,
                    cols: l.cols,
                    weights: conv(&l.weights),
                    bias: conv(&l.bias),
                    activation: l.activation,
                })
                .collect(),
        }
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax<T: Scalar>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl<T: Scalar> Classifier<T> for Network<T> {
    fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    fn num_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].rows
    }

    fn decide(&self, x: &[T]) -> Label {
        Label(argmax(&self.scores(x)))
    }
}
