//! Decision-only classifier access with exact query accounting.
//!
//! An [`Oracle`] answers one question, "which class is this input?", and
//! counts every answer. Scores never leave it, so an attack that only holds
//! an `Oracle` cannot use confidences or gradients.

mod model_file;
mod network;
mod train;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Bounds, Scalar};

pub use model_file::{
    decode as decode_model, encode as encode_model, save as save_model, MAGIC, VERSION,
};
pub use network::{argmax, Activation, Layer, Network};
pub use train::{train_toy_classifier, TrainConfig, TrainedModel};

/// Class index returned by a classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub usize);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("input has dimension {found}, oracle expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("coordinate {index} = {value} is outside the input bounds")]
    OutOfBounds { index: usize, value: f64 },
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("malformed model file at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("layer {layer} expects {found} inputs but previous layer produces {expected}")]
    DimensionChain {
        layer: usize,
        expected: usize,
        found: usize,
    },
    #[error("layer of {rows}x{cols} has {weights} weights and {bias} biases")]
    LayerShape {
        rows: usize,
        cols: usize,
        weights: usize,
        bias: usize,
    },
    #[error("network has no layers")]
    NoLayers,
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training set contains non-finite features")]
    NonFinite,
    #[error("training set has a single class")]
    DegenerateLabels,
    #[error("training set is inconsistent: {0}")]
    Inconsistent(String),
}

/// Anything that maps an input to a class label.
pub trait Classifier<T>: Send + Sync {
    fn input_dim(&self) -> usize;
    fn num_classes(&self) -> usize;
    /// Must be a pure function of `x`.
    fn decide(&self, x: &[T]) -> Label;
}

/// Counted, decision-only handle to a classifier.
///
/// `Clone` copies the counter; [`Oracle::fork`] starts a fresh one for a
/// worker whose queries are tallied separately.
#[derive(Clone)]
pub struct Oracle<T> {
    model: Arc<dyn Classifier<T>>,
    bounds: Bounds<T>,
    queries: u64,
}

impl<T: Scalar> Oracle<T> {
    pub fn new(model: impl Classifier<T> + 'static, bounds: Bounds<T>) -> Self {
        Self {
            model: Arc::new(model),
            bounds,
            queries: 0,
        }
    }

    /// Class of `x`. Every successful call costs exactly one query; inputs
    /// rejected by validation are not forwarded and not counted.
    pub fn predict(&mut self, x: &[T]) -> Result<Label, OracleError> {
        let expected = self.model.input_dim();
        if x.len() != expected {
            return Err(OracleError::DimensionMismatch {
                expected,
                found: x.len(),
            });
        }
        if let Some(index) = x.iter().position(|&v| !self.bounds.contains(v)) {
            return Err(OracleError::OutOfBounds {
                index,
                value: x[index].as_f64(),
            });
        }
        self.queries += 1;
        Ok(self.model.decide(x))
    }

    pub fn query_count(&self) -> u64 {
        self.queries
    }

    pub fn input_dim(&self) -> usize {
        self.model.input_dim()
    }

    pub fn num_classes(&self) -> usize {
        self.model.num_classes()
    }

    pub fn bounds(&self) -> Bounds<T> {
        self.bounds
    }

    /// Same classifier, counter reset to zero.
    pub fn fork(&self) -> Self {
        Self {
            model: Arc::clone(&self.model),
            bounds: self.bounds,
            queries: 0,
        }
    }
}

impl<T> std::fmt::Debug for Oracle<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Oracle")
            .field("queries", &self.queries)
            .finish_non_exhaustive()
    }
}

/// Reads a model file and wraps it in a fresh oracle.
pub fn load_model<T: Scalar>(
    path: impl AsRef<Path>,
    bounds: Bounds<T>,
) -> Result<Oracle<T>, OracleError> {
    Ok(Oracle::new(model_file::load::<T>(path)?, bounds))
}
