//! Gradient-descent training of small dense classifiers.

use rand::seq::SliceRandom;
use rand::Rng;

use super::network::{Activation, Layer, Network};
use super::{Classifier, OracleError};
use crate::data::LabeledDataset;
use crate::stable::StreamRng;
use crate::{Bounds, Oracle, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Width of the single ReLU hidden layer; `None` trains softmax
    /// regression.
    pub hidden: Option<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: Some(32),
            epochs: 30,
            learning_rate: 0.05,
            batch_size: 32,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel<T> {
    pub network: Network<T>,
    pub train_accuracy: f64,
}

impl<T: Scalar> TrainedModel<T> {
    pub fn into_oracle(self, bounds: Bounds<T>) -> Oracle<T> {
        Oracle::new(self.network, bounds)
    }
}

struct Dense {
    rows: usize,
    cols: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Dense {
    fn init(rows: usize, cols: usize, rng: &mut StreamRng) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        Self {
            rows,
            cols,
            w: (0..rows * cols)
                .map(|_| rng.random_range(-limit..limit))
                .collect(),
            b: vec![0.0; rows],
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.w
                .chunks_exact(self.cols)
                .zip(&self.b)
                .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (w, x)| acc + w * x)),
        );
    }
}

fn softmax_grad(scores: &[f64], label: usize, grad: &mut Vec<f64>) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    grad.clear();
    grad.extend(scores.iter().map(|s| (s - max).exp()));
    let z: f64 = grad.iter().sum();
    for g in grad.iter_mut() {
        *g /= z;
    }
    grad[label] -= 1.0;
}

/// Fits a softmax-regression or one-hidden-layer ReLU network by minibatch
/// gradient descent on the cross-entropy loss.
///
/// Features are centred per coordinate and divided by one global standard
/// deviation during training; that affine map is folded back into the first
/// layer, so the returned network consumes raw inputs.
pub fn train_toy_classifier<T: Scalar>(
    dataset: &LabeledDataset<T>,
    config: &TrainConfig,
    rng: &mut StreamRng,
) -> Result<TrainedModel<T>, OracleError> {
    let n = dataset.len();
    if n == 0 {
        return Err(OracleError::EmptyDataset);
    }
    let dim = dataset.dim();
    let classes = dataset.num_classes;
    if dataset.points.iter().any(|p| p.dim() != dim) {
        return Err(OracleError::Inconsistent("mixed point dimensions".into()));
    }
    if dataset.points.iter().any(|p| !p.is_finite()) {
        return Err(OracleError::NonFinite);
    }
    if dataset.labels.iter().any(|l| l.0 >= classes) {
        return Err(OracleError::Inconsistent(
            "label exceeds class count".into(),
        ));
    }
    let first = dataset.labels[0];
    if classes < 2 || dataset.labels.iter().all(|&l| l == first) {
        return Err(OracleError::DegenerateLabels);
    }

    let raw: Vec<Vec<f64>> = dataset.points.iter().map(|p| p.to_f64_vec()).collect();
    let mut mean = vec![0.0; dim];
    for p in &raw {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let var = raw
        .iter()
        .flat_map(|p| p.iter().zip(&mean).map(|(v, m)| (v - m) * (v - m)))
        .sum::<f64>()
        / (n * dim) as f64;
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    let xs: Vec<Vec<f64>> = raw
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(v, m)| (v - m) / scale).collect())
        .collect();
    let ys: Vec<usize> = dataset.labels.iter().map(|l| l.0).collect();

    let mut layers = match config.hidden {
        Some(h) => vec![Dense::init(h, dim, rng), Dense::init(classes, h, rng)],
        None => vec![Dense::init(classes, dim, rng)],
    };
    let depth = layers.len();
    let mut order: Vec<usize> = (0..n).collect();
    let batch = config.batch_size.max(1);

    let mut acts: Vec<Vec<f64>> = vec![Vec::new(); depth];
    let mut delta = Vec::new();
    let mut grads_w: Vec<Vec<f64>> = layers.iter().map(|l| vec![0.0; l.w.len()]).collect();
    let mut grads_b: Vec<Vec<f64>> = layers.iter().map(|l| vec![0.0; l.b.len()]).collect();

    for _ in 0..config.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(batch) {
            grads_w
                .iter_mut()
                .for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
            grads_b
                .iter_mut()
                .for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
            for &i in chunk {
                let x = &xs[i];
                layers[0].forward(x, &mut acts[0]);
                if depth == 2 {
                    acts[0].iter_mut().for_each(|v| *v = v.max(0.0));
                    let (h, out) = acts.split_at_mut(1);
                    layers[1].forward(&h[0], &mut out[0]);
                }
                softmax_grad(&acts[depth - 1], ys[i], &mut delta);
                for li in (0..depth).rev() {
                    let input: &[f64] = if li == 0 { x } else { &acts[li - 1] };
                    let l = &layers[li];
                    for r in 0..l.rows {
                        let d = delta[r];
                        if d == 0.0 {
                            continue;
                        }
                        grads_b[li][r] += d;
                        let g = &mut grads_w[li][r * l.cols..(r + 1) * l.cols];
                        for (gw, &v) in g.iter_mut().zip(input) {
                            *gw += d * v;
                        }
                    }
                    if li > 0 {
                        let mut back = vec![0.0; l.cols];
                        for (r, &d) in delta.iter().enumerate() {
                            for (bk, &w) in back.iter_mut().zip(&l.w[r * l.cols..(r + 1) * l.cols])
                            {
                                *bk += d * w;
                            }
                        }
                        // ReLU derivative of the hidden layer.
                        for (bk, &a) in back.iter_mut().zip(&acts[li - 1]) {
                            if a <= 0.0 {
                                *bk = 0.0;
                            }
                        }
                        delta = back;
                    }
                }
            }
            let step = config.learning_rate / chunk.len() as f64;
            for (li, l) in layers.iter_mut().enumerate() {
                for (w, g) in l.w.iter_mut().zip(&grads_w[li]) {
                    *w -= step * g;
                }
                for (b, g) in l.b.iter_mut().zip(&grads_b[li]) {
                    *b -= step * g;
                }
            }
        }
    }

    // Fold the input standardisation into the first layer.
    {
        let first = &mut layers[0];
        for r in 0..first.rows {
            let row = &mut first.w[r * first.cols..(r + 1) * first.cols];
            let mut shift = 0.0;
            for (w, m) in row.iter_mut().zip(&mean) {
                *w /= scale;
                shift += *w * m;
            }
            first.b[r] -= shift;
        }
    }

    let conv = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
    let built: Vec<Layer<T>> = layers
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let act = if i + 1 < depth {
                Activation::Relu
            } else {
                Activation::Identity
            };
            Layer::new(l.rows, l.cols, conv(&l.w), conv(&l.b), act)
        })
        .collect::<Result<_, _>>()?;
    let network = Network::new(built)?;
    let correct = dataset
        .points
        .iter()
        .zip(&dataset.labels)
        .filter(|(p, l)| network.decide(p) == **l)
        .count();
    Ok(TrainedModel {
        network,
        train_accuracy: correct as f64 / n as f64,
    })
}
