//! Fully connected ReLU networks with a two-way softmax output, trained by
//! full-batch gradient descent on mean cross-entropy.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::argmax_class;
use crate::rng::stream_rng;
use crate::{Error, Label, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `fan_in x fan_out`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnParams {
    pub step: f64,
    pub max_iter: usize,
    pub min_improvement: f64,
}

#[derive(Debug, Clone)]
pub struct NnTraining {
    pub model: Mlp,
    /// Loss of every accepted parameter set, starting from the initial one.
    pub loss_history: Vec<f64>,
}

/// Row-wise softmax, shifted by the row maximum.
pub fn softmax_rows(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.as_standard_layout().into_owned();
    let width = out.ncols().max(1);
    for row in out.as_slice_mut().expect("standard layout").chunks_exact_mut(width) {
        let m = row.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
        row.iter_mut().for_each(|v| *v = (*v - m).exp());
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    out
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init(input: usize, hidden: &[usize], seed: u64) -> Self {
        let mut rng = stream_rng(seed, 0x6e6e);
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(2);
        let layers = sizes
            .windows(2)
            .map(|p| {
                let limit = (6.0 / (p[0] + p[1]) as f64).sqrt();
                Layer {
                    w: Array2::from_shape_fn((p[0], p[1]), |_| rng.random_range(-limit..=limit)),
                    b: Array1::zeros(p[1]),
                }
            })
            .collect();
        Self { layers }
    }

    /// Pre-activations of the last layer plus the input of every hidden
    /// layer after the first (the first layer's input is `x` itself).
    fn forward(&self, x: ArrayView2<'_, f64>) -> (Vec<Array2<f64>>, Array2<f64>) {
        let mut inputs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = match inputs.last() {
                Some(a) => a.dot(&layer.w),
                None => x.dot(&layer.w),
            };
            z += &layer.b;
            if i + 1 == self.layers.len() {
                return (inputs, z);
            }
            z.mapv_inplace(|v| v.max(0.0));
            inputs.push(z);
        }
        unreachable!("a network has at least one layer")
    }

    pub fn probabilities(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        softmax_rows(&self.forward(x).1)
    }

    /// Mean cross-entropy and its gradient for each layer `(dW, db)`.
    pub fn loss_and_gradient(&self, x: ArrayView2<'_, f64>, y: &[Label]) -> (f64, Vec<Layer>) {
        let n = x.nrows() as f64;
        let (inputs, logits) = self.forward(x);
        let mut delta = softmax_rows(&logits);
        let mut loss = 0.0;
        for (row, l) in delta.as_slice_mut().expect("standard layout").chunks_exact_mut(2).zip(y) {
            let c = l.index();
            loss -= row[c].max(f64::MIN_POSITIVE).ln();
            row[c] -= 1.0;
        }
        loss /= n;
        delta.mapv_inplace(|v| v / n);
        let mut grads = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let gw = match i {
                0 => x.t().dot(&delta),
                _ => inputs[i - 1].t().dot(&delta),
            };
            let gb = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].w.t());
                // ReLU derivative: the layer input was clamped at zero.
                back.zip_mut_with(&inputs[i - 1], |d, v| {
                    if *v <= 0.0 {
                        *d = 0.0
                    }
                });
                delta = back;
            }
            grads.push(Layer { w: gw, b: gb });
        }
        grads.reverse();
        (loss, grads)
    }

    pub fn loss(&self, x: ArrayView2<'_, f64>, y: &[Label]) -> f64 {
        let p = self.probabilities(x);
        let s: f64 = p
            .as_slice()
            .expect("standard layout")
            .chunks_exact(2)
            .zip(y)
            .map(|(r, l)| -r[l.index()].max(f64::MIN_POSITIVE).ln())
            .sum();
        s / x.nrows() as f64
    }

    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Label {
        let row = x.insert_axis(Axis(0));
        let z = self.forward(row).1;
        argmax_class([z[[0, 0]], z[[0, 1]]])
    }

    pub fn predict_batch(&self, x: ArrayView2<'_, f64>) -> Vec<Label> {
        let z = self.forward(x).1;
        z.rows().into_iter().map(|r| argmax_class([r[0], r[1]])).collect()
    }

    fn step(&mut self, grads: &[Layer], step: f64) {
        for (l, g) in self.layers.iter_mut().zip(grads) {
            l.w.scaled_add(-step, &g.w);
            l.b.scaled_add(-step, &g.b);
        }
    }
}

/// Gradient descent from a seeded Glorot start. Training stops at
/// `max_iter`, when the loss drops by less than `min_improvement`, or when a
/// step raises the loss, in which case that step is discarded.
pub fn train_mlp(
    x: ArrayView2<'_, f64>,
    y: &[Label],
    hidden: &[usize],
    params: &NnParams,
    seed: u64,
) -> Result<NnTraining> {
    if x.nrows() == 0 || x.nrows() != y.len() {
        return Err(Error::Model("network needs a non-empty, consistent training set".into()));
    }
    if !(params.step > 0.0 && params.step.is_finite()) {
        return Err(Error::Model(format!("step must be positive, got {}", params.step)));
    }
    if hidden.contains(&0) {
        return Err(Error::Model("hidden layers must be non-empty".into()));
    }
    let mut model = Mlp::init(x.ncols(), hidden, seed);
    let mut history = Vec::new();
    let mut previous: Option<Mlp> = None;
    for iteration in 0..=params.max_iter {
        let (loss, grads) = model.loss_and_gradient(x, y);
        if !loss.is_finite() {
            return Err(Error::Divergence { iteration, loss });
        }
        if let Some(&last) = history.last() {
            if loss > last {
                model = previous.take().expect("a previous model exists after the first step");
                break;
            }
            history.push(loss);
            if last - loss < params.min_improvement {
                break;
            }
        } else {
            history.push(loss);
        }
        if iteration == params.max_iter {
            break;
        }
        previous = Some(model.clone());
        model.step(&grads, params.step);
    }
    Ok(NnTraining {
        model,
        loss_history: history,
    })
}
