//! Soft-margin SVM trained by sequential minimal optimisation.
//!
//! Working-pair selection uses the maximal violating index `i` and the
//! second-order choice of `j` (Fan, Chen and Lin); the pair update and the
//! bias computation follow the LIBSVM formulation. The kernel matrix is
//! precomputed, which is fine at the few-thousand-row scale used here.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::{Error, Label, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `u . v`
    Linear,
    /// `(1 + u . v)^2`
    Poly2,
    /// `(1 + u . v)^3`
    Poly3,
}

impl Kernel {
    fn of_dot(self, dot: f64) -> f64 {
        match self {
            Kernel::Linear => dot,
            Kernel::Poly2 => (1.0 + dot).powi(2),
            Kernel::Poly3 => (1.0 + dot).powi(3),
        }
    }

    pub fn eval(self, u: ArrayView1<'_, f64>, v: ArrayView1<'_, f64>) -> f64 {
        self.of_dot(u.dot(&v))
    }
}

/// Support vectors with their multipliers; `f(x) = sum alpha_i y_i K(x_i, x) + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub support: Array2<f64>,
    pub alpha: Vec<f64>,
    /// `+1` (dehydrated) or `-1` (hydrated) per support vector.
    pub y: Vec<f64>,
    pub bias: f64,
}

impl SvmModel {
    pub fn decision(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.support
            .rows()
            .into_iter()
            .zip(self.alpha.iter().zip(&self.y))
            .map(|(sv, (a, y))| a * y * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// `f(x) > 0` is the positive (dehydrated) class; zero goes to the first class.
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Label {
        if self.decision(x) > 0.0 {
            Label::Dehydrated
        } else {
            Label::Hydrated
        }
    }
}

/// Full dual solution over all training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmSolution {
    pub alpha: Vec<f64>,
    pub y: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final maximal KKT violation `m(alpha) - M(alpha)`.
    pub gap: f64,
}

impl SvmSolution {
    pub fn equality_residual(&self) -> f64 {
        self.alpha.iter().zip(&self.y).map(|(a, y)| a * y).sum()
    }
}

pub fn svm_fit(
    x: ArrayView2<'_, f64>,
    labels: &[Label],
    kernel: Kernel,
    c: f64,
    tol: f64,
) -> Result<(SvmModel, SvmSolution)> {
    let n = x.nrows();
    if n != labels.len() {
        return Err(Error::Input("feature/label length mismatch".into()));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Model(format!("box constraint c must be > 0, got {c}")));
    }
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::DegenerateData(
            "SVM training needs at least one example of each class".into(),
        ));
    }
    let mut k = x.dot(&x.t());
    k.mapv_inplace(|d| kernel.of_dot(d));

    let solution = smo(&k, &y, c, tol);
    if !solution.converged {
        log::warn!(
            "SMO stopped after {} iterations with KKT gap {:.3e}",
            solution.iterations,
            solution.gap
        );
    }
    let sv: Vec<usize> = (0..n).filter(|&i| solution.alpha[i] > 0.0).collect();
    let model = SvmModel {
        kernel,
        c,
        support: x.select(Axis(0), &sv),
        alpha: sv.iter().map(|&i| solution.alpha[i]).collect(),
        y: sv.iter().map(|&i| y[i]).collect(),
        bias: solution.bias,
    };
    Ok((model, solution))
}

fn smo(k: &Array2<f64>, y: &[f64], c: f64, eps: f64) -> SvmSolution {
    let n = y.len();
    let max_iter = (100 * n).max(1_000_000);
    // K is symmetric, so row i doubles as column i and every inner loop
    // below walks contiguous memory.
    let k = k.as_standard_layout();
    let k = k.as_slice().expect("standard layout");
    let row = |i: usize| &k[i * n..(i + 1) * n];
    let diag: Vec<f64> = (0..n).map(|i| k[i * n + i]).collect();
    let mut alpha = vec![0.0; n];
    // y_t times the gradient of 1/2 a'Qa - e'a, Q_ij = y_i y_j K_ij. Since
    // y_t is +-1 this is exactly the gradient with its sign folded in.
    let mut ygrad: Vec<f64> = y.iter().map(|v| -v).collect();
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);
    let mut up: Vec<bool> = (0..n).map(|t| in_up(0.0, y[t])).collect();
    let mut low: Vec<bool> = (0..n).map(|t| in_low(0.0, y[t])).collect();

    let select_up = |ygrad: &[f64], up: &[bool]| {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if up[t] && -ygrad[t] > gmax {
                gmax = -ygrad[t];
                i_sel = Some(t);
            }
        }
        (gmax, i_sel)
    };
    let (mut gmax, mut i_sel) = select_up(&ygrad, &up);
    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    let mut converged = false;
    while iterations < max_iter {
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        if let Some(i) = i_sel {
            let ki = row(i);
            for t in 0..n {
                if !low[t] {
                    continue;
                }
                let ygt = ygrad[t];
                gmax2 = gmax2.max(ygt);
                let b = gmax + ygt;
                if b > 0.0 {
                    let mut a = diag[i] + diag[t] - 2.0 * ki[t];
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let obj = -(b * b) / a;
                    if obj < best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        gap = gmax + gmax2;
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            converged = true;
            break;
        };
        if gap < eps {
            converged = true;
            break;
        }
        iterations += 1;

        let (ki, kj) = (row(i), row(j));
        let quad = (diag[i] + diag[j] - 2.0 * ki[j]).max(TAU);
        let (gi, gj) = (y[i] * ygrad[i], y[j] * ygrad[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let delta = (-gi - gj) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (gi - gj) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        for t in [i, j] {
            up[t] = in_up(alpha[t], y[t]);
            low[t] = in_low(alpha[t], y[t]);
        }
        // Gradient update fused with the next working-set selection.
        let (ci, cj) = (y[i] * (ai - old_i), y[j] * (aj - old_j));
        gmax = f64::NEG_INFINITY;
        i_sel = None;
        for t in 0..n {
            let g = ygrad[t] + (ci * ki[t] + cj * kj[t]);
            ygrad[t] = g;
            if up[t] && -g > gmax {
                gmax = -g;
                i_sel = Some(t);
            }
        }
    }
    let grad: Vec<f64> = ygrad.iter().zip(y).map(|(g, v)| g * v).collect();

    SvmSolution {
        bias: -rho(&alpha, &grad, y, c),
        alpha,
        y: y.to_vec(),
        iterations,
        converged,
        gap,
    }
}

fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        0.5 * (ub + lb)
    }
}
