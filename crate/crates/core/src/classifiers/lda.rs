//! Two-class linear discriminant with a shared covariance.

use nalgebra::{DMatrix, DVector};
use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::{Error, Label, Result};

const RIDGE: f64 = 1e-6;

/// Decision `w . x + b > 0` selects `Dehydrated`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LdaModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[Label]) -> Result<Self> {
        let (n, d) = x.dim();
        let mut count = [0usize; 2];
        let mut mean = [vec![0.0; d], vec![0.0; d]];
        for (row, l) in x.rows().into_iter().zip(y) {
            let c = l.index();
            count[c] += 1;
            mean[c].iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        if count[0] == 0 || count[1] == 0 {
            return Err(Error::DegenerateData(
                "discriminant needs both classes in the training set".into(),
            ));
        }
        for c in 0..2 {
            mean[c].iter_mut().for_each(|m| *m /= count[c] as f64);
        }
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for (row, l) in x.rows().into_iter().zip(y) {
            let mu = &mean[l.index()];
            let r = DVector::from_iterator(d, row.iter().zip(mu).map(|(v, m)| v - m));
            cov.ger(1.0, &r, &r, 1.0);
        }
        let dof = (n.saturating_sub(2)).max(1) as f64;
        cov /= dof;
        let scale = (cov.trace() / d.max(1) as f64).max(1.0);
        for i in 0..d {
            cov[(i, i)] += RIDGE * scale;
        }
        let diff = DVector::from_iterator(d, mean[1].iter().zip(&mean[0]).map(|(a, b)| a - b));
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::DegenerateData("pooled covariance is not positive definite".into()))?;
        let w = chol.solve(&diff);
        let mid: f64 = (0..d).map(|i| w[i] * 0.5 * (mean[0][i] + mean[1][i])).sum();
        let b = -mid + (count[1] as f64 / count[0] as f64).ln();
        Ok(Self {
            w: w.iter().copied().collect(),
            b,
        })
    }

    pub fn decision(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b
    }

    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Label {
        if self.decision(x) > 0.0 {
            Label::Dehydrated
        } else {
            Label::Hydrated
        }
    }
}
