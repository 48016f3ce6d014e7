use std::cmp::Ordering;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::argmax_class;
use crate::{Error, Label, Result};

/// Stored training set plus `k`; Euclidean metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub x: Array2<f64>,
    pub y: Vec<Label>,
    pub k: usize,
}

impl KnnModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[Label], k: usize) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Model("k-NN needs a non-empty training set".into()));
        }
        if k == 0 || k > x.nrows() {
            return Err(Error::Model(format!(
                "k = {k} must lie in 1..={}",
                x.nrows()
            )));
        }
        Ok(Self {
            x: x.to_owned(),
            y: y.to_vec(),
            k,
        })
    }

    pub fn predict(&self, query: ArrayView1<'_, f64>) -> Label {
        vote(self.x.view(), &self.y, query, self.k)
    }
}

/// Majority label among the `k` nearest training rows. Distance ties go to
/// the lower row index; vote ties go to the earlier class.
pub fn knn_predict(
    x: ArrayView2<'_, f64>,
    y: &[Label],
    query: &[f64],
    k: usize,
) -> Result<Label> {
    if x.nrows() == 0 {
        return Err(Error::Model("k-NN needs a non-empty training set".into()));
    }
    if k == 0 || k > x.nrows() {
        return Err(Error::Model(format!("k = {k} must lie in 1..={}", x.nrows())));
    }
    if query.len() != x.ncols() {
        return Err(Error::Input(format!(
            "query has {} features, training rows have {}",
            query.len(),
            x.ncols()
        )));
    }
    Ok(vote(x, y, ArrayView1::from(query), k))
}

fn vote(x: ArrayView2<'_, f64>, y: &[Label], query: ArrayView1<'_, f64>, k: usize) -> Label {
    let mut dist: Vec<(f64, usize)> = x
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let d = row
                .iter()
                .zip(query.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            (d, i)
        })
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
    };
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, cmp);
    }
    let mut votes = [0.0; 2];
    for &(_, i) in &dist[..k] {
        votes[y[i].index()] += 1.0;
    }
    argmax_class(votes)
}
