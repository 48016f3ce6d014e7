use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::LabeledExample;

/// Per-feature z-scoring with statistics from the fitting rows only.
/// Constant features (population sd = 0) are centred but not scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit_matrix(x: ArrayView2<'_, f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mean: Vec<f64> = x.axis_iter(Axis(1)).map(|c| c.sum() / n).collect();
        let sd = x
            .axis_iter(Axis(1))
            .zip(&mean)
            .map(|(c, m)| (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        Self { mean, sd }
    }

    pub fn fit(examples: &[LabeledExample]) -> Self {
        Self::fit_matrix(crate::classifiers::feature_matrix(examples).view())
    }

    pub fn transform_value(&self, j: usize, v: f64) -> f64 {
        let centred = v - self.mean[j];
        if self.sd[j] > 0.0 {
            centred / self.sd[j]
        } else {
            centred
        }
    }

    pub fn apply_matrix(&self, x: &mut Array2<f64>) {
        for mut row in x.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.transform_value(j, *v);
            }
        }
    }

    pub fn apply(&self, examples: &[LabeledExample]) -> Vec<LabeledExample> {
        examples
            .iter()
            .map(|e| LabeledExample {
                features: e
                    .features
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| self.transform_value(j, v))
                    .collect(),
                ..e.clone()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Label;

    fn ex(features: Vec<f64>) -> LabeledExample {
        LabeledExample {
            features,
            label: Label::Hydrated,
            subject_id: 0,
            session_id: 0,
            window_index: 0,
        }
    }

    #[test]
    fn fit_then_apply_gives_zero_mean_unit_sd() {
        let data: Vec<_> = (0..50)
            .map(|i| ex(vec![i as f64, (i * i) as f64 * 0.1 - 3.0, 7.0]))
            .collect();
        let st = Standardizer::fit(&data);
        let z = st.apply(&data);
        let refit = Standardizer::fit(&z);
        assert!(refit.mean.iter().all(|m| m.abs() < 1e-9));
        assert!((refit.sd[0] - 1.0).abs() < 1e-9 && (refit.sd[1] - 1.0).abs() < 1e-9);
        // Constant feature is mapped to 0.
        assert!(z.iter().all(|e| e.features[2] == 0.0));
    }

    #[test]
    fn apply_uses_given_statistics() {
        let st = Standardizer {
            mean: vec![2.0],
            sd: vec![2.0],
        };
        assert_eq!(st.apply(&[ex(vec![4.0])])[0].features[0], 1.0);
    }
}
