//! Binary classifiers behind a single fit/predict contract.
//!
//! The catalogue has seventeen variants across five families. Every family is
//! implemented here from scratch; the only external numerics are `ndarray`
//! matrix products and a `nalgebra` Cholesky solve inside the discriminant.

mod ensemble;
mod knn;
mod lda;
mod nn;
mod svm;
mod tree;

pub use ensemble::{adaboost_alpha, ensemble_fit, EnsembleKind, EnsembleModel};
pub use knn::{knn_predict, KnnModel};
pub use lda::LdaModel;
pub use nn::{softmax_rows, train_mlp, Mlp, NnParams, NnTraining};
pub use svm::{svm_fit, Kernel, SvmModel, SvmSolution};
pub use tree::{tree_fit, Node, TreeModel};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::preprocess::LabeledExample;
use crate::{Error, Label, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Knn,
    Svm,
    Tree,
    Ensemble,
    Nn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "knn-fine")]
    KnnFine,
    #[serde(rename = "knn-medium")]
    KnnMedium,
    #[serde(rename = "knn-coarse")]
    KnnCoarse,
    #[serde(rename = "svm-linear")]
    SvmLinear,
    #[serde(rename = "svm-quadratic")]
    SvmQuadratic,
    #[serde(rename = "svm-cubic")]
    SvmCubic,
    #[serde(rename = "tree-fine")]
    TreeFine,
    #[serde(rename = "tree-coarse")]
    TreeCoarse,
    #[serde(rename = "ensemble-boosted-tree")]
    EnsembleBoostedTree,
    #[serde(rename = "ensemble-bagged-tree")]
    EnsembleBaggedTree,
    #[serde(rename = "ensemble-subspace-knn")]
    EnsembleSubspaceKnn,
    #[serde(rename = "ensemble-subspace-discriminant")]
    EnsembleSubspaceDiscriminant,
    #[serde(rename = "nn-narrow")]
    NnNarrow,
    #[serde(rename = "nn-medium")]
    NnMedium,
    #[serde(rename = "nn-wide")]
    NnWide,
    #[serde(rename = "nn-bilayered")]
    NnBilayered,
    #[serde(rename = "nn-trilayered")]
    NnTrilayered,
}

impl Variant {
    /// Full catalogue in reporting order.
    pub const CATALOG: [Variant; 17] = [
        Variant::KnnFine,
        Variant::KnnMedium,
        Variant::KnnCoarse,
        Variant::SvmLinear,
        Variant::SvmQuadratic,
        Variant::SvmCubic,
        Variant::TreeFine,
        Variant::TreeCoarse,
        Variant::EnsembleBoostedTree,
        Variant::EnsembleBaggedTree,
        Variant::EnsembleSubspaceKnn,
        Variant::EnsembleSubspaceDiscriminant,
        Variant::NnNarrow,
        Variant::NnMedium,
        Variant::NnWide,
        Variant::NnBilayered,
        Variant::NnTrilayered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::KnnFine => "knn-fine",
            Variant::KnnMedium => "knn-medium",
            Variant::KnnCoarse => "knn-coarse",
            Variant::SvmLinear => "svm-linear",
            Variant::SvmQuadratic => "svm-quadratic",
            Variant::SvmCubic => "svm-cubic",
            Variant::TreeFine => "tree-fine",
            Variant::TreeCoarse => "tree-coarse",
            Variant::EnsembleBoostedTree => "ensemble-boosted-tree",
            Variant::EnsembleBaggedTree => "ensemble-bagged-tree",
            Variant::EnsembleSubspaceKnn => "ensemble-subspace-knn",
            Variant::EnsembleSubspaceDiscriminant => "ensemble-subspace-discriminant",
            Variant::NnNarrow => "nn-narrow",
            Variant::NnMedium => "nn-medium",
            Variant::NnWide => "nn-wide",
            Variant::NnBilayered => "nn-bilayered",
            Variant::NnTrilayered => "nn-trilayered",
        }
    }

    pub fn family(self) -> Family {
        use Variant::*;
        match self {
            KnnFine | KnnMedium | KnnCoarse => Family::Knn,
            SvmLinear | SvmQuadratic | SvmCubic => Family::Svm,
            TreeFine | TreeCoarse => Family::Tree,
            EnsembleBoostedTree | EnsembleBaggedTree | EnsembleSubspaceKnn
            | EnsembleSubspaceDiscriminant => Family::Ensemble,
            NnNarrow | NnMedium | NnWide | NnBilayered | NnTrilayered => Family::Nn,
        }
    }

    /// Default hyperparameters for the variant.
    pub fn defaults(self) -> BTreeMap<String, f64> {
        use Variant::*;
        let pairs: &[(&str, f64)] = match self {
            KnnFine => &[("k", 1.0)],
            KnnMedium => &[("k", 10.0)],
            KnnCoarse => &[("k", 100.0)],
            SvmLinear | SvmQuadratic | SvmCubic => &[("c", 1.0), ("tol", 1e-3)],
            TreeFine => &[("max_splits", 100.0)],
            TreeCoarse => &[("max_splits", 4.0)],
            EnsembleBoostedTree => &[("n_learners", 30.0), ("max_splits", 10.0)],
            EnsembleBaggedTree => &[("n_learners", 30.0)],
            // subset_size 0 means ceil(d / 2).
            EnsembleSubspaceKnn | EnsembleSubspaceDiscriminant => {
                &[("n_learners", 30.0), ("subset_size", 0.0)]
            }
            NnNarrow | NnMedium | NnWide | NnBilayered | NnTrilayered => {
                &[("step", 0.01), ("max_iter", 2000.0), ("min_improvement", 1e-7)]
            }
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    pub fn hidden_layers(self) -> Option<&'static [usize]> {
        match self {
            Variant::NnNarrow => Some(&[10]),
            Variant::NnMedium => Some(&[25]),
            Variant::NnWide => Some(&[100]),
            Variant::NnBilayered => Some(&[10, 10]),
            Variant::NnTrilayered => Some(&[10, 10, 10]),
            _ => None,
        }
    }

    pub fn catalog_names() -> String {
        Variant::CATALOG
            .iter()
            .map(|v| v.name())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::CATALOG
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                Error::Input(format!(
                    "unknown model variant `{s}`; expected one of: {}",
                    Variant::catalog_names()
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub variant: Variant,
    pub hyperparameters: BTreeMap<String, f64>,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(variant: Variant, seed: u64) -> Self {
        Self {
            family: variant.family(),
            variant,
            hyperparameters: variant.defaults(),
            seed,
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.hyperparameters.insert(key.to_string(), value);
        self
    }

    pub fn param(&self, key: &str) -> Result<f64> {
        self.hyperparameters
            .get(key)
            .copied()
            .ok_or_else(|| Error::Model(format!("{} has no hyperparameter `{key}`", self.variant)))
    }

    fn count(&self, key: &str) -> Result<usize> {
        let v = self.param(key)?;
        if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0) {
            return Err(Error::Model(format!("`{key}` must be a non-negative integer, got {v}")));
        }
        Ok(v as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelState {
    Knn(KnnModel),
    Svm(SvmModel),
    Tree(TreeModel),
    Ensemble(EnsembleModel),
    Nn(Mlp),
}

/// Immutable fitted model; safe to share across threads for prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub feature_dim: usize,
    pub classes: Vec<Label>,
    pub state: ModelState,
}

/// Rows of `examples` stacked into an `n x d` matrix.
pub fn feature_matrix(examples: &[LabeledExample]) -> Array2<f64> {
    let d = examples.first().map_or(0, |e| e.features.len());
    let mut x = Array2::zeros((examples.len(), d));
    for (mut row, e) in x.rows_mut().into_iter().zip(examples) {
        row.iter_mut().zip(&e.features).for_each(|(r, v)| *r = *v);
    }
    x
}

pub fn labels(examples: &[LabeledExample]) -> Vec<Label> {
    examples.iter().map(|e| e.label).collect()
}

/// Majority over per-class weights; ties go to the earlier class.
pub(crate) fn argmax_class(weights: [f64; 2]) -> Label {
    if weights[1] > weights[0] {
        Label::Dehydrated
    } else {
        Label::Hydrated
    }
}

fn check_training_data(x: ArrayView2<'_, f64>, y: &[Label]) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::Model("empty training set".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::Input(format!(
            "{} feature rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("training features must be finite".into()));
    }
    Ok(())
}

pub fn fit(spec: &ModelSpec, x: ArrayView2<'_, f64>, y: &[Label]) -> Result<TrainedModel> {
    check_training_data(x, y)?;
    let state = match spec.variant.family() {
        Family::Knn => ModelState::Knn(KnnModel::fit(x, y, spec.count("k")?)?),
        Family::Svm => {
            let kernel = match spec.variant {
                Variant::SvmLinear => Kernel::Linear,
                Variant::SvmQuadratic => Kernel::Poly2,
                _ => Kernel::Poly3,
            };
            let (model, _) = svm_fit(x, y, kernel, spec.param("c")?, spec.param("tol")?)?;
            ModelState::Svm(model)
        }
        Family::Tree => ModelState::Tree(tree_fit(x, y, None, spec.count("max_splits")?)),
        Family::Ensemble => {
            let kind = match spec.variant {
                Variant::EnsembleBoostedTree => EnsembleKind::BoostedTree {
                    max_splits: spec.count("max_splits")?,
                },
                Variant::EnsembleBaggedTree => EnsembleKind::BaggedTree,
                Variant::EnsembleSubspaceKnn => EnsembleKind::SubspaceKnn {
                    subset_size: spec.count("subset_size")?,
                },
                _ => EnsembleKind::SubspaceDiscriminant {
                    subset_size: spec.count("subset_size")?,
                },
            };
            ModelState::Ensemble(ensemble_fit(x, y, kind, spec.count("n_learners")?, spec.seed)?)
        }
        Family::Nn => {
            let hidden = spec.variant.hidden_layers().expect("nn variant has layers");
            let params = NnParams {
                step: spec.param("step")?,
                max_iter: spec.count("max_iter")?,
                min_improvement: spec.param("min_improvement")?,
            };
            ModelState::Nn(train_mlp(x, y, hidden, &params, spec.seed)?.model)
        }
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        feature_dim: x.ncols(),
        classes: Label::ALL.to_vec(),
        state,
    })
}

impl TrainedModel {
    pub fn predict(&self, features: ArrayView1<'_, f64>) -> Result<Label> {
        if features.len() != self.feature_dim {
            return Err(Error::Input(format!(
                "model expects {} features, got {}",
                self.feature_dim,
                features.len()
            )));
        }
        Ok(match &self.state {
            ModelState::Knn(m) => m.predict(features),
            ModelState::Svm(m) => m.predict(features),
            ModelState::Tree(m) => m.predict(features),
            ModelState::Ensemble(m) => m.predict(features),
            ModelState::Nn(m) => m.predict(features),
        })
    }

    pub fn predict_slice(&self, features: &[f64]) -> Result<Label> {
        self.predict(ArrayView1::from(features))
    }

    /// Row-wise predictions, in input order.
    pub fn predict_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<Label>> {
        if x.ncols() != self.feature_dim {
            return Err(Error::Input(format!(
                "model expects {} features, got {}",
                self.feature_dim,
                x.ncols()
            )));
        }
        if let ModelState::Nn(m) = &self.state {
            return Ok(m.predict_batch(x));
        }
        x.rows().into_iter().map(|r| self.predict(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn catalog_round_trips_names() {
        for v in Variant::CATALOG {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            let json = serde_json::to_string(&v).unwrap();
            assert_eq!(json, format!("\"{}\"", v.name()));
        }
        assert!("knn-huge".parse::<Variant>().is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let x = array![[0.0, 1.0], [1.0, 0.0]];
        let y = [Label::Hydrated, Label::Dehydrated];
        let m = fit(&ModelSpec::new(Variant::KnnFine, 0), x.view(), &y).unwrap();
        assert!(matches!(m.predict_slice(&[1.0]), Err(Error::Input(_))));
        assert!(matches!(
            m.predict_batch(array![[1.0, 2.0, 3.0]].view()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn tree_labels_two_points() {
        let x = array![[0.0], [10.0]];
        let y = [Label::Hydrated, Label::Dehydrated];
        let m = fit(&ModelSpec::new(Variant::TreeFine, 0), x.view(), &y).unwrap();
        assert_eq!(m.predict_batch(x.view()).unwrap(), y);
    }

    #[test]
    fn empty_training_set_is_a_model_error() {
        let x = Array2::<f64>::zeros((0, 3));
        assert!(matches!(
            fit(&ModelSpec::new(Variant::KnnFine, 0), x.view(), &[]),
            Err(Error::Model(_))
        ));
    }
}
