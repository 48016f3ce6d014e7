//! Boosted, bagged and random-subspace ensembles.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax_class, tree_fit, KnnModel, LdaModel, TreeModel};
use crate::rng::stream_rng;
use crate::{Error, Label, Result};

const BOOST_RETRIES: usize = 10;
const MIN_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnsembleKind {
    /// AdaBoost.M1 over trees limited to `max_splits`.
    BoostedTree { max_splits: usize },
    /// Bootstrap-aggregated full-depth trees.
    BaggedTree,
    /// 1-NN on random feature subsets; `subset_size` 0 means `ceil(d / 2)`.
    SubspaceKnn { subset_size: usize },
    /// Linear discriminant on random feature subsets.
    SubspaceDiscriminant { subset_size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaseLearner {
    Tree(TreeModel),
    Knn { features: Vec<usize>, model: KnnModel },
    Lda { features: Vec<usize>, model: LdaModel },
}

impl BaseLearner {
    fn predict(&self, x: ArrayView1<'_, f64>) -> Label {
        match self {
            BaseLearner::Tree(t) => t.predict(x),
            BaseLearner::Knn { features, model } => model.predict(select(x, features).view()),
            BaseLearner::Lda { features, model } => model.predict(select(x, features).view()),
        }
    }
}

fn select(x: ArrayView1<'_, f64>, features: &[usize]) -> ndarray::Array1<f64> {
    features.iter().map(|&f| x[f]).collect()
}

/// Weighted vote of base learners; ties go to `Hydrated`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub kind: EnsembleKind,
    pub learners: Vec<BaseLearner>,
    pub weights: Vec<f64>,
}

impl EnsembleModel {
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Label {
        let mut votes = [0.0; 2];
        for (l, w) in self.learners.iter().zip(&self.weights) {
            votes[l.predict(x).index()] += w;
        }
        argmax_class(votes)
    }
}

/// Learner weight `0.5 ln((1 - eps) / eps)`.
pub fn adaboost_alpha(eps: f64) -> f64 {
    0.5 * ((1.0 - eps) / eps).ln()
}

/// Draws `n` row indices with probability proportional to `w`.
fn weighted_bootstrap(w: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(w.len());
    let mut acc = 0.0;
    for v in w {
        acc += v;
        cdf.push(acc);
    }
    (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            cdf.partition_point(|c| *c <= u).min(w.len() - 1)
        })
        .collect()
}

fn rows(x: ArrayView2<'_, f64>, idx: &[usize]) -> Array2<f64> {
    x.select(Axis(0), idx)
}

fn weighted_error(tree: &TreeModel, x: ArrayView2<'_, f64>, y: &[Label], w: &[f64]) -> (f64, Vec<bool>) {
    let wrong: Vec<bool> = x
        .rows()
        .into_iter()
        .zip(y)
        .map(|(r, l)| tree.predict(r) != *l)
        .collect();
    let eps = wrong.iter().zip(w).filter(|(m, _)| **m).map(|(_, w)| w).sum();
    (eps, wrong)
}

fn boost(
    x: ArrayView2<'_, f64>,
    y: &[Label],
    max_splits: usize,
    n_learners: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<BaseLearner>, Vec<f64>)> {
    let n = y.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut learners = Vec::new();
    let mut alphas = Vec::new();
    for round in 0..n_learners {
        let mut tree = tree_fit(x, y, Some(&w), max_splits);
        let (mut eps, mut wrong) = weighted_error(&tree, x, y, &w);
        let mut retries = 0;
        while eps >= 0.5 && retries < BOOST_RETRIES {
            let idx = weighted_bootstrap(&w, n, rng);
            let ys: Vec<Label> = idx.iter().map(|&i| y[i]).collect();
            tree = tree_fit(rows(x, &idx).view(), &ys, None, max_splits);
            (eps, wrong) = weighted_error(&tree, x, y, &w);
            retries += 1;
        }
        if eps >= 0.5 {
            if round == 0 {
                return Err(Error::BoostingFailure(format!(
                    "first weak learner has weighted error {eps:.4} after {BOOST_RETRIES} resamples"
                )));
            }
            log::debug!("boosting stopped at round {round}: weighted error {eps:.4}");
            break;
        }
        let perfect = eps <= 0.0;
        let alpha = adaboost_alpha(eps.max(MIN_EPS));
        learners.push(BaseLearner::Tree(tree));
        alphas.push(alpha);
        if perfect {
            break;
        }
        let up = alpha.exp();
        let down = (-alpha).exp();
        for (wi, m) in w.iter_mut().zip(&wrong) {
            *wi *= if *m { up } else { down };
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
    }
    Ok((learners, alphas))
}

fn subset_len(subset_size: usize, d: usize) -> Result<usize> {
    let m = if subset_size == 0 { d.div_ceil(2) } else { subset_size };
    if m == 0 || m > d {
        return Err(Error::Model(format!("subset size {m} must lie in 1..={d}")));
    }
    Ok(m)
}

pub fn ensemble_fit(
    x: ArrayView2<'_, f64>,
    y: &[Label],
    kind: EnsembleKind,
    n_learners: usize,
    seed: u64,
) -> Result<EnsembleModel> {
    if n_learners == 0 {
        return Err(Error::Model("ensemble needs at least one learner".into()));
    }
    if y.is_empty() || x.nrows() != y.len() {
        return Err(Error::Model("ensemble needs a non-empty, consistent training set".into()));
    }
    let mut rng = stream_rng(seed, 0x656e_7365);
    let n = y.len();
    let d = x.ncols();
    let (learners, weights) = match kind {
        EnsembleKind::BoostedTree { max_splits } => boost(x, y, max_splits, n_learners, &mut rng)?,
        EnsembleKind::BaggedTree => {
            let learners = (0..n_learners)
                .map(|_| {
                    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                    let ys: Vec<Label> = idx.iter().map(|&i| y[i]).collect();
                    BaseLearner::Tree(tree_fit(rows(x, &idx).view(), &ys, None, usize::MAX))
                })
                .collect();
            (learners, vec![1.0; n_learners])
        }
        EnsembleKind::SubspaceKnn { subset_size } | EnsembleKind::SubspaceDiscriminant { subset_size } => {
            let m = subset_len(subset_size, d)?;
            let mut learners = Vec::with_capacity(n_learners);
            for _ in 0..n_learners {
                let mut features = sample(&mut rng, d, m).into_vec();
                features.sort_unstable();
                let xs = x.select(Axis(1), &features);
                learners.push(match kind {
                    EnsembleKind::SubspaceKnn { .. } => BaseLearner::Knn {
                        model: KnnModel::fit(xs.view(), y, 1)?,
                        features,
                    },
                    _ => BaseLearner::Lda {
                        model: LdaModel::fit(xs.view(), y)?,
                        features,
                    },
                });
            }
            (learners, vec![1.0; n_learners])
        }
    };
    Ok(EnsembleModel {
        kind,
        learners,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use Label::{Dehydrated as B, Hydrated as A};

    fn blobs(n: usize, d: usize, gap: f64, seed: u64) -> (Array2<f64>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<Label> = (0..n).map(|i| if i % 2 == 0 { A } else { B }).collect();
        let x = Array2::from_shape_fn((n, d), |(i, _)| {
            rng.random_range(-1.0..1.0) + if y[i] == B { gap } else { 0.0 }
        });
        (x, y)
    }

    fn accuracy(m: &EnsembleModel, x: &Array2<f64>, y: &[Label]) -> f64 {
        let hits = x.rows().into_iter().zip(y).filter(|(r, l)| m.predict(*r) == **l).count();
        hits as f64 / y.len() as f64
    }

    #[test]
    fn alpha_closed_form() {
        assert!((adaboost_alpha(0.25) - 0.549_306_144_334_054_9).abs() < 1e-12);
        assert_eq!(adaboost_alpha(0.5), 0.0);
    }

    #[test]
    fn full_subspace_single_learner_matches_base() {
        let (x, y) = blobs(60, 3, 0.5, 1);
        let knn = KnnModel::fit(x.view(), &y, 1).unwrap();
        let lda = LdaModel::fit(x.view(), &y).unwrap();
        let ek = ensemble_fit(x.view(), &y, EnsembleKind::SubspaceKnn { subset_size: 3 }, 1, 0).unwrap();
        let ed = ensemble_fit(
            x.view(),
            &y,
            EnsembleKind::SubspaceDiscriminant { subset_size: 3 },
            1,
            0,
        )
        .unwrap();
        let (q, _) = blobs(40, 3, 0.5, 2);
        for r in q.rows() {
            assert_eq!(ek.predict(r), knn.predict(r));
            assert_eq!(ed.predict(r), lda.predict(r));
        }
    }

    #[test]
    fn boosting_stops_on_a_perfect_learner() {
        let x = array![[0.0], [1.0], [10.0], [11.0]];
        let y = [A, A, B, B];
        let m = ensemble_fit(x.view(), &y, EnsembleKind::BoostedTree { max_splits: 10 }, 30, 0).unwrap();
        assert_eq!(m.learners.len(), 1);
        assert!((m.weights[0] - adaboost_alpha(MIN_EPS)).abs() < 1e-9);
        assert_eq!(accuracy(&m, &x, &y), 1.0);
    }

    #[test]
    fn boosting_improves_on_a_stump() {
        // Interval class: one split cannot separate it, boosting can.
        let x = Array2::from_shape_fn((90, 1), |(i, _)| i as f64);
        let y: Vec<Label> = (0..90).map(|i| if (30..60).contains(&i) { B } else { A }).collect();
        let stump = tree_fit(x.view(), &y, None, 1);
        let stump_acc = x.rows().into_iter().zip(&y).filter(|(r, l)| stump.predict(*r) == **l).count();
        let m = ensemble_fit(x.view(), &y, EnsembleKind::BoostedTree { max_splits: 1 }, 30, 0).unwrap();
        assert!(accuracy(&m, &x, &y) > stump_acc as f64 / 90.0);
    }

    #[test]
    fn every_kind_fits_separable_blobs() {
        let (x, y) = blobs(120, 4, 3.0, 7);
        for kind in [
            EnsembleKind::BoostedTree { max_splits: 10 },
            EnsembleKind::BaggedTree,
            EnsembleKind::SubspaceKnn { subset_size: 0 },
            EnsembleKind::SubspaceDiscriminant { subset_size: 0 },
        ] {
            let m = ensemble_fit(x.view(), &y, kind, 10, 3).unwrap();
            assert!(accuracy(&m, &x, &y) > 0.99, "{kind:?}");
        }
    }

    #[test]
    fn seeded_fits_are_reproducible() {
        let (x, y) = blobs(50, 4, 0.3, 9);
        let a = ensemble_fit(x.view(), &y, EnsembleKind::BaggedTree, 5, 11).unwrap();
        let b = ensemble_fit(x.view(), &y, EnsembleKind::BaggedTree, 5, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_subset_size_is_rejected() {
        let (x, y) = blobs(10, 2, 1.0, 0);
        assert!(ensemble_fit(x.view(), &y, EnsembleKind::SubspaceKnn { subset_size: 3 }, 2, 0).is_err());
        assert!(ensemble_fit(x.view(), &y, EnsembleKind::BaggedTree, 0, 0).is_err());
    }

    #[test]
    fn weighted_bootstrap_skips_zero_weight_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let idx = weighted_bootstrap(&[0.0, 1.0, 0.0, 1.0], 500, &mut rng);
        assert!(idx.iter().all(|i| *i == 1 || *i == 3));
    }
}
