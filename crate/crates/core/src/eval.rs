//! Confusion matrices, K-fold splitting and cross-validation.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cfr::SessionMeta;
use crate::classifiers::{self, feature_matrix, labels, ModelSpec, Variant};
use crate::preprocess::{LabeledExample, Standardizer};
use crate::rng::{derive_seed, stream_rng};
use crate::{Error, Label, Result};

/// Binary counts with `Dehydrated` as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Dehydrated, Label::Dehydrated) => self.tp += 1,
            (Label::Hydrated, Label::Hydrated) => self.tn += 1,
            (Label::Hydrated, Label::Dehydrated) => self.fp += 1,
            (Label::Dehydrated, Label::Hydrated) => self.fn_ += 1,
        }
    }

    pub fn from_pairs(truth: &[Label], predicted: &[Label]) -> Self {
        let mut cm = Self::default();
        for (t, p) in truth.iter().zip(predicted) {
            cm.record(*t, *p);
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Percentage of correct predictions.
    pub fn accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::UndefinedMetric("accuracy of an empty confusion matrix".into()));
        }
        Ok(100.0 * (self.tp + self.tn) as f64 / total as f64)
    }

    pub fn tpr(&self) -> Result<f64> {
        ratio(self.tp, self.tp + self.fn_, "true-positive rate without positives")
    }

    pub fn fpr(&self) -> Result<f64> {
        ratio(self.fp, self.fp + self.tn, "false-positive rate without negatives")
    }
}

fn ratio(num: u64, den: u64, what: &str) -> Result<f64> {
    if den == 0 {
        Err(Error::UndefinedMetric(what.into()))
    } else {
        Ok(num as f64 / den as f64)
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            tn: self.tn + o.tn,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

/// How examples are grouped before being dealt into folds.
#[derive(Debug, Clone, Copy)]
pub enum Grouping<'a> {
    ByExample,
    /// One entry per example. All windows of a session share a fold, and
    /// sessions are stratified by (label, subject).
    BySession(&'a [SessionMeta]),
}

fn shuffled(mut v: Vec<usize>, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<usize> {
    v.shuffle(rng);
    v
}

/// Partitions `0..n` into `k` folds. Group counts per fold differ by at
/// most one; each fold's indices are ascending.
pub fn kfold_split(n: usize, k: usize, seed: u64, grouping: Grouping<'_>) -> Result<Vec<Vec<usize>>> {
    let mut rng = stream_rng(seed, 0x6b66_6f6c64);
    // Groups, each a list of example indices, dealt in this order.
    let order: Vec<Vec<usize>> = match grouping {
        Grouping::ByExample => shuffled((0..n).collect(), &mut rng)
            .into_iter()
            .map(|i| vec![i])
            .collect(),
        Grouping::BySession(meta) => {
            if meta.len() != n {
                return Err(Error::Split(format!("{} session tags for {n} examples", meta.len())));
            }
            let mut members: Vec<Vec<usize>> = Vec::new();
            let mut slot: HashMap<SessionMeta, usize> = HashMap::new();
            let mut strata: BTreeMap<(Label, u32), Vec<usize>> = BTreeMap::new();
            for (i, m) in meta.iter().enumerate() {
                let g = *slot.entry(*m).or_insert_with(|| {
                    members.push(Vec::new());
                    strata.entry((m.label, m.subject_id)).or_default().push(members.len() - 1);
                    members.len() - 1
                });
                members[g].push(i);
            }
            let mut order = Vec::with_capacity(members.len());
            for groups in strata.into_values() {
                for g in shuffled(groups, &mut rng) {
                    order.push(std::mem::take(&mut members[g]));
                }
            }
            order
        }
    };
    if k < 2 || k > order.len() {
        return Err(Error::Split(format!(
            "k = {k} folds needs 2 <= k <= number of groups ({})",
            order.len()
        )));
    }
    let mut folds = vec![Vec::new(); k];
    for (i, g) in order.into_iter().enumerate() {
        folds[i % k].extend(g);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// SHA-256 over identities, labels and the bit patterns of all features.
pub fn dataset_fingerprint(examples: &[LabeledExample]) -> String {
    let mut h = Sha256::new();
    for e in examples {
        h.update(e.subject_id.to_le_bytes());
        h.update(e.session_id.to_le_bytes());
        h.update(e.window_index.to_le_bytes());
        h.update([e.label.index() as u8]);
        h.update((e.features.len() as u64).to_le_bytes());
        for v in &e.features {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub variant: Variant,
    pub folds: usize,
    pub fold_accuracies: Vec<f64>,
    pub fold_confusion: Vec<ConfusionMatrix>,
    pub pooled: ConfusionMatrix,
    pub mean_accuracy: f64,
    pub pooled_accuracy: f64,
    pub seed: u64,
    pub dataset_fingerprint: String,
}

/// Session-grouped, stratified K-fold cross-validation. Standardisation is
/// fitted on the training folds only. Folds run in parallel; model seeds
/// are derived from `spec.seed` and the fold number.
pub fn cross_validate(examples: &[LabeledExample], spec: &ModelSpec, k: usize, seed: u64) -> Result<CvReport> {
    let meta: Vec<SessionMeta> = examples.iter().map(|e| e.meta()).collect();
    cross_validate_grouped(examples, spec, k, seed, Grouping::BySession(&meta))
}

pub fn cross_validate_grouped(
    examples: &[LabeledExample],
    spec: &ModelSpec,
    k: usize,
    seed: u64,
    grouping: Grouping<'_>,
) -> Result<CvReport> {
    if examples.is_empty() {
        return Err(Error::Input("cannot cross-validate an empty dataset".into()));
    }
    let folds = kfold_split(examples.len(), k, seed, grouping)?;
    let mut in_test = vec![usize::MAX; examples.len()];
    for (f, idx) in folds.iter().enumerate() {
        idx.iter().for_each(|&i| in_test[i] = f);
    }
    for f in 0..k {
        let mut seen = [false; 2];
        for (i, e) in examples.iter().enumerate() {
            if in_test[i] != f {
                seen[e.label.index()] = true;
            }
        }
        if !(seen[0] && seen[1]) {
            return Err(Error::Stratification(format!(
                "training data for fold {} holds a single class",
                f + 1
            )));
        }
    }
    let fold_confusion: Vec<ConfusionMatrix> = (0..k)
        .into_par_iter()
        .map(|f| {
            let (train, test): (Vec<_>, Vec<_>) = examples
                .iter()
                .enumerate()
                .partition(|(i, _)| in_test[*i] != f);
            let train: Vec<LabeledExample> = train.into_iter().map(|(_, e)| e.clone()).collect();
            let test: Vec<LabeledExample> = test.into_iter().map(|(_, e)| e.clone()).collect();
            let mut xtr = feature_matrix(&train);
            let scaler = Standardizer::fit_matrix(xtr.view());
            scaler.apply_matrix(&mut xtr);
            let mut xte = feature_matrix(&test);
            scaler.apply_matrix(&mut xte);
            let mut fold_spec = spec.clone();
            fold_spec.seed = derive_seed(spec.seed, &[f as u64]);
            let model = classifiers::fit(&fold_spec, xtr.view(), &labels(&train))?;
            let predicted = model.predict_batch(xte.view())?;
            Ok(ConfusionMatrix::from_pairs(&labels(&test), &predicted))
        })
        .collect::<Result<_>>()?;
    let fold_accuracies = fold_confusion
        .iter()
        .map(|cm| cm.accuracy())
        .collect::<Result<Vec<_>>>()?;
    let pooled: ConfusionMatrix = fold_confusion.iter().copied().sum();
    Ok(CvReport {
        variant: spec.variant,
        folds: k,
        mean_accuracy: fold_accuracies.iter().sum::<f64>() / k as f64,
        pooled_accuracy: pooled.accuracy()?,
        fold_accuracies,
        fold_confusion,
        pooled,
        seed,
        dataset_fingerprint: dataset_fingerprint(examples),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineRecord {
    pub work: &'static str,
    /// Whether the method needs body contact.
    pub contact: bool,
    pub accuracy: f64,
}

/// Published accuracies (percent) for report rendering only.
pub fn baseline_table() -> Vec<BaselineRecord> {
    let rec = |work, contact, accuracy| BaselineRecord {
        work,
        contact,
        accuracy,
    };
    vec![
        rec("Liaqat et al. (2022)", true, 97.83),
        rec("Kulkarni et al. (2021)", true, 75.96),
        rec("Liaqat et al. (2020)", true, 91.53),
        rec("Rizwan et al. (2020)", true, 85.63),
        rec("Carrieri et al. (2020)", true, 73.91),
        rec("CBDM non-contact chest", false, 93.8),
        rec("HBDM non-contact hand", false, 96.15),
    ]
}
