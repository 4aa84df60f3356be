//! Train/test splitting and per-replicate evaluation.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::LabeledDataset;
use crate::numeric::{label_hash, RngStream};

pub const MAX_SPLIT_ATTEMPTS: usize = 100;

/// Index sets of a random split; both sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Stable fingerprint of the index sets, recorded to show that every
    /// method of a replicate saw the same split.
    pub fn fingerprint(&self) -> u64 {
        let text: Vec<String> = self.train.iter().map(usize::to_string).collect();
        let test: Vec<String> = self.test.iter().map(usize::to_string).collect();
        label_hash(&format!("{}|{}", text.join(","), test.join(",")))
    }
}

/// Uniform random split with `round(train_frac * N)` training points,
/// redrawn until the training part contains every class.
pub fn split_train_test(data: &LabeledDataset, train_frac: f64, rng: RngStream) -> Result<Split> {
    let n = data.len();
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidParameter(format!("train fraction must lie in (0, 1), got {train_frac}")));
    }
    let n_train = (train_frac * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::InvalidParameter(format!(
            "train fraction {train_frac} leaves an empty part of a dataset of {n}"
        )));
    }
    let mut rng = rng.rng();
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        perm.shuffle(&mut rng);
        let mut seen = vec![false; data.n_classes()];
        for &i in &perm[..n_train] {
            seen[data.labels()[i] - 1] = true;
        }
        if seen.iter().all(|&s| s) {
            let mut train = perm[..n_train].to_vec();
            let mut test = perm[n_train..].to_vec();
            train.sort_unstable();
            test.sort_unstable();
            return Ok(Split { train, test });
        }
    }
    Err(Error::SplitFailed(MAX_SPLIT_ATTEMPTS))
}

/// Accuracy, confusion counts and per-class precision, recall and F1.
/// Undefined ratios are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[truth - 1][predicted - 1]`.
    pub confusion: Vec<Vec<usize>>,
    pub precision: Vec<Option<f64>>,
    pub recall: Vec<Option<f64>>,
    pub f1: Vec<Option<f64>>,
}

/// F1 is computed as `2TP / (2TP + FP + FN)`, which equals the harmonic mean
/// of precision and recall where both exist and is 0 when the class is never
/// predicted but present.
pub fn evaluate(predictions: &[usize], truth: &[usize], n_classes: usize) -> Result<Evaluation> {
    if predictions.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidDataset("nothing to evaluate".into()));
    }
    if let Some(bad) = predictions.iter().chain(truth).find(|&&c| c == 0 || c > n_classes) {
        return Err(Error::InvalidParameter(format!("class {bad} outside 1..={n_classes}")));
    }
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&p, &t) in predictions.iter().zip(truth) {
        confusion[t - 1][p - 1] += 1;
    }
    let correct: usize = (0..n_classes).map(|q| confusion[q][q]).sum();
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let mut precision = Vec::with_capacity(n_classes);
    let mut recall = Vec::with_capacity(n_classes);
    let mut f1 = Vec::with_capacity(n_classes);
    for q in 0..n_classes {
        let tp = confusion[q][q];
        let predicted: usize = (0..n_classes).map(|t| confusion[t][q]).sum();
        let actual: usize = confusion[q].iter().sum();
        precision.push(ratio(tp, predicted));
        recall.push(ratio(tp, actual));
        f1.push(ratio(2 * tp, predicted + actual));
    }
    Ok(Evaluation {
        accuracy: correct as f64 / truth.len() as f64,
        confusion,
        precision,
        recall,
        f1,
    })
}
