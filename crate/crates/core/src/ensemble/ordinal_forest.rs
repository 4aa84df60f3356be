//! Ordinal forest: the ordinal response is replaced by optimized scores in
//! `[0, 1]` and a regression forest is fitted to them.
//!
//! Candidate score sets come from `Q - 1` sorted uniform cut points of `[0, 1]`.
//! Each candidate is rated by the OOB accuracy of a small forest, the borders
//! of the best candidates are averaged, and the final forest is fitted on the
//! midpoints of the averaged bins.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::forest::{forest_fit, ForestModel, ForestParams};
use crate::error::{Error, Result};
use crate::numeric::RngStream;
use crate::par::try_map_indexed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfParams {
    pub n_sets: usize,
    pub trees_per_set: usize,
    pub n_best: usize,
    pub trees_final: usize,
    pub min_leaf: usize,
    pub mtry: Option<usize>,
}

impl Default for OfParams {
    fn default() -> Self {
        OfParams {
            n_sets: 20,
            trees_per_set: 25,
            n_best: 5,
            trees_final: 200,
            min_leaf: 5,
            mtry: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    /// `0 = b_0 < b_1 < ... < b_Q = 1`.
    pub borders: Vec<f64>,
    pub oob_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfModel {
    pub borders: Vec<f64>,
    /// Bin midpoints used as regression targets.
    pub scores: Vec<f64>,
    pub forest: ForestModel,
    pub candidates: Vec<ScoreSet>,
}

/// The class `q` with `b_{q-1} < y_hat <= b_q`; values at or below 0 go to
/// class 1 and values above 1 to class `Q`.
pub fn class_from_score(borders: &[f64], y_hat: f64) -> usize {
    let inner = &borders[1..borders.len() - 1];
    1 + inner.iter().filter(|&&b| b < y_hat).count()
}

/// Border-wise mean of several border vectors of equal length.
pub fn average_borders(sets: &[&[f64]]) -> Vec<f64> {
    let len = sets[0].len();
    (0..len)
        .map(|j| sets.iter().map(|s| s[j]).sum::<f64>() / sets.len() as f64)
        .collect()
}

pub fn bin_midpoints(borders: &[f64]) -> Vec<f64> {
    borders.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect()
}

fn sample_borders<R: Rng>(rng: &mut R, n_classes: usize) -> Vec<f64> {
    loop {
        let mut cuts: Vec<f64> = (0..n_classes - 1).map(|_| rng.random::<f64>()).collect();
        cuts.sort_by(f64::total_cmp);
        let mut borders = Vec::with_capacity(n_classes + 1);
        borders.push(0.0);
        borders.extend(cuts);
        borders.push(1.0);
        if borders.windows(2).all(|w| w[0] < w[1]) {
            return borders;
        }
    }
}

fn scored_targets(y: &[usize], scores: &[f64]) -> Vec<f64> {
    y.iter().map(|&q| scores[q - 1]).collect()
}

/// Fits an ordinal forest on the real feature matrix `x` with labels `1..=Q`.
pub fn of_fit(x: &DMatrix<f64>, y: &[usize], n_classes: usize, params: OfParams, rng: RngStream) -> Result<OfModel> {
    if n_classes < 2 {
        return Err(Error::InvalidParameter("ordinal forest needs at least 2 classes".into()));
    }
    if y.iter().any(|&q| q == 0 || q > n_classes) {
        return Err(Error::InvalidDataset(format!("labels must lie in 1..={n_classes}")));
    }
    if let Some(q) = (1..=n_classes).find(|q| !y.contains(q)) {
        return Err(Error::InvalidDataset(format!("class {q} absent from ordinal forest training data")));
    }
    if params.n_sets == 0 || params.n_best == 0 || params.n_best > params.n_sets {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= n_best <= n_sets, got n_best={} n_sets={}",
            params.n_best, params.n_sets
        )));
    }
    let candidate_params = ForestParams {
        n_trees: params.trees_per_set,
        mtry: params.mtry,
        min_leaf: params.min_leaf,
    };
    let border_rng = rng.derive_named("borders");
    let forest_rng = rng.derive_named("candidate forests");

    let candidates = try_map_indexed(params.n_sets, |s| {
        let borders = sample_borders(&mut border_rng.derive(s as u64).rng(), n_classes);
        let targets = scored_targets(y, &bin_midpoints(&borders));
        let forest = forest_fit(x, &targets, candidate_params, forest_rng.derive(s as u64))?;
        let (hits, total) = forest
            .oob_predictions
            .iter()
            .zip(y)
            .filter_map(|(p, &q)| p.map(|p| class_from_score(&borders, p) == q))
            .fold((0usize, 0usize), |(h, t), ok| (h + usize::from(ok), t + 1));
        let oob_accuracy = if total > 0 { hits as f64 / total as f64 } else { 0.0 };
        Ok::<_, Error>(ScoreSet { borders, oob_accuracy })
    })?;

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[b].oob_accuracy.total_cmp(&candidates[a].oob_accuracy).then(a.cmp(&b)));
    let best: Vec<&[f64]> = order[..params.n_best].iter().map(|&i| candidates[i].borders.as_slice()).collect();
    let borders = average_borders(&best);
    let scores = bin_midpoints(&borders);
    let forest = forest_fit(
        x,
        &scored_targets(y, &scores),
        ForestParams {
            n_trees: params.trees_final,
            mtry: params.mtry,
            min_leaf: params.min_leaf,
        },
        rng.derive_named("final forest"),
    )?;
    Ok(OfModel {
        borders,
        scores,
        forest,
        candidates,
    })
}

impl OfModel {
    pub fn n_classes(&self) -> usize {
        self.scores.len()
    }

    pub fn predict_score(&self, x: &[f64]) -> Result<f64> {
        self.forest.predict(x)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(class_from_score(&self.borders, self.predict_score(x)?))
    }
}
