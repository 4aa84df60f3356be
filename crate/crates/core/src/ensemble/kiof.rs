//! Kernel-induced ordinal forest: each observation is represented by its
//! kernel values against the training set, and an ordinal forest is fitted on
//! that representation. A split on feature `j` is then a rule `K(x, x_j) <= c`.

use serde::{Deserialize, Serialize};

use super::ordinal_forest::{of_fit, OfModel, OfParams};
use crate::error::{Error, Result};
use crate::interval::{LabeledDataset, Observation};
use crate::metrics::{interval_kernel, pairwise, PairwiseKind};
use crate::numeric::RngStream;

/// `(K(x, train_1), ..., K(x, train_N))` with the interval RBF kernel.
pub fn kernel_feature_map(train: &[Observation], x: &Observation, gamma: f64) -> Result<Vec<f64>> {
    train.iter().map(|t| interval_kernel(x, t, gamma)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KiofModel {
    pub gamma: f64,
    pub train: Vec<Observation>,
    pub forest: OfModel,
}

impl KiofModel {
    pub fn fit(data: &LabeledDataset, gamma: f64, params: OfParams, rng: RngStream) -> Result<Self> {
        data.require_all_classes()?;
        let features = pairwise(data.observations(), PairwiseKind::Kernel { gamma })?.to_dmatrix();
        let forest = of_fit(&features, data.labels(), data.n_classes(), params, rng)?;
        Ok(KiofModel {
            gamma,
            train: data.observations().to_vec(),
            forest,
        })
    }

    pub fn features(&self, obs: &Observation) -> Result<Vec<f64>> {
        if !obs.same_shape(&self.train[0]) {
            return Err(Error::ShapeMismatch(
                "query does not match the shape of the training observations".into(),
            ));
        }
        kernel_feature_map(&self.train, obs, self.gamma)
    }

    pub fn predict(&self, obs: &Observation) -> Result<usize> {
        self.forest.predict(&self.features(obs)?)
    }
}
