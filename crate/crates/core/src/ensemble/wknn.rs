//! Weighted k-nearest-neighbour ordinal classifier on interval distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{LabeledDataset, Observation};
use crate::metrics::{dist, euclidean_hausdorff, DistanceKind};
use crate::numeric::weighted_median;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKernel {
    /// `max(0, 1 - d)` on normalized distances.
    #[default]
    Triangular,
    Rectangular,
}

impl WeightKernel {
    pub fn weight(&self, normalized: f64) -> f64 {
        match self {
            WeightKernel::Triangular => (1.0 - normalized).max(0.0),
            WeightKernel::Rectangular => 1.0,
        }
    }
}

impl std::str::FromStr for WeightKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triangular" => Ok(WeightKernel::Triangular),
            "rectangular" => Ok(WeightKernel::Rectangular),
            other => Err(Error::InvalidParameter(format!("unknown weight kernel {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WknnConfig {
    pub k: usize,
    pub weight: WeightKernel,
    /// `None` picks `D^EH` for interval vectors and `D^FEH` for curves.
    #[serde(default)]
    pub distance: Option<DistanceKind>,
}

impl Default for WknnConfig {
    fn default() -> Self {
        WknnConfig {
            k: 7,
            weight: WeightKernel::Triangular,
            distance: None,
        }
    }
}

/// Label from the distances to every training point.
///
/// The `k + 1` nearest are found with ties broken by training index, the `k`
/// nearest distances are divided by the `(k + 1)`-th, turned into weights, and
/// the weighted median of the neighbours' classes is returned. A zero
/// `(k + 1)`-th distance gives every neighbour weight 1.
pub fn wknn_vote(distances: &[f64], labels: &[usize], k: usize, weight: WeightKernel) -> Result<usize> {
    if distances.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} distances and {} labels",
            distances.len(),
            labels.len()
        )));
    }
    if k == 0 || distances.len() < k + 1 {
        return Err(Error::InvalidParameter(format!(
            "wkNN needs 1 <= k and k + 1 <= N, got k={k} with N={}",
            distances.len()
        )));
    }
    if distances.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::InvalidParameter("distances must be >= 0".into()));
    }
    let mut order: Vec<usize> = (0..distances.len()).collect();
    let cmp = |a: &usize, b: &usize| distances[*a].total_cmp(&distances[*b]).then(a.cmp(b));
    order.select_nth_unstable_by(k, cmp);
    order[..k].sort_unstable_by(cmp);
    let scale = distances[order[k]];
    let neighbours = &order[..k];
    let weights: Vec<f64> = if scale == 0.0 {
        vec![1.0; k]
    } else {
        neighbours.iter().map(|&i| weight.weight(distances[i] / scale)).collect()
    };
    let classes: Vec<usize> = neighbours.iter().map(|&i| labels[i]).collect();
    if weights.iter().all(|w| *w == 0.0) {
        // every neighbour ties with the (k+1)-th; treat them as equally close
        return weighted_median(&classes, &vec![1.0; k]);
    }
    weighted_median(&classes, &weights)
}

/// Stores the training set; prediction is lazy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WknnModel {
    pub config: WknnConfig,
    pub train: LabeledDataset,
}

impl WknnModel {
    pub fn fit(data: &LabeledDataset, config: WknnConfig) -> Result<Self> {
        if config.k == 0 || data.len() < config.k + 1 {
            return Err(Error::InvalidParameter(format!(
                "wkNN needs k + 1 <= N_train, got k={} with N={}",
                config.k,
                data.len()
            )));
        }
        if let Some(kind) = config.distance {
            let curve_kind = matches!(kind, DistanceKind::FH | DistanceKind::FEH);
            if curve_kind != data.is_curve() {
                return Err(Error::InvalidParameter(format!(
                    "distance {kind:?} does not apply to this data type"
                )));
            }
        }
        Ok(WknnModel {
            config,
            train: data.clone(),
        })
    }

    pub fn distances(&self, obs: &Observation) -> Result<Vec<f64>> {
        self.train
            .observations()
            .iter()
            .map(|t| match self.config.distance {
                Some(kind) => dist(obs, t, kind),
                None => euclidean_hausdorff(obs, t),
            })
            .collect()
    }

    pub fn predict(&self, obs: &Observation) -> Result<usize> {
        let d = self.distances(obs)?;
        wknn_vote(&d, self.train.labels(), self.config.k, self.config.weight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::IntervalVector;
    use crate::numeric::RngStream;
    use rand::Rng;

    /// Full sort and a cumulative scan over class codes, in exact integer
    /// arithmetic. Distances are multiples of 0.5, so `2 * (scale - d)` is an
    /// integer multiple of the triangular weight.
    fn brute_force(d: &[f64], y: &[usize], k: usize, weight: WeightKernel) -> usize {
        let mut idx: Vec<usize> = (0..d.len()).collect();
        idx.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap().then(a.cmp(&b)));
        let half_units = |v: f64| (2.0 * v) as i64;
        let scale = half_units(d[idx[k]]);
        let mut w: Vec<(usize, i64)> = idx[..k]
            .iter()
            .map(|&i| {
                let wt = match weight {
                    _ if scale == 0 => 1,
                    WeightKernel::Triangular => (scale - half_units(d[i])).max(0),
                    WeightKernel::Rectangular => 1,
                };
                (y[i], wt)
            })
            .collect();
        if w.iter().all(|p| p.1 == 0) {
            w.iter_mut().for_each(|p| p.1 = 1);
        }
        let total: i64 = w.iter().map(|p| p.1).sum();
        let qmax = *y.iter().max().unwrap();
        let mut cum = 0;
        for q in 1..=qmax {
            cum += w.iter().filter(|p| p.0 == q).map(|p| p.1).sum::<i64>();
            if 2 * cum >= total {
                return q;
            }
        }
        qmax
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = RngStream::new(77).rng();
        for _ in 0..1000 {
            let n = rng.random_range(2..30);
            let k = rng.random_range(1..n);
            let q = rng.random_range(2..6);
            // coarse distances create ties at the k / k+1 boundary
            let d: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64 * 0.5).collect();
            let y: Vec<usize> = (0..n).map(|_| rng.random_range(1..=q)).collect();
            for w in [WeightKernel::Triangular, WeightKernel::Rectangular] {
                assert_eq!(wknn_vote(&d, &y, k, w).unwrap(), brute_force(&d, &y, k, w), "{d:?} {y:?} k={k}");
            }
        }
    }

    #[test]
    fn one_neighbour_rectangular_is_nearest_neighbour() {
        let d = [3.0, 0.5, 2.0, 0.7];
        assert_eq!(wknn_vote(&d, &[1, 3, 2, 1], 1, WeightKernel::Rectangular).unwrap(), 3);
    }

    #[test]
    fn exact_match_dominates() {
        // weights 1, 1 - 1/4, 1 - 2/4 with the 4th distance = 4
        let d = [0.0, 1.0, 2.0, 4.0, 9.0];
        let y = [2, 1, 3, 3, 3];
        assert_eq!(wknn_vote(&d, &y, 3, WeightKernel::Triangular).unwrap(), 2);
    }

    #[test]
    fn zero_scale_gives_unit_weights() {
        let d = [0.0, 0.0, 0.0, 0.0, 1.0];
        let y = [1, 3, 3, 1, 1];
        // neighbours 0, 1, 2 with weights 1 each: classes 1, 3, 3
        assert_eq!(wknn_vote(&d, &y, 3, WeightKernel::Triangular).unwrap(), 3);
    }

    #[test]
    fn model_checks_size_and_distance() {
        let obs: Vec<Observation> = (0..5)
            .map(|i| IntervalVector::from_bounds(&[(i as f64, i as f64 + 1.0)]).unwrap().into())
            .collect();
        let data = LabeledDataset::from_parts(obs.clone(), vec![1, 1, 2, 2, 2]).unwrap();
        assert!(WknnModel::fit(&data, WknnConfig::default()).is_err());
        let cfg = WknnConfig { k: 2, ..Default::default() };
        let m = WknnModel::fit(&data, cfg).unwrap();
        assert_eq!(m.predict(&obs[0]).unwrap(), 1);
        assert_eq!(m.predict(&obs[4]).unwrap(), 2);
        let bad = WknnConfig { distance: Some(DistanceKind::FEH), ..cfg };
        assert!(WknnModel::fit(&data, bad).is_err());
    }
}
