//! Representation changes: label construction, functional standardization,
//! grid subsampling and the maps from intervals to real feature matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Channel, IntervalCurve, IntervalVector, LabeledDataset, Observation};

/// Type-7 empirical quantile of already sorted values.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Ordinal labels `1..=Q` from the empirical percentiles of `values`.
///
/// Label `q` covers `[L_{(q-1)/Q}, L_{q/Q})`, the last bin is closed. A value
/// equal to a cut point falls in the upper bin. When heavy ties collapse a bin
/// although at least `Q` distinct values exist, labels are assigned by the rank
/// among distinct values instead so that every code is used.
pub fn percentile_labels(values: &[f64], n_classes: usize) -> Result<Vec<usize>> {
    if n_classes < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 classes, got {n_classes}"
        )));
    }
    if values.is_empty() {
        return Err(Error::InvalidParameter("no values to label".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("values must be finite".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if n_classes > distinct.len() {
        return Err(Error::TooManyClasses {
            classes: n_classes,
            distinct: distinct.len(),
        });
    }

    let cuts: Vec<f64> = (1..n_classes)
        .map(|q| quantile_sorted(&sorted, q as f64 / n_classes as f64))
        .collect();
    let labels: Vec<usize> = values
        .iter()
        .map(|&v| 1 + cuts.iter().filter(|&&c| v >= c).count())
        .collect();

    let mut used = vec![false; n_classes];
    for &y in &labels {
        used[y - 1] = true;
    }
    if used.iter().all(|&u| u) {
        return Ok(labels);
    }
    let d = distinct.len();
    Ok(values
        .iter()
        .map(|v| {
            let rank = distinct.partition_point(|x| x < v);
            1 + rank * n_classes / d
        })
        .collect())
}

/// Pointwise mean and standard deviation of the midpoint curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    grid: Vec<f64>,
    /// `[channel][point]`
    means: Vec<Vec<f64>>,
    /// `[channel][point]`, sample standard deviation (denominator `N - 1`).
    sds: Vec<Vec<f64>>,
}

impl StandardizationParams {
    pub fn fit(curves: &[&IntervalCurve]) -> Result<Self> {
        if curves.len() < 2 {
            return Err(Error::InvalidParameter(
                "standardization needs at least 2 curves".into(),
            ));
        }
        let first = curves[0];
        if let Some(bad) = curves.iter().position(|c| !c.same_shape(first)) {
            return Err(Error::ShapeMismatch(format!(
                "curve {bad} does not share the grid/channels of curve 0"
            )));
        }
        let n = curves.len() as f64;
        let t_len = first.n_points();
        let mut means = Vec::with_capacity(first.n_channels());
        let mut sds = Vec::with_capacity(first.n_channels());
        for v in 0..first.n_channels() {
            let mut m = vec![0.0; t_len];
            let mut s = vec![0.0; t_len];
            for t in 0..t_len {
                let mid = |c: &&IntervalCurve| c.interval_at(v, t).midpoint();
                let mean = curves.iter().map(mid).sum::<f64>() / n;
                let ss = curves.iter().map(|c| (mid(c) - mean).powi(2)).sum::<f64>();
                let sd = (ss / (n - 1.0)).sqrt();
                if !(sd > 0.0) {
                    return Err(Error::ZeroVariance { channel: v, point: t });
                }
                m[t] = mean;
                s[t] = sd;
            }
            means.push(m);
            sds.push(s);
        }
        Ok(StandardizationParams {
            grid: first.grid().to_vec(),
            means,
            sds,
        })
    }

    /// Fits on the curves of an IVF dataset.
    pub fn fit_dataset(train: &LabeledDataset) -> Result<Self> {
        let curves = train
            .observations()
            .iter()
            .map(|o| {
                o.as_curve()
                    .ok_or_else(|| Error::InvalidDataset("standardization needs curve data".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::fit(&curves)
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn sds(&self) -> &[Vec<f64>] {
        &self.sds
    }

    /// Applies `(v - mean) / sd` to both bounds at every point.
    pub fn apply(&self, curve: &IntervalCurve) -> Result<IntervalCurve> {
        if curve.grid() != self.grid.as_slice() || curve.n_channels() != self.means.len() {
            return Err(Error::ShapeMismatch(format!(
                "curve has T={}, V={}; parameters expect T={}, V={}",
                curve.n_points(),
                curve.n_channels(),
                self.grid.len(),
                self.means.len()
            )));
        }
        let channels = curve
            .channels()
            .iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(ch, (m, s))| {
                let map = |xs: &[f64]| -> Vec<f64> {
                    xs.iter()
                        .zip(m.iter().zip(s))
                        .map(|(&x, (&mu, &sd))| (x - mu) / sd)
                        .collect()
                };
                Channel {
                    lower: map(&ch.lower),
                    upper: map(&ch.upper),
                }
            })
            .collect();
        IntervalCurve::new(self.grid.clone(), channels)
    }

    pub fn apply_dataset(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        data.map_observations(|o| match o {
            Observation::Curve(c) => Ok(Observation::Curve(self.apply(c)?)),
            Observation::Vector(_) => Err(Error::InvalidDataset(
                "standardization applies to curve data only".into(),
            )),
        })
    }
}

/// Keeps grid indices `0, step, 2*step, ...`.
///
/// With `T = 365` and `step = 30` this keeps 13 points (indices `0..=360`).
pub fn subsample_grid(curve: &IntervalCurve, step: usize) -> Result<IntervalCurve> {
    if step == 0 {
        return Err(Error::InvalidParameter("subsample step must be >= 1".into()));
    }
    let t_len = curve.n_points();
    if step == 1 {
        return Ok(curve.clone());
    }
    if step >= t_len {
        return Err(Error::EmptyGrid { step, len: t_len });
    }
    let pick = |xs: &[f64]| xs.iter().step_by(step).copied().collect::<Vec<_>>();
    let channels = curve
        .channels()
        .iter()
        .map(|ch| Channel {
            lower: pick(&ch.lower),
            upper: pick(&ch.upper),
        })
        .collect();
    IntervalCurve::new(pick(curve.grid()), channels)
}

/// Concatenates the intervals of every channel and grid point, channel-major,
/// into a `K = V * T` interval vector.
pub fn curve_to_vector(curve: &IntervalCurve) -> Result<IntervalVector> {
    let mut features = Vec::with_capacity(curve.n_channels() * curve.n_points());
    for v in 0..curve.n_channels() {
        for t in 0..curve.n_points() {
            features.push(curve.interval_at(v, t));
        }
    }
    IntervalVector::new(features)
}

/// Interval-vector view of an observation; curves are optionally subsampled
/// and then flattened.
pub fn vectorize(obs: &Observation, subsample_step: Option<usize>) -> Result<IntervalVector> {
    match obs {
        Observation::Vector(v) => Ok(v.clone()),
        Observation::Curve(c) => match subsample_step {
            Some(step) => curve_to_vector(&subsample_grid(c, step)?),
            None => curve_to_vector(c),
        },
    }
}

/// Which real numbers are read off each interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureRecipe {
    /// `c_k` per interval.
    Midpoints,
    /// `(l_1, u_1, ..., l_K, u_K)`.
    Bounds,
    Lower,
    Upper,
}

impl FeatureRecipe {
    pub fn width(&self, k: usize) -> usize {
        match self {
            FeatureRecipe::Bounds => 2 * k,
            _ => k,
        }
    }

    pub fn extract(&self, v: &IntervalVector) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width(v.len()));
        for x in v.iter() {
            match self {
                FeatureRecipe::Midpoints => out.push(x.midpoint()),
                FeatureRecipe::Bounds => {
                    out.push(x.lower());
                    out.push(x.upper());
                }
                FeatureRecipe::Lower => out.push(x.lower()),
                FeatureRecipe::Upper => out.push(x.upper()),
            }
        }
        out
    }
}

/// Real `N x p` matrix of the chosen features, one row per observation.
pub fn feature_matrix(
    observations: &[Observation],
    recipe: FeatureRecipe,
    subsample_step: Option<usize>,
) -> Result<DMatrix<f64>> {
    let rows = observations
        .iter()
        .map(|o| Ok(recipe.extract(&vectorize(o, subsample_step)?)))
        .collect::<Result<Vec<_>>>()?;
    rows_to_matrix(&rows)
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::ShapeMismatch("ragged feature rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]))
}

/// Midpoint representation of every observation: the input of the naive
/// POLR and OF baselines.
pub fn midpoint_view(data: &LabeledDataset, subsample_step: Option<usize>) -> Result<DMatrix<f64>> {
    feature_matrix(data.observations(), FeatureRecipe::Midpoints, subsample_step)
}

/// Midpoints and log-ranges `(c_1..c_K, r*_1..r*_K)` of one interval vector.
pub fn midpoint_logrange_vector(v: &IntervalVector) -> Result<Vec<f64>> {
    let k = v.len();
    let mut z = vec![0.0; 2 * k];
    for (j, x) in v.iter().enumerate() {
        let (c, r) = x.midpoint_logrange()?;
        z[j] = c;
        z[k + j] = r;
    }
    Ok(z)
}
