//! Interval-valued observations and labeled datasets.
//!
//! An observation is either a vector of `K` intervals (IVD) or a curve whose
//! value at every grid point is an interval, possibly with several channels
//! (IVF). All observations in a [`LabeledDataset`] share the same shape.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed real interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lower: f64,
    upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() || lower > upper {
            return Err(Error::InvalidInterval { lower, upper });
        }
        Ok(Interval { lower, upper })
    }

    /// A degenerate interval `[value, value]`.
    pub fn point(value: f64) -> Result<Self> {
        Self::new(value, value)
    }

    #[inline]
    pub fn lower(&self) -> f64 {
        self.lower
    }

    #[inline]
    pub fn upper(&self) -> f64 {
        self.upper
    }

    #[inline]
    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }

    #[inline]
    pub fn midpoint(&self) -> f64 {
        (self.lower + self.upper) / 2.0
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Midpoint and log-range `(c, ln(upper - lower))`.
    pub fn midpoint_logrange(&self) -> Result<(f64, f64)> {
        if self.is_degenerate() {
            return Err(Error::DegenerateInterval(self.lower));
        }
        Ok((self.midpoint(), self.width().ln()))
    }
}

/// One IVD observation: an ordered list of `K >= 1` intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalVector {
    features: Vec<Interval>,
}

impl IntervalVector {
    pub fn new(features: Vec<Interval>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::ShapeMismatch(
                "an interval vector needs at least one feature".into(),
            ));
        }
        Ok(IntervalVector { features })
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let features = bounds
            .iter()
            .map(|&(l, u)| Interval::new(l, u))
            .collect::<Result<Vec<_>>>()?;
        Self::new(features)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.features.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    #[inline]
    pub fn features(&self) -> &[Interval] {
        &self.features
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interval> {
        self.features.iter()
    }
}

impl std::ops::Index<usize> for IntervalVector {
    type Output = Interval;

    fn index(&self, k: usize) -> &Interval {
        &self.features[k]
    }
}

/// Lower and upper sample sequences of one curve channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// A grid-sampled interval-valued function with `V` channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCurve {
    grid: Vec<f64>,
    channels: Vec<Channel>,
}

impl IntervalCurve {
    pub fn new(grid: Vec<f64>, channels: Vec<Channel>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::ShapeMismatch("curve grid is empty".into()));
        }
        if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::ShapeMismatch(
                "curve grid must be finite and strictly increasing".into(),
            ));
        }
        for (v, ch) in channels.iter().enumerate() {
            if ch.lower.len() != grid.len() || ch.upper.len() != grid.len() {
                return Err(Error::ShapeMismatch(format!(
                    "channel {v} has {}/{} samples for a grid of {}",
                    ch.lower.len(),
                    ch.upper.len(),
                    grid.len()
                )));
            }
            for (&l, &u) in ch.lower.iter().zip(&ch.upper) {
                if !l.is_finite() || !u.is_finite() || l > u {
                    return Err(Error::InvalidInterval { lower: l, upper: u });
                }
            }
        }
        Ok(IntervalCurve { grid, channels })
    }

    #[inline]
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    #[inline]
    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn interval_at(&self, channel: usize, point: usize) -> Interval {
        let ch = &self.channels[channel];
        Interval {
            lower: ch.lower[point],
            upper: ch.upper[point],
        }
    }

    pub(crate) fn same_shape(&self, other: &IntervalCurve) -> bool {
        self.channels.len() == other.channels.len() && self.grid == other.grid
    }
}

/// A single observation of either kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Observation {
    Vector(IntervalVector),
    Curve(IntervalCurve),
}

impl Observation {
    pub fn as_vector(&self) -> Option<&IntervalVector> {
        match self {
            Observation::Vector(v) => Some(v),
            Observation::Curve(_) => None,
        }
    }

    pub fn as_curve(&self) -> Option<&IntervalCurve> {
        match self {
            Observation::Curve(c) => Some(c),
            Observation::Vector(_) => None,
        }
    }

    pub fn is_curve(&self) -> bool {
        matches!(self, Observation::Curve(_))
    }

    /// True when `other` can be compared with `self` by the same distance.
    pub fn same_shape(&self, other: &Observation) -> bool {
        match (self, other) {
            (Observation::Vector(a), Observation::Vector(b)) => a.len() == b.len(),
            (Observation::Curve(a), Observation::Curve(b)) => a.same_shape(b),
            _ => false,
        }
    }

    fn shape_description(&self) -> String {
        match self {
            Observation::Vector(v) => format!("interval vector with K={}", v.len()),
            Observation::Curve(c) => format!(
                "interval curve with V={} channels and T={} grid points",
                c.n_channels(),
                c.n_points()
            ),
        }
    }
}

impl From<IntervalVector> for Observation {
    fn from(v: IntervalVector) -> Self {
        Observation::Vector(v)
    }
}

impl From<IntervalCurve> for Observation {
    fn from(c: IntervalCurve) -> Self {
        Observation::Curve(c)
    }
}

/// Checks that every observation shares the shape of the first one.
pub fn check_homogeneous(observations: &[Observation]) -> Result<()> {
    if let Some(first) = observations.first() {
        for (i, obs) in observations.iter().enumerate().skip(1) {
            if !first.same_shape(obs) {
                return Err(Error::ShapeMismatch(format!(
                    "observation {i} is a {}, expected a {}",
                    obs.shape_description(),
                    first.shape_description()
                )));
            }
        }
    }
    Ok(())
}

/// Homogeneous observations paired with ordinal labels `1..=Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    ids: Vec<String>,
    observations: Vec<Observation>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabeledDataset {
    pub fn new(
        ids: Vec<String>,
        observations: Vec<Observation>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidDataset("dataset is empty".into()));
        }
        if ids.len() != observations.len() || labels.len() != observations.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} ids, {} observations and {} labels",
                ids.len(),
                observations.len(),
                labels.len()
            )));
        }
        if n_classes < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 ordered classes, got {n_classes}"
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y == 0 || y > n_classes) {
            return Err(Error::InvalidDataset(format!(
                "label {bad} outside 1..={n_classes}"
            )));
        }
        check_homogeneous(&observations)?;
        Ok(LabeledDataset {
            ids,
            observations,
            labels,
            n_classes,
        })
    }

    /// Builds a dataset with generated ids `0..N` and `Q = max(label)`.
    pub fn from_parts(observations: Vec<Observation>, labels: Vec<usize>) -> Result<Self> {
        let q = labels.iter().copied().max().unwrap_or(0);
        let ids = (0..observations.len()).map(|i| i.to_string()).collect();
        Self::new(ids, observations, labels, q)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    #[inline]
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    #[inline]
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    #[inline]
    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    #[inline]
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn is_curve(&self) -> bool {
        self.observations[0].is_curve()
    }

    /// Number of observations per class, index `q - 1`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &y in &self.labels {
            counts[y - 1] += 1;
        }
        counts
    }

    pub fn covers_all_classes(&self) -> bool {
        self.class_counts().iter().all(|&c| c > 0)
    }

    /// Training-set precondition: every class `1..=Q` is present.
    pub fn require_all_classes(&self) -> Result<()> {
        let counts = self.class_counts();
        match counts.iter().position(|&c| c == 0) {
            Some(q) => Err(Error::InvalidDataset(format!(
                "class {} has no training observations",
                q + 1
            ))),
            None => Ok(()),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            observations: indices.iter().map(|&i| self.observations[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// Same observations with different labels.
    pub fn relabel(&self, labels: Vec<usize>, n_classes: usize) -> Result<LabeledDataset> {
        Self::new(self.ids.clone(), self.observations.clone(), labels, n_classes)
    }

    /// Replaces every observation by `f(observation)`.
    pub fn map_observations<F>(&self, f: F) -> Result<LabeledDataset>
    where
        F: Fn(&Observation) -> Result<Observation>,
    {
        let observations = self
            .observations
            .iter()
            .map(f)
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.ids.clone(), observations, self.labels.clone(), self.n_classes)
    }
}
