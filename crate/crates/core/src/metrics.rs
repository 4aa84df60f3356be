//! Hausdorff-type distances between interval vectors and interval curves, the
//! RBF kernels built on them, and dense pairwise matrices.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{IntervalCurve, IntervalVector, Observation};
use crate::par;

/// Default kernel spread; not tuned.
pub const DEFAULT_GAMMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    /// Sum of per-feature Hausdorff distances.
    H,
    /// Root-sum-square of per-feature Hausdorff distances.
    EH,
    /// Integrated pointwise Hausdorff distance, summed over channels.
    FH,
    /// Integrated pointwise Euclidean Hausdorff distance, root-sum-square over
    /// channels.
    FEH,
}

impl std::str::FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h" => Ok(DistanceKind::H),
            "eh" => Ok(DistanceKind::EH),
            "fh" => Ok(DistanceKind::FH),
            "feh" => Ok(DistanceKind::FEH),
            other => Err(Error::InvalidParameter(format!("unknown distance kind {other:?}"))),
        }
    }
}

#[inline]
fn endpoint_gap(xl: f64, xu: f64, yl: f64, yu: f64) -> f64 {
    (xl - yl).abs().max((xu - yu).abs())
}

/// `D^H` (sum) or `D^EH` (root-sum-square) between two interval vectors.
pub fn dist_interval(x: &IntervalVector, y: &IntervalVector, kind: DistanceKind) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "interval vectors with K={} and K={}",
            x.len(),
            y.len()
        )));
    }
    let gaps = x
        .iter()
        .zip(y.iter())
        .map(|(a, b)| endpoint_gap(a.lower(), a.upper(), b.lower(), b.upper()));
    match kind {
        DistanceKind::H => Ok(gaps.sum()),
        DistanceKind::EH => Ok(gaps.map(|d| d * d).sum::<f64>().sqrt()),
        other => Err(Error::InvalidParameter(format!(
            "{other:?} is a curve distance"
        ))),
    }
}

/// Trapezoidal integral of the pointwise Hausdorff gap of one channel.
fn channel_integral(grid: &[f64], x: &IntervalCurve, y: &IntervalCurve, channel: usize) -> f64 {
    let (a, b) = (&x.channels()[channel], &y.channels()[channel]);
    let gap = |t: usize| endpoint_gap(a.lower[t], a.upper[t], b.lower[t], b.upper[t]);
    let mut total = 0.0;
    let mut prev = gap(0);
    for t in 1..grid.len() {
        let cur = gap(t);
        total += 0.5 * (grid[t] - grid[t - 1]) * (prev + cur);
        prev = cur;
    }
    total
}

/// `D^FH` or `D^FEH` between two interval curves on the same grid.
///
/// For a single channel both integrands coincide, because
/// `sqrt(max(a^2, b^2)) = max(a, b)` for non-negative gaps. Channels are
/// combined by a sum for `FH` and by a root-sum-square for `FEH`.
pub fn dist_curve(x: &IntervalCurve, y: &IntervalCurve, kind: DistanceKind) -> Result<f64> {
    if !x.same_shape(y) {
        return Err(Error::ShapeMismatch(
            "curves differ in grid or channel count".into(),
        ));
    }
    let per_channel = (0..x.n_channels()).map(|v| channel_integral(x.grid(), x, y, v));
    match kind {
        DistanceKind::FH => Ok(per_channel.sum()),
        DistanceKind::FEH => Ok(per_channel.map(|d| d * d).sum::<f64>().sqrt()),
        other => Err(Error::InvalidParameter(format!(
            "{other:?} is an interval-vector distance"
        ))),
    }
}

/// Distance between two observations of the same kind.
pub fn dist(x: &Observation, y: &Observation, kind: DistanceKind) -> Result<f64> {
    match (x, y) {
        (Observation::Vector(a), Observation::Vector(b)) => dist_interval(a, b, kind),
        (Observation::Curve(a), Observation::Curve(b)) => dist_curve(a, b, kind),
        _ => Err(Error::ShapeMismatch(
            "cannot compare an interval vector with an interval curve".into(),
        )),
    }
}

/// The Euclidean Hausdorff distance that underlies the kernels: `D^EH` for
/// interval vectors and multivariate `D^FEH` for curves.
pub fn euclidean_hausdorff(x: &Observation, y: &Observation) -> Result<f64> {
    let kind = if x.is_curve() {
        DistanceKind::FEH
    } else {
        DistanceKind::EH
    };
    dist(x, y, kind)
}

/// `exp(-d^2 / gamma)`, floored at the smallest positive normal `f64` so the
/// value stays in `(0, 1]` when the exponential underflows.
pub fn kernel_from_dist(d: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    if !(d >= 0.0) {
        return Err(Error::InvalidParameter(format!("distance must be >= 0, got {d}")));
    }
    Ok((-d * d / gamma).exp().max(f64::MIN_POSITIVE))
}

/// Interval RBF kernel: `K_I` on interval vectors, `K_FI` on curves.
pub fn interval_kernel(x: &Observation, y: &Observation, gamma: f64) -> Result<f64> {
    kernel_from_dist(euclidean_hausdorff(x, y)?, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PairwiseKind {
    Distance { distance: DistanceKind },
    Kernel { gamma: f64 },
}

/// Dense symmetric `n x n` matrix of distances or kernel values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    n: usize,
    entries: Vec<f64>,
    kind: PairwiseKind,
}

impl PairwiseMatrix {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn kind(&self) -> PairwiseKind {
        self.kind
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.n, self.n, &self.entries)
    }

    /// CSV with an `id` header row and an id column.
    pub fn write_csv<W: Write>(&self, ids: &[String], out: W) -> Result<()> {
        if ids.len() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "{} ids for a {}x{} matrix",
                ids.len(),
                self.n,
                self.n
            )));
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string()];
        header.extend(ids.iter().cloned());
        w.write_record(&header)?;
        for (i, id) in ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates the pairwise matrix, computing the upper triangle once and
/// mirroring it. Rows are distributed over workers.
pub fn pairwise(observations: &[Observation], kind: PairwiseKind) -> Result<PairwiseMatrix> {
    crate::interval::check_homogeneous(observations)?;
    if let PairwiseKind::Kernel { gamma } = kind {
        kernel_from_dist(0.0, gamma)?;
    }
    let n = observations.len();
    let element = |i: usize, j: usize| -> Result<f64> {
        let (a, b) = (&observations[i], &observations[j]);
        match kind {
            PairwiseKind::Distance { distance } => dist(a, b, distance),
            PairwiseKind::Kernel { gamma } => interval_kernel(a, b, gamma),
        }
    };
    let upper: Vec<Vec<f64>> = par::try_map_indexed(n, |i| {
        ((i + 1)..n).map(|j| element(i, j)).collect::<Result<Vec<_>>>()
    })?;
    let diag = match kind {
        PairwiseKind::Distance { .. } => 0.0,
        PairwiseKind::Kernel { .. } => 1.0,
    };
    let mut entries = vec![diag; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    Ok(PairwiseMatrix { n, entries, kind })
}
