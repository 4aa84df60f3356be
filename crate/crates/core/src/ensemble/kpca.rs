//! Kernel principal components of interval data, and POLR on the leading
//! components.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kiof::kernel_feature_map;
use crate::error::{Error, Result};
use crate::interval::{LabeledDataset, Observation};
use crate::linear::{polr_fit, PolrModel, PolrOptions};
use crate::metrics::{pairwise, PairwiseKind};
use crate::numeric::sym_eigen;

/// Relative cut below which eigenvalues are treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpcaParams {
    pub gamma: f64,
    /// Fraction of the retained eigenvalue mass the components must reach.
    pub variance_target: f64,
    pub max_dim: usize,
}

impl Default for KpcaParams {
    fn default() -> Self {
        KpcaParams {
            gamma: crate::metrics::DEFAULT_GAMMA,
            variance_target: 0.95,
            max_dim: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpcaModel {
    pub gamma: f64,
    pub train: Vec<Observation>,
    /// Descending, positive; one per retained component.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors of the centered kernel matrix, one per component.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Column means of the training kernel matrix.
    pub column_means: Vec<f64>,
    pub grand_mean: f64,
}

/// `K - 1K - K1 + 1K1` with `1` the all-`1/N` matrix.
pub fn double_center(k: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, f64) {
    let n = k.nrows();
    let col_means: Vec<f64> = (0..n).map(|j| k.column(j).mean()).collect();
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).mean()).collect();
    let grand = col_means.iter().sum::<f64>() / n as f64;
    let centered = DMatrix::from_fn(n, n, |i, j| k[(i, j)] - col_means[j] - row_means[i] + grand);
    (centered, col_means, grand)
}

/// Smallest `d` whose leading eigenvalues hold at least `target` of the total
/// (positive) mass, capped at `cap`.
pub fn select_dim(values: &[f64], target: f64, cap: usize) -> usize {
    let total: f64 = values.iter().sum();
    let mut acc = 0.0;
    let mut d = values.len();
    for (i, v) in values.iter().enumerate() {
        acc += v;
        if acc >= target * total {
            d = i + 1;
            break;
        }
    }
    d.min(cap).max(1)
}

impl KpcaModel {
    /// `max_dim` caps the number of retained components.
    pub fn fit(observations: &[Observation], params: KpcaParams) -> Result<Self> {
        let n = observations.len();
        if n < 2 {
            return Err(Error::InvalidDataset("KPCA needs at least 2 observations".into()));
        }
        let k = pairwise(observations, PairwiseKind::Kernel { gamma: params.gamma })?.to_dmatrix();
        let (centered, column_means, grand_mean) = double_center(&k);
        let eig = sym_eigen(&centered)?;
        let lambda_max = eig.values[0];
        if !(lambda_max > 0.0) {
            return Err(Error::DegenerateKernel);
        }
        let kept: Vec<usize> = (0..n).filter(|&j| eig.values[j] > EIGEN_FLOOR * lambda_max).collect();
        let values: Vec<f64> = kept.iter().map(|&j| eig.values[j]).collect();
        let d = select_dim(&values, params.variance_target, params.max_dim.max(1));
        Ok(KpcaModel {
            gamma: params.gamma,
            train: observations.to_vec(),
            eigenvalues: values[..d].to_vec(),
            eigenvectors: kept[..d].iter().map(|&j| eig.vectors.column(j).iter().copied().collect()).collect(),
            column_means,
            grand_mean,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Keeps only the leading `d` components.
    pub fn truncate(&mut self, d: usize) {
        self.eigenvalues.truncate(d.max(1));
        self.eigenvectors.truncate(d.max(1));
    }

    /// Projection of a kernel column `k(x) = (K(x, x_i))_i`.
    pub fn project_kernel(&self, kx: &[f64]) -> Vec<f64> {
        let mean = kx.iter().sum::<f64>() / kx.len() as f64;
        let centered: Vec<f64> = kx
            .iter()
            .zip(&self.column_means)
            .map(|(k, m)| k - m - mean + self.grand_mean)
            .collect();
        self.eigenvectors
            .iter()
            .zip(&self.eigenvalues)
            .map(|(v, l)| v.iter().zip(&centered).map(|(a, b)| a * b).sum::<f64>() / l.sqrt())
            .collect()
    }

    pub fn transform(&self, obs: &Observation) -> Result<Vec<f64>> {
        if !obs.same_shape(&self.train[0]) {
            return Err(Error::ShapeMismatch(
                "query does not match the shape of the training observations".into(),
            ));
        }
        Ok(self.project_kernel(&kernel_feature_map(&self.train, obs, self.gamma)?))
    }

    /// Projections of the training points, `sqrt(lambda_j) v_ji`.
    pub fn training_projections(&self) -> DMatrix<f64> {
        let n = self.train.len();
        DMatrix::from_fn(n, self.dim(), |i, j| self.eigenvalues[j].sqrt() * self.eigenvectors[j][i])
    }
}

/// KPCA features followed by a cumulative logit model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpcaPolr {
    pub kpca: KpcaModel,
    pub polr: PolrModel,
}

impl KpcaPolr {
    /// The component cap is `min(max_dim, N - Q - 1)`. If POLR fails, the
    /// dimension is halved and the fit retried once.
    pub fn fit(data: &LabeledDataset, params: KpcaParams, opts: PolrOptions) -> Result<Self> {
        data.require_all_classes()?;
        let n = data.len();
        let q = data.n_classes();
        if n < q + 2 {
            return Err(Error::InvalidDataset(format!("KPCA+POLR needs N >= Q + 2, got N={n}, Q={q}")));
        }
        let cap = params.max_dim.min(n - q - 1);
        let mut kpca = KpcaModel::fit(data.observations(), KpcaParams { max_dim: cap, ..params })?;
        let first = polr_fit(&kpca.training_projections(), data.labels(), q, opts);
        let polr = match first {
            Ok(m) => m,
            Err(Error::FitFailed(msg)) => {
                let d = kpca.dim();
                if d == 1 {
                    return Err(Error::FitFailed(msg));
                }
                kpca.truncate(d / 2);
                polr_fit(&kpca.training_projections(), data.labels(), q, opts).map_err(|e| match e {
                    Error::FitFailed(retry) => Error::FitFailed(format!(
                        "KPCA+POLR failed with {d} components ({msg}) and with {} ({retry})",
                        d / 2
                    )),
                    other => other,
                })?
            }
            Err(e) => return Err(e),
        };
        Ok(KpcaPolr { kpca, polr })
    }

    pub fn predict_proba(&self, obs: &Observation) -> Result<Vec<f64>> {
        self.polr.predict_proba(&self.kpca.transform(obs)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::IntervalVector;
    use crate::linear::argmax_low;
    use crate::numeric::RngStream;
    use rand::Rng;

    fn iv2(a: f64, b: f64, w: f64) -> Observation {
        IntervalVector::from_bounds(&[(a - w, a + w), (b - w, b + w)]).unwrap().into()
    }

    fn cloud(n: usize, seed: u64) -> Vec<Observation> {
        let mut rng = RngStream::new(seed).rng();
        (0..n)
            .map(|_| iv2(rng.random_range(0.0..2.0), rng.random_range(0.0..2.0), rng.random_range(0.1..0.5)))
            .collect()
    }

    fn full_model(obs: &[Observation]) -> KpcaModel {
        let n = obs.len();
        KpcaModel::fit(obs, KpcaParams { max_dim: n, variance_target: 1.0, ..Default::default() }).unwrap()
    }

    #[test]
    fn gram_of_retained_components() {
        let obs = cloud(40, 1);
        let m = full_model(&obs);
        assert!(m.eigenvalues.iter().all(|v| *v > 0.0));
        assert!(m.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let z = m.training_projections();
        let gram = &z * z.transpose();
        let mut expected = DMatrix::zeros(40, 40);
        for (v, l) in m.eigenvectors.iter().zip(&m.eigenvalues) {
            let v = nalgebra::DVector::from_column_slice(v);
            expected += &v * v.transpose() * *l;
        }
        assert!((gram - expected).amax() <= 1e-8);
        for (i, o) in obs.iter().enumerate() {
            let t = m.transform(o).unwrap();
            for j in 0..m.dim() {
                assert!((t[j] - z[(i, j)]).abs() <= 1e-10, "point {i} component {j}");
            }
        }
    }

    #[test]
    fn gram_reconstructs_positive_semidefinite_kernel() {
        // equal-width single intervals: D^EH is |c - c'| and the kernel is a 1-D Gaussian
        let mut rng = RngStream::new(2).rng();
        let obs: Vec<Observation> = (0..40)
            .map(|_| {
                let c = rng.random_range(0.0..2.0);
                IntervalVector::from_bounds(&[(c - 0.5, c + 0.5)]).unwrap().into()
            })
            .collect();
        let m = full_model(&obs);
        let k = pairwise(&obs, PairwiseKind::Kernel { gamma: 1.0 }).unwrap().to_dmatrix();
        let (centered, _, _) = double_center(&k);
        let z = m.training_projections();
        let err = (&z * z.transpose() - centered).amax();
        assert!(err <= 1e-8, "reconstruction error {err}");
    }

    #[test]
    fn dimension_rule() {
        assert_eq!(select_dim(&[5.0, 3.0, 1.0, 1.0], 0.95, 10), 4);
        assert_eq!(select_dim(&[90.0, 6.0, 4.0], 0.95, 10), 2);
        assert_eq!(select_dim(&[90.0, 6.0, 4.0], 0.95, 1), 1);
        let obs = cloud(30, 2);
        let m = KpcaModel::fit(&obs, KpcaParams { max_dim: 3, ..Default::default() }).unwrap();
        assert!(m.dim() <= 3);
    }

    #[test]
    fn identical_observations_are_degenerate() {
        let obs = vec![iv2(1.0, 1.0, 0.5); 5];
        assert!(matches!(KpcaModel::fit(&obs, KpcaParams::default()), Err(Error::DegenerateKernel)));
        // a huge bandwidth makes K numerically all ones
        let spread = cloud(10, 3);
        let r = KpcaModel::fit(&spread, KpcaParams { gamma: 1e300, ..Default::default() });
        assert!(matches!(r, Err(Error::DegenerateKernel)), "{r:?}");
    }

    #[test]
    fn pipeline_beats_majority_on_monotone_signal() {
        let make = |seed: u64| {
            let mut rng = RngStream::new(seed).rng();
            let mut obs = Vec::new();
            let mut labels = Vec::new();
            for i in 0..150 {
                let y = 1 + i % 3;
                let a = 0.6 * y as f64 + rng.random_range(-0.4..0.4);
                obs.push(iv2(a, rng.random_range(0.0..0.3), 0.2));
                labels.push(y);
            }
            LabeledDataset::from_parts(obs, labels).unwrap()
        };
        let train = make(4);
        let test = make(5);
        let m = KpcaPolr::fit(&train, KpcaParams::default(), PolrOptions::default()).unwrap();
        let mut correct = 0;
        for (o, &y) in test.observations().iter().zip(test.labels()) {
            let p = m.predict_proba(o).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            if argmax_low(&p) == y {
                correct += 1;
            }
        }
        assert!(correct as f64 / 150.0 > 0.5, "{correct}/150");
    }
}
