//! Linear discriminant analysis of interval data.
//!
//! Each interval is recoded as its midpoint `c` and log-range `r*`, and the
//! `2K`-vector `(c_1..c_K, r*_1..r*_K)` is modelled as Gaussian with
//! class-specific means and a shared covariance. Four covariance structures are
//! fitted and the one with the lowest BIC is kept.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fh::{BinaryFitter, BinaryModel};
use crate::error::{Error, Result};
use crate::interval::{LabeledDataset, Observation};
use crate::transform::{midpoint_logrange_vector, vectorize};

/// Zero pattern of the shared covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceConfig {
    /// Unrestricted.
    Full,
    /// Only `c_j` and `r*_j` of the same interval variable may covary.
    WithinVariable,
    /// Midpoints and log-ranges uncorrelated with each other.
    BlockDiagonal,
    Diagonal,
}

impl CovarianceConfig {
    pub const ALL: [CovarianceConfig; 4] = [
        CovarianceConfig::Full,
        CovarianceConfig::WithinVariable,
        CovarianceConfig::BlockDiagonal,
        CovarianceConfig::Diagonal,
    ];

    /// 1-based configuration number.
    pub fn number(&self) -> usize {
        match self {
            CovarianceConfig::Full => 1,
            CovarianceConfig::WithinVariable => 2,
            CovarianceConfig::BlockDiagonal => 3,
            CovarianceConfig::Diagonal => 4,
        }
    }

    /// Whether entry `(a, b)` of the `2K x 2K` covariance is free.
    pub fn allows(&self, a: usize, b: usize, k: usize) -> bool {
        if a == b {
            return true;
        }
        match self {
            CovarianceConfig::Full => true,
            CovarianceConfig::WithinVariable => a % k == b % k,
            CovarianceConfig::BlockDiagonal => (a < k) == (b < k),
            CovarianceConfig::Diagonal => false,
        }
    }

    /// Free covariance parameters for `K` interval variables.
    pub fn n_params(&self, k: usize) -> usize {
        let d = 2 * k;
        match self {
            CovarianceConfig::Full => d * (d + 1) / 2,
            CovarianceConfig::WithinVariable => 3 * k,
            CovarianceConfig::BlockDiagonal => k * (k + 1),
            CovarianceConfig::Diagonal => d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigFit {
    pub config: CovarianceConfig,
    pub log_likelihood: f64,
    pub n_params: usize,
    pub bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaIdModel {
    /// Number of interval variables after vectorization.
    pub k: usize,
    pub subsample_step: Option<usize>,
    /// Per class, in `(c, r*)` space.
    pub means: Vec<Vec<f64>>,
    /// Selected covariance after diagonal conditioning, row-major `2K x 2K`.
    pub covariance: Vec<Vec<f64>>,
    pub precision: Vec<Vec<f64>>,
    pub priors: Vec<f64>,
    pub selected: CovarianceConfig,
    pub candidates: Vec<ConfigFit>,
}

fn gaussian_loglik(residuals: &[Vec<f64>], sigma: &DMatrix<f64>) -> Option<f64> {
    let d = sigma.nrows();
    let chol = Cholesky::new(sigma.clone())?;
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let mut quad = 0.0;
    for r in residuals {
        let v = DVector::from_column_slice(r);
        let s = chol.solve(&v);
        quad += v.dot(&s);
    }
    let n = residuals.len() as f64;
    let ll = -0.5 * (n * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det) + quad);
    ll.is_finite().then_some(ll)
}

fn condition(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let d = sigma.nrows();
    let ridge = 1e-8 * sigma.trace() / d as f64;
    sigma + DMatrix::identity(d, d) * ridge
}

impl LdaIdModel {
    /// Fits on vectors `z = (c, r*)` with labels `1..=Q`.
    pub fn fit_features(z: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Result<Self> {
        let n = z.len();
        let d = z.first().map_or(0, Vec::len);
        if d == 0 || !d.is_multiple_of(2) {
            return Err(Error::ShapeMismatch("LDA-ID needs 2K features".into()));
        }
        let k = d / 2;
        let mut counts = vec![0usize; n_classes];
        for &y in labels {
            counts[y - 1] += 1;
        }
        if let Some(q) = counts.iter().position(|&c| c < 2) {
            return Err(Error::FitFailed(format!(
                "LDA-ID needs at least 2 observations per class, class {} has {}",
                q + 1,
                counts[q]
            )));
        }

        let mut means = vec![vec![0.0; d]; n_classes];
        for (zi, &y) in z.iter().zip(labels) {
            for j in 0..d {
                means[y - 1][j] += zi[j];
            }
        }
        for (m, &c) in means.iter_mut().zip(&counts) {
            m.iter_mut().for_each(|v| *v /= c as f64);
        }
        let residuals: Vec<Vec<f64>> = z
            .iter()
            .zip(labels)
            .map(|(zi, &y)| zi.iter().zip(&means[y - 1]).map(|(a, b)| a - b).collect())
            .collect();
        let mut pooled = DMatrix::zeros(d, d);
        for r in &residuals {
            for a in 0..d {
                for b in 0..d {
                    pooled[(a, b)] += r[a] * r[b];
                }
            }
        }
        pooled /= n as f64;

        let n_mean_params = n_classes * d;
        let mut candidates = Vec::with_capacity(4);
        let mut best: Option<(f64, CovarianceConfig, DMatrix<f64>)> = None;
        for config in CovarianceConfig::ALL {
            let sigma = DMatrix::from_fn(d, d, |a, b| if config.allows(a, b, k) { pooled[(a, b)] } else { 0.0 });
            let ll = gaussian_loglik(&residuals, &sigma)
                .or_else(|| gaussian_loglik(&residuals, &condition(&sigma)))
                .unwrap_or(f64::NEG_INFINITY);
            let n_params = n_mean_params + config.n_params(k);
            let bic = -2.0 * ll + n_params as f64 * (n as f64).ln();
            candidates.push(ConfigFit {
                config,
                log_likelihood: ll,
                n_params,
                bic,
            });
            // equal BIC means identical zero patterns (e.g. configs 3 and 4 at K = 1); keep the sparser label
            if best.as_ref().is_none_or(|b| bic <= b.0) {
                best = Some((bic, config, sigma));
            }
        }
        let (_, selected, sigma) = best.expect("four candidates");
        if candidates.iter().all(|c| !c.bic.is_finite()) {
            return Err(Error::SingularCovariance);
        }
        let conditioned = condition(&sigma);
        let chol = Cholesky::new(conditioned.clone()).ok_or(Error::SingularCovariance)?;
        let precision = chol.inverse();
        if precision.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularCovariance);
        }
        let rows = |m: &DMatrix<f64>| (0..d).map(|a| (0..d).map(|b| m[(a, b)]).collect()).collect();
        let priors = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Ok(LdaIdModel {
            k,
            subsample_step: None,
            means,
            covariance: rows(&conditioned),
            precision: rows(&precision),
            priors,
            selected,
            candidates,
        })
    }

    pub fn fit(data: &LabeledDataset, subsample_step: Option<usize>) -> Result<Self> {
        data.require_all_classes()?;
        let z = data
            .observations()
            .iter()
            .map(|o| midpoint_logrange_vector(&vectorize(o, subsample_step)?))
            .collect::<Result<Vec<_>>>()?;
        let mut model = Self::fit_features(&z, data.labels(), data.n_classes())?;
        model.subsample_step = subsample_step;
        Ok(model)
    }

    pub fn n_classes(&self) -> usize {
        self.means.len()
    }

    /// Posterior class probabilities for a point in `(c, r*)` space.
    pub fn posterior_features(&self, z: &[f64]) -> Result<Vec<f64>> {
        let d = 2 * self.k;
        if z.len() != d {
            return Err(Error::ShapeMismatch(format!(
                "LDA-ID expects {} interval variables, got {}",
                self.k,
                z.len() / 2
            )));
        }
        let scores: Vec<f64> = self
            .means
            .iter()
            .zip(&self.priors)
            .map(|(mu, prior)| {
                let mut lin = 0.0;
                let mut quad = 0.0;
                for a in 0..d {
                    let pm: f64 = (0..d).map(|b| self.precision[a][b] * mu[b]).sum();
                    lin += z[a] * pm;
                    quad += mu[a] * pm;
                }
                prior.ln() + lin - 0.5 * quad
            })
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        Ok(exps.into_iter().map(|e| e / total).collect())
    }

    pub fn predict_proba(&self, obs: &Observation) -> Result<Vec<f64>> {
        let z = midpoint_logrange_vector(&vectorize(obs, self.subsample_step)?)?;
        self.posterior_features(&z)
    }

    pub fn candidate(&self, config: CovarianceConfig) -> &ConfigFit {
        &self.candidates[config.number() - 1]
    }
}

/// LDA-ID as the binary learner inside Frank-Hall.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LdaIdFitter {
    pub subsample_step: Option<usize>,
}

impl BinaryFitter for LdaIdFitter {
    type Model = LdaIdModel;

    fn fit_binary(&self, data: &LabeledDataset) -> Result<LdaIdModel> {
        LdaIdModel::fit(data, self.subsample_step)
    }
}

impl BinaryModel for LdaIdModel {
    fn prob_upper(&self, obs: &Observation) -> Result<f64> {
        Ok(self.predict_proba(obs)?[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::IntervalVector;
    use crate::linear::argmax_low;
    use crate::numeric::RngStream;
    use rand_distr::{Distribution, Normal};

    /// Intervals whose `(c, r*)` follow independent normals around `means`.
    fn draw(means: &[[f64; 2]], per_class: usize, sds: [f64; 2], seed: u64) -> LabeledDataset {
        let mut rng = RngStream::new(seed).rng();
        let mut obs = Vec::new();
        let mut labels = Vec::new();
        for (q, m) in means.iter().enumerate() {
            let nc = Normal::new(m[0], sds[0]).unwrap();
            let nr = Normal::new(m[1], sds[1]).unwrap();
            for _ in 0..per_class {
                let c = nc.sample(&mut rng);
                let w = nr.sample(&mut rng).exp();
                obs.push(IntervalVector::from_bounds(&[(c - w / 2.0, c + w / 2.0)]).unwrap().into());
                labels.push(q + 1);
            }
        }
        LabeledDataset::from_parts(obs, labels).unwrap()
    }

    #[test]
    fn parameter_counts() {
        // Q = 2, K = 1: 4 mean parameters
        assert_eq!(4 + CovarianceConfig::Diagonal.n_params(1), 6);
        assert_eq!(4 + CovarianceConfig::Full.n_params(1), 7);
        for k in 1..6 {
            let free = |c: CovarianceConfig| {
                (0..2 * k).flat_map(|a| (0..=a).map(move |b| (a, b))).filter(|&(a, b)| c.allows(a, b, k)).count()
            };
            for c in CovarianceConfig::ALL {
                assert_eq!(c.n_params(k), free(c), "{c:?} K={k}");
            }
        }
        let data = draw(&[[0.0, 0.0], [2.0, 0.5]], 30, [1.0, 0.3], 1);
        let m = LdaIdModel::fit(&data, None).unwrap();
        assert_eq!(m.candidate(CovarianceConfig::Diagonal).n_params, 6);
        assert_eq!(m.candidate(CovarianceConfig::Full).n_params, 7);
    }

    #[test]
    fn mirrored_means_give_even_odds_at_midpoint() {
        let m = LdaIdModel {
            k: 1,
            subsample_step: None,
            means: vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
            covariance: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            precision: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            priors: vec![0.5, 0.5],
            selected: CovarianceConfig::Diagonal,
            candidates: vec![],
        };
        let p = m.posterior_features(&[0.0, 0.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15);
        let at_mean = m.posterior_features(&[1.0, 0.0]).unwrap();
        assert_eq!(argmax_low(&at_mean), 2);
        assert!((at_mean.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_means_return_priors() {
        let m = LdaIdModel {
            k: 1,
            subsample_step: None,
            means: vec![vec![0.3, 0.1]; 3],
            covariance: vec![vec![1.0, 0.2], vec![0.2, 1.0]],
            precision: vec![vec![1.0, -0.2], vec![-0.2, 1.0]],
            priors: vec![0.2, 0.3, 0.5],
            selected: CovarianceConfig::Full,
            candidates: vec![],
        };
        for z in [[0.0, 0.0], [5.0, -3.0]] {
            let p = m.posterior_features(&z).unwrap();
            for (a, b) in p.iter().zip(&m.priors) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_interval_is_rejected() {
        let obs = vec![
            IntervalVector::from_bounds(&[(0.0, 1.0)]).unwrap().into(),
            IntervalVector::from_bounds(&[(1.0, 1.0)]).unwrap().into(),
        ];
        let data = LabeledDataset::from_parts(obs, vec![1, 2]).unwrap();
        assert!(matches!(LdaIdModel::fit(&data, None), Err(Error::DegenerateInterval(_))));
    }

    #[test]
    fn full_config_likelihood_dominates() {
        for seed in 0..10 {
            let data = draw(&[[0.0, 0.0], [1.0, 0.2], [2.5, -0.1]], 25, [1.0, 0.4], seed);
            let m = LdaIdModel::fit(&data, None).unwrap();
            let full = m.candidate(CovarianceConfig::Full).log_likelihood;
            for c in &m.candidates {
                assert!(full >= c.log_likelihood - 1e-8, "{:?}", m.candidates);
            }
        }
    }

    #[test]
    fn bic_prefers_diagonal_truth() {
        let mut hits = 0;
        for seed in 0..100 {
            let data = draw(&[[0.0, 0.0], [1.5, 0.3]], 250, [1.0, 0.5], 1000 + seed);
            let m = LdaIdModel::fit(&data, None).unwrap();
            if m.selected == CovarianceConfig::Diagonal {
                hits += 1;
            }
        }
        assert!(hits >= 90, "diagonal selected in {hits}/100 trials");
    }

    #[test]
    fn posteriors_invariant_to_feature_order() {
        let mut rng = RngStream::new(5).rng();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut obs = Vec::new();
        let mut swapped = Vec::new();
        let mut labels = Vec::new();
        for i in 0..90 {
            let y = 1 + i % 3;
            let a = y as f64 + normal.sample(&mut rng);
            let b = normal.sample(&mut rng) * 2.0;
            let wa = 1.0 + normal.sample(&mut rng).abs();
            let wb = 0.5 + normal.sample(&mut rng).abs();
            obs.push(IntervalVector::from_bounds(&[(a, a + wa), (b, b + wb)]).unwrap().into());
            swapped.push(IntervalVector::from_bounds(&[(b, b + wb), (a, a + wa)]).unwrap().into());
            labels.push(y);
        }
        let d1 = LabeledDataset::from_parts(obs.clone(), labels.clone()).unwrap();
        let d2 = LabeledDataset::from_parts(swapped.clone(), labels).unwrap();
        let m1 = LdaIdModel::fit(&d1, None).unwrap();
        let m2 = LdaIdModel::fit(&d2, None).unwrap();
        assert_eq!(m1.selected, m2.selected);
        for (o1, o2) in obs.iter().zip(&swapped).take(20) {
            let p1 = m1.predict_proba(o1).unwrap();
            let p2 = m2.predict_proba(o2).unwrap();
            for (a, b) in p1.iter().zip(&p2) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
