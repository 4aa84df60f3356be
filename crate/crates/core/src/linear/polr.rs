//! Proportional-odds cumulative logit model,
//! `logit P(y <= q | x) = zeta_q - beta^T x`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::argmax_low;
use crate::error::{Error, Result};
use crate::interval::{LabeledDataset, Observation};
use crate::numeric::{minimize, MinimizeOptions};
use crate::transform::{feature_matrix, vectorize, FeatureRecipe};

/// Ridge weight on the coefficients (not the thresholds).
pub const DEFAULT_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolrOptions {
    pub ridge: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PolrOptions {
    fn default() -> Self {
        PolrOptions {
            ridge: DEFAULT_RIDGE,
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolrModel {
    /// Strictly increasing `zeta_1 < ... < zeta_{Q-1}`.
    pub thresholds: Vec<f64>,
    pub coefficients: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(sigmoid(x))`
#[inline]
fn log_sigmoid(x: f64) -> f64 {
    -((-x).max(0.0) + (-x.abs()).exp().ln_1p())
}

fn thresholds_from(theta: &[f64]) -> Vec<f64> {
    let mut zeta = Vec::with_capacity(theta.len());
    let mut acc = theta[0];
    zeta.push(acc);
    for t in &theta[1..] {
        acc += t.exp();
        zeta.push(acc);
    }
    zeta
}

/// Penalized negative log-likelihood and its gradient.
///
/// `params = (theta_0, theta_1, .., theta_{Q-2}, beta_1, .., beta_p)` with
/// `zeta_1 = theta_0` and `zeta_q = zeta_{q-1} + exp(theta_{q-1})`, so every
/// parameter vector maps to increasing thresholds.
pub fn polr_objective(
    params: &[f64],
    x: &DMatrix<f64>,
    y: &[usize],
    n_classes: usize,
    ridge: f64,
) -> (f64, Vec<f64>) {
    let n_thr = n_classes - 1;
    let p = x.ncols();
    let (theta, beta) = params.split_at(n_thr);
    let zeta = thresholds_from(theta);

    let mut nll = 0.0;
    let mut g_zeta = vec![0.0; n_thr];
    let mut g_beta = vec![0.0; p];
    for (i, &yi) in y.iter().enumerate() {
        let eta: f64 = (0..p).map(|j| beta[j] * x[(i, j)]).sum();
        // log p = log F(b) - log F(a) written stably; a = -inf for y = 1, b = +inf for y = Q
        let (logp, dlda, dldb) = if yi == 1 {
            let b = zeta[0] - eta;
            (log_sigmoid(b), 0.0, sigmoid(-b))
        } else if yi == n_classes {
            let a = zeta[n_thr - 1] - eta;
            (log_sigmoid(-a), -sigmoid(a), 0.0)
        } else {
            let a = zeta[yi - 2] - eta;
            let b = zeta[yi - 1] - eta;
            let inv = 1.0 / (b - a).exp_m1();
            let logp = log_sigmoid(b) + log_sigmoid(-a) + (-(a - b).exp_m1()).ln();
            (logp, -sigmoid(a) - inv, sigmoid(-b) + inv)
        };
        nll -= logp;
        if yi > 1 {
            g_zeta[yi - 2] -= dlda;
        }
        if yi < n_classes {
            g_zeta[yi - 1] -= dldb;
        }
        let d_eta = dlda + dldb;
        for j in 0..p {
            g_beta[j] += d_eta * x[(i, j)];
        }
    }
    for j in 0..p {
        nll += ridge * beta[j] * beta[j];
        g_beta[j] += 2.0 * ridge * beta[j];
    }

    let mut grad = Vec::with_capacity(params.len());
    // zeta_j depends on theta_0 with slope 1 and on theta_m (m >= 1) for j >= m
    let mut tail = 0.0;
    let mut g_theta = vec![0.0; n_thr];
    for m in (0..n_thr).rev() {
        tail += g_zeta[m];
        g_theta[m] = if m == 0 { tail } else { tail * theta[m].exp() };
    }
    grad.extend(g_theta);
    grad.extend(g_beta);
    (nll, grad)
}

/// Maximum likelihood fit with a small ridge on the coefficients.
///
/// Columns are centered and scaled internally; the returned parameters are on
/// the original scale.
pub fn polr_fit(x: &DMatrix<f64>, y: &[usize], n_classes: usize, opts: PolrOptions) -> Result<PolrModel> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!("{n} rows and {} labels", y.len())));
    }
    if n_classes < 2 {
        return Err(Error::InvalidParameter("POLR needs at least 2 classes".into()));
    }
    if y.iter().any(|&v| v == 0 || v > n_classes) {
        return Err(Error::InvalidDataset(format!("labels must lie in 1..={n_classes}")));
    }
    let mut counts = vec![0usize; n_classes];
    for &v in y {
        counts[v - 1] += 1;
    }
    if let Some(q) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidDataset(format!("class {} absent from POLR training data", q + 1)));
    }
    if n <= p + n_classes {
        return Err(Error::FitFailed(format!(
            "POLR needs N > p + Q, got N={n}, p={p}, Q={n_classes}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDataset("non-finite POLR feature".into()));
    }

    let mut center = vec![0.0; p];
    let mut scale = vec![1.0; p];
    for j in 0..p {
        let col = x.column(j);
        let mean = col.mean();
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        center[j] = mean;
        if sd > 0.0 {
            scale[j] = sd;
        }
    }
    let xs = DMatrix::from_fn(n, p, |i, j| (x[(i, j)] - center[j]) / scale[j]);

    // intercept-only start: thresholds at the empirical cumulative logits
    let mut theta0 = Vec::with_capacity(n_classes - 1 + p);
    let mut cum = 0usize;
    let mut prev = 0.0;
    for (q, &c) in counts.iter().enumerate().take(n_classes - 1) {
        cum += c;
        let f = cum as f64 / n as f64;
        let z = (f / (1.0 - f)).ln();
        theta0.push(if q == 0 { z } else { (z - prev).ln() });
        prev = z;
    }
    theta0.extend(std::iter::repeat_n(0.0, p));

    let fit = minimize(
        |params| polr_objective(params, &xs, y, n_classes, opts.ridge),
        &theta0,
        MinimizeOptions {
            tol: opts.tol,
            max_iter: opts.max_iter,
        },
    )?;
    if !fit.converged {
        return Err(Error::FitFailed(format!(
            "POLR did not converge: |grad|_inf = {:.3e} after {} iterations (objective {:.6})",
            fit.grad_norm(),
            fit.iterations,
            fit.value
        )));
    }
    let (theta, beta_s) = fit.x.split_at(n_classes - 1);
    if separates(&xs, y, n_classes, beta_s) {
        return Err(Error::FitFailed(
            "POLR training data are completely separated; the likelihood has no finite maximizer".into(),
        ));
    }
    let zeta_s = thresholds_from(theta);
    let coefficients: Vec<f64> = beta_s.iter().zip(&scale).map(|(b, s)| b / s).collect();
    let shift: f64 = beta_s
        .iter()
        .zip(center.iter().zip(&scale))
        .map(|(b, (m, s))| b * m / s)
        .sum();
    let thresholds: Vec<f64> = zeta_s.iter().map(|z| z + shift).collect();
    if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::FitFailed("POLR thresholds collapsed".into()));
    }
    Ok(PolrModel {
        thresholds,
        coefficients,
    })
}

/// True when the linear predictor puts every class strictly above the previous
/// one, in which case the unpenalized likelihood increases without bound along
/// `beta`.
fn separates(x: &DMatrix<f64>, y: &[usize], n_classes: usize, beta: &[f64]) -> bool {
    if beta.iter().all(|b| *b == 0.0) {
        return false;
    }
    let mut lo = vec![f64::INFINITY; n_classes];
    let mut hi = vec![f64::NEG_INFINITY; n_classes];
    for (i, &yi) in y.iter().enumerate() {
        let eta: f64 = beta.iter().enumerate().map(|(j, b)| b * x[(i, j)]).sum();
        lo[yi - 1] = lo[yi - 1].min(eta);
        hi[yi - 1] = hi[yi - 1].max(eta);
    }
    (1..n_classes).all(|q| hi[q - 1] < lo[q])
}

impl PolrModel {
    pub fn n_classes(&self) -> usize {
        self.thresholds.len() + 1
    }

    /// `P(y <= q | x)` for `q = 1..Q-1`.
    pub fn cumulative(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.coefficients.len() {
            return Err(Error::ShapeMismatch(format!(
                "POLR expects {} features, got {}",
                self.coefficients.len(),
                x.len()
            )));
        }
        let eta: f64 = self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum();
        Ok(self.thresholds.iter().map(|z| sigmoid(z - eta)).collect())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let cum = self.cumulative(x)?;
        let mut probs = Vec::with_capacity(cum.len() + 1);
        let mut prev = 0.0;
        for c in &cum {
            probs.push((c - prev).max(0.0));
            prev = *c;
        }
        probs.push((1.0 - prev).max(0.0));
        Ok(probs)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax_low(&self.predict_proba(x)?))
    }
}

/// POLR on a real-valued view of interval observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolrClassifier {
    pub recipe: FeatureRecipe,
    pub subsample_step: Option<usize>,
    pub model: PolrModel,
}

impl PolrClassifier {
    /// `Midpoints` gives the naive baseline, `Bounds` gives POLR-I.
    pub fn fit(
        data: &LabeledDataset,
        recipe: FeatureRecipe,
        subsample_step: Option<usize>,
        opts: PolrOptions,
    ) -> Result<Self> {
        data.require_all_classes()?;
        let x = feature_matrix(data.observations(), recipe, subsample_step)?;
        let model = polr_fit(&x, data.labels(), data.n_classes(), opts)?;
        Ok(PolrClassifier {
            recipe,
            subsample_step,
            model,
        })
    }

    pub fn predict_proba(&self, obs: &Observation) -> Result<Vec<f64>> {
        let v = vectorize(obs, self.subsample_step)?;
        self.model.predict_proba(&self.recipe.extract(&v))
    }
}

/// Two POLR models, one on the lower bounds and one on the upper bounds,
/// whose class probabilities are averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolrI2 {
    pub lower: PolrClassifier,
    pub upper: PolrClassifier,
}

impl PolrI2 {
    pub fn fit(data: &LabeledDataset, subsample_step: Option<usize>, opts: PolrOptions) -> Result<Self> {
        let side = |recipe, name: &str| {
            PolrClassifier::fit(data, recipe, subsample_step, opts).map_err(|e| match e {
                Error::FitFailed(msg) => Error::FitFailed(format!("{name}-bound model: {msg}")),
                other => other,
            })
        };
        Ok(PolrI2 {
            lower: side(FeatureRecipe::Lower, "lower")?,
            upper: side(FeatureRecipe::Upper, "upper")?,
        })
    }

    pub fn predict_proba(&self, obs: &Observation) -> Result<Vec<f64>> {
        let l = self.lower.predict_proba(obs)?;
        let u = self.upper.predict_proba(obs)?;
        Ok(average_probabilities(&l, &u))
    }
}

pub(crate) fn average_probabilities(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (x + y) / 2.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::IntervalVector;
    use crate::numeric::RngStream;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Draws `y` from the cumulative logit model with the given parameters.
    fn simulate(n: usize, zeta: &[f64], beta: &[f64], seed: u64) -> (DMatrix<f64>, Vec<usize>) {
        let mut rng = RngStream::new(seed).rng();
        let p = beta.len();
        let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
        let y = (0..n)
            .map(|i| {
                let eta: f64 = (0..p).map(|j| beta[j] * x[(i, j)]).sum();
                let u: f64 = rng.random();
                1 + zeta.iter().filter(|&&z| u > sigmoid(z - eta)).count()
            })
            .collect();
        (x, y)
    }

    #[test]
    fn hand_probabilities() {
        let m = PolrModel {
            thresholds: vec![0.0, 1.0],
            coefficients: vec![0.0],
        };
        let p = m.predict_proba(&[3.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.2311).abs() < 1e-4);
        assert!((p[2] - 0.2689).abs() < 1e-4);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(m.predict_proba(&[1.0, 2.0]).is_err());

        let steep = PolrModel {
            thresholds: vec![0.0, 1.0],
            coefficients: vec![1.0],
        };
        let far = steep.predict_proba(&[1e6]).unwrap();
        assert!(far[2] > 1.0 - 1e-12);
        assert_eq!(steep.predict(&[1e6]).unwrap(), 3);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (x, y) = simulate(60, &[-1.0, 0.2, 1.5], &[0.8, -0.4], 3);
        let mut rng = RngStream::new(99).rng();
        for _ in 0..20 {
            let params: Vec<f64> = (0..5).map(|_| rng.random_range(-1.5..1.5)).collect();
            let (_, g) = polr_objective(&params, &x, &y, 4, 0.3);
            for k in 0..params.len() {
                let h = 1e-5;
                let mut pp = params.clone();
                let mut pm = params.clone();
                pp[k] += h;
                pm[k] -= h;
                let fd = (polr_objective(&pp, &x, &y, 4, 0.3).0 - polr_objective(&pm, &x, &y, 4, 0.3).0) / (2.0 * h);
                let rel = (g[k] - fd).abs() / g[k].abs().max(fd.abs()).max(1.0);
                assert!(rel <= 1e-6, "param {k}: analytic {} vs fd {fd}", g[k]);
            }
        }
    }

    #[test]
    fn recovers_simulated_parameters() {
        let (x, y) = simulate(5000, &[-1.0, 1.0], &[1.0], 17);
        let m = polr_fit(&x, &y, 3, PolrOptions::default()).unwrap();
        assert!((m.thresholds[0] + 1.0).abs() < 0.1, "{m:?}");
        assert!((m.thresholds[1] - 1.0).abs() < 0.1, "{m:?}");
        assert!((m.coefficients[0] - 1.0).abs() < 0.1, "{m:?}");
    }

    #[test]
    fn pure_noise_reduces_to_class_frequencies() {
        let (x, y) = simulate(3000, &[-0.5, 0.7], &[0.0], 5);
        let m = polr_fit(&x, &y, 3, PolrOptions::default()).unwrap();
        let freq: Vec<f64> = (1..=3)
            .map(|q| y.iter().filter(|&&v| v == q).count() as f64 / y.len() as f64)
            .collect();
        let p = m.predict_proba(&[0.0]).unwrap();
        for q in 0..3 {
            assert!((p[q] - freq[q]).abs() < 0.02, "{p:?} vs {freq:?}");
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let x = DMatrix::from_fn(20, 1, |i, _| i as f64);
        assert!(polr_fit(&x, &[1; 20], 2, PolrOptions::default()).is_err());
    }

    #[test]
    fn separable_data_fails_to_converge() {
        let x = DMatrix::from_fn(40, 1, |i, _| i as f64);
        let y: Vec<usize> = (0..40).map(|i| if i < 20 { 1 } else { 2 }).collect();
        assert!(matches!(
            polr_fit(&x, &y, 2, PolrOptions::default()),
            Err(Error::FitFailed(_))
        ));
    }

    #[test]
    fn affine_rescaling_keeps_predictions() {
        let (x, y) = simulate(400, &[-1.0, 0.5], &[1.0, -0.5], 21);
        let (xt, _) = simulate(100, &[-1.0, 0.5], &[1.0, -0.5], 22);
        let a = polr_fit(&x, &y, 3, PolrOptions::default()).unwrap();
        let rescale = |m: &DMatrix<f64>| DMatrix::from_fn(m.nrows(), 2, |i, j| if j == 0 { 3.0 * m[(i, j)] + 10.0 } else { m[(i, j)] });
        let b = polr_fit(&rescale(&x), &y, 3, PolrOptions::default()).unwrap();
        let xt2 = rescale(&xt);
        for i in 0..xt.nrows() {
            let ra: Vec<f64> = xt.row(i).iter().copied().collect();
            let rb: Vec<f64> = xt2.row(i).iter().copied().collect();
            assert_eq!(a.predict(&ra).unwrap(), b.predict(&rb).unwrap());
        }
    }

    fn interval_data(seed: u64, degenerate: bool) -> LabeledDataset {
        let mut rng = RngStream::new(seed).rng();
        let mut obs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..150 {
            let y = 1 + i % 3;
            let c1 = y as f64 * 2.0 + rng.random_range(-1.5..1.5);
            let c2 = rng.random_range(0.0..5.0);
            let w = if degenerate { 0.0 } else { rng.random_range(0.5..2.0) };
            obs.push(IntervalVector::from_bounds(&[(c1 - w, c1 + w), (c2, c2 + w)]).unwrap().into());
            labels.push(y);
        }
        LabeledDataset::from_parts(obs, labels).unwrap()
    }

    #[test]
    fn polr_i_uses_both_bounds() {
        let data = interval_data(1, false);
        let m = PolrClassifier::fit(&data, FeatureRecipe::Bounds, None, PolrOptions::default()).unwrap();
        assert_eq!(m.model.coefficients.len(), 4);
        let correct = data
            .observations()
            .iter()
            .zip(data.labels())
            .filter(|(o, &y)| argmax_low(&m.predict_proba(o).unwrap()) == y)
            .count();
        assert!(correct as f64 / 150.0 > 1.0 / 3.0 + 0.2);

        let degenerate = interval_data(2, true);
        PolrClassifier::fit(&degenerate, FeatureRecipe::Midpoints, None, PolrOptions::default()).unwrap();
    }

    #[test]
    fn polr_i2_averages_sides() {
        let degenerate = interval_data(2, true);
        let m = PolrI2::fit(&degenerate, None, PolrOptions::default()).unwrap();
        for o in degenerate.observations().iter().take(10) {
            let pl = m.lower.predict_proba(o).unwrap();
            let pu = m.upper.predict_proba(o).unwrap();
            let p = m.predict_proba(o).unwrap();
            for q in 0..3 {
                assert!((pl[q] - pu[q]).abs() < 1e-9);
                assert!((p[q] - pl[q]).abs() < 1e-9);
            }
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let avg = average_probabilities(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]);
        assert_eq!(avg, vec![0.5, 0.0, 0.5]);
        assert_eq!(argmax_low(&avg), 1);
    }
}
