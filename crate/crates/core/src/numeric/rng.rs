use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A reproducible random stream identified by `(seed, stream)`.
///
/// Streams are never shared between workers. Independent work gets a child
/// stream from [`RngStream::derive`], so the draws of one consumer do not
/// depend on how many others exist or in which order they run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    seed: u64,
    stream: u64,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Child stream for the sub-task `label`.
    pub fn derive(&self, label: u64) -> RngStream {
        RngStream {
            seed: splitmix64(self.seed ^ splitmix64(self.stream)),
            stream: label,
        }
    }

    /// Child stream keyed by a name.
    pub fn derive_named(&self, name: &str) -> RngStream {
        self.derive(label_hash(name))
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// FNV-1a hash of a name, stable across platforms and releases.
pub fn label_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// One draw from a bivariate normal with standard deviations `sigma` and
/// correlation `rho`, through the Cholesky factor of the covariance.
pub fn mvn_sample<R: rand::Rng + ?Sized>(
    rng: &mut R,
    mean: [f64; 2],
    sigma: [f64; 2],
    rho: f64,
) -> Result<[f64; 2]> {
    if !(sigma[0] > 0.0 && sigma[1] > 0.0) || !(rho.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "invalid bivariate covariance: sigma = {sigma:?}, rho = {rho}"
        )));
    }
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    Ok([
        mean[0] + sigma[0] * z1,
        mean[1] + sigma[1] * (rho * z1 + (1.0 - rho * rho).sqrt() * z2),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_stream_same_draws() {
        let a: Vec<u64> = RngStream::new(42).derive(3).rng().random_iter().take(16).collect();
        let b: Vec<u64> = RngStream::new(42).derive(3).rng().random_iter().take(16).collect();
        let c: Vec<u64> = RngStream::new(42).derive(4).rng().random_iter().take(16).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(RngStream::new(1).derive(0), RngStream::new(2).derive(0));
    }

    #[test]
    fn mvn_rejects_bad_covariance() {
        let mut rng = RngStream::new(0).rng();
        assert!(mvn_sample(&mut rng, [0.0, 0.0], [0.0, 1.0], 0.0).is_err());
        assert!(mvn_sample(&mut rng, [0.0, 0.0], [1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn mvn_law_of_large_numbers() {
        let mut rng = RngStream::new(7).rng();
        let n = 100_000;
        let draws: Vec<[f64; 2]> = (0..n)
            .map(|_| mvn_sample(&mut rng, [25.0, 50.0], [6.0, 3.0], 0.0).unwrap())
            .collect();
        let nf = n as f64;
        let m0 = draws.iter().map(|d| d[0]).sum::<f64>() / nf;
        let m1 = draws.iter().map(|d| d[1]).sum::<f64>() / nf;
        let cov = draws.iter().map(|d| (d[0] - m0) * (d[1] - m1)).sum::<f64>() / nf;
        let v0 = draws.iter().map(|d| (d[0] - m0).powi(2)).sum::<f64>() / nf;
        let v1 = draws.iter().map(|d| (d[1] - m1).powi(2)).sum::<f64>() / nf;
        assert!((m0 - 25.0).abs() < 0.1, "{m0}");
        assert!((m1 - 50.0).abs() < 0.1, "{m1}");
        assert!((cov / (v0 * v1).sqrt()).abs() < 0.02);
    }

    #[test]
    fn mvn_correlation_is_honored() {
        let mut rng = RngStream::new(9).rng();
        let n = 50_000;
        let draws: Vec<[f64; 2]> = (0..n)
            .map(|_| mvn_sample(&mut rng, [0.0, 0.0], [2.0, 1.0], 0.6).unwrap())
            .collect();
        let nf = n as f64;
        let cov = draws.iter().map(|d| d[0] * d[1]).sum::<f64>() / nf;
        assert!((cov - 0.6 * 2.0).abs() < 0.05, "{cov}");
    }
}
