//! Parametric ordinal classifiers: cumulative-logit regression (POLR and its
//! interval variants), linear discriminant analysis of interval data with BIC
//! covariance selection, and the Frank-Hall decomposition.

mod fh;
mod ldaid;
mod polr;

pub use fh::{fh_assemble, fh_fit, BinaryFitter, BinaryModel, FhModel};
pub use ldaid::{CovarianceConfig, LdaIdFitter, LdaIdModel};
pub use polr::{
    polr_fit, polr_objective, PolrClassifier, PolrI2, PolrModel, PolrOptions, DEFAULT_RIDGE,
};

/// Index of the largest probability, ties to the lower class; returns the
/// 1-based class code.
pub fn argmax_low(probs: &[f64]) -> usize {
    let mut best = 0;
    for (q, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = q;
        }
    }
    best + 1
}
