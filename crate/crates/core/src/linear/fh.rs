//! Frank-Hall reduction of a `Q`-class ordinal problem to `Q - 1` binary
//! problems `y <= q` versus `y > q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{LabeledDataset, Observation};
use crate::par::try_map_indexed;

/// Learner for the binary sub-problems. Labels passed in are `1` (lower) and
/// `2` (upper).
pub trait BinaryFitter: Sync {
    type Model: BinaryModel + Send;

    fn fit_binary(&self, data: &LabeledDataset) -> Result<Self::Model>;
}

pub trait BinaryModel {
    /// Probability of the upper side, `P(y > q)`.
    fn prob_upper(&self, obs: &Observation) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FhModel<M> {
    /// Sub-model `q - 1` separates `y <= q` from `y > q`.
    pub splits: Vec<M>,
}

/// Class probabilities from the exceedance probabilities `p_q = P(y > q)`.
///
/// `P_1 = 1 - p_1`, `P_q = p_{q-1} - p_q`, `P_Q = p_{Q-1}`; negative values are
/// clipped to zero and the result renormalized.
pub fn fh_assemble(exceed: &[f64]) -> Vec<f64> {
    let q = exceed.len() + 1;
    let mut probs = Vec::with_capacity(q);
    probs.push(1.0 - exceed[0]);
    for w in exceed.windows(2) {
        probs.push(w[0] - w[1]);
    }
    probs.push(exceed[exceed.len() - 1]);
    probs.iter_mut().for_each(|p| *p = p.max(0.0));
    let total: f64 = probs.iter().sum();
    if total > 0.0 {
        probs.iter_mut().for_each(|p| *p /= total);
    } else {
        probs.iter_mut().for_each(|p| *p = 1.0 / q as f64);
    }
    probs
}

/// Fits the `Q - 1` binary models, in parallel where available.
pub fn fh_fit<F: BinaryFitter>(data: &LabeledDataset, fitter: &F) -> Result<FhModel<F::Model>> {
    data.require_all_classes()?;
    let q = data.n_classes();
    let splits = try_map_indexed(q - 1, |s| {
        let split = s + 1;
        let labels: Vec<usize> = data.labels().iter().map(|&y| if y <= split { 1 } else { 2 }).collect();
        if !labels.contains(&1) || !labels.contains(&2) {
            return Err(Error::EmptySplit { split });
        }
        let binary = data.relabel(labels, 2)?;
        fitter.fit_binary(&binary).map_err(|e| match e {
            e if e.is_numerical() => Error::FitFailed(format!("Frank-Hall split {split}: {e}")),
            other => other,
        })
    })?;
    Ok(FhModel { splits })
}

impl<M: BinaryModel> FhModel<M> {
    pub fn n_classes(&self) -> usize {
        self.splits.len() + 1
    }

    pub fn exceedance(&self, obs: &Observation) -> Result<Vec<f64>> {
        self.splits.iter().map(|m| m.prob_upper(obs)).collect()
    }

    pub fn predict_proba(&self, obs: &Observation) -> Result<Vec<f64>> {
        Ok(fh_assemble(&self.exceedance(obs)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::IntervalVector;
    use crate::linear::{argmax_low, LdaIdFitter};
    use crate::numeric::RngStream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn assembly_hand_cases() {
        let p = fh_assemble(&[0.9, 0.4]);
        for (a, b) in p.iter().zip(&[0.1, 0.5, 0.4]) {
            assert!((a - b).abs() < 1e-12, "{p:?}");
        }
        // non-monotone exceedances: middle class clipped
        let p = fh_assemble(&[0.3, 0.6]);
        for (a, b) in p.iter().zip(&[0.7 / 1.3, 0.0, 0.6 / 1.3]) {
            assert!((a - b).abs() < 1e-12, "{p:?}");
        }
        assert!((p[0] - 0.538).abs() < 1e-3 && (p[2] - 0.462).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn assembly_lies_on_simplex(exceed in prop::collection::vec(0.0f64..=1.0, 1..8)) {
            let p = fh_assemble(&exceed);
            prop_assert_eq!(p.len(), exceed.len() + 1);
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    struct Constant(f64);

    impl BinaryModel for Constant {
        fn prob_upper(&self, _: &Observation) -> Result<f64> {
            Ok(self.0)
        }
    }

    struct Failing;

    impl BinaryFitter for Failing {
        type Model = Constant;

        fn fit_binary(&self, data: &LabeledDataset) -> Result<Constant> {
            if data.class_counts()[0] > 2 {
                Err(Error::SingularCovariance)
            } else {
                Ok(Constant(0.5))
            }
        }
    }

    fn dataset(labels: Vec<usize>, n_classes: usize) -> LabeledDataset {
        let obs = labels
            .iter()
            .enumerate()
            .map(|(i, _)| IntervalVector::from_bounds(&[(i as f64, i as f64 + 1.0)]).unwrap().into())
            .collect();
        let ids = (0..labels.len()).map(|i| i.to_string()).collect();
        LabeledDataset::new(ids, obs, labels, n_classes).unwrap()
    }

    #[test]
    fn failing_split_is_named() {
        let data = dataset(vec![1, 1, 2, 3, 3, 3], 3);
        match fh_fit(&data, &Failing) {
            Err(Error::FitFailed(msg)) => assert!(msg.contains("split 2"), "{msg}"),
            other => panic!("unexpected {:?}", other.map(|m| m.splits.len())),
        }
    }

    #[test]
    fn missing_class_is_rejected() {
        let data = dataset(vec![1, 1, 3, 3], 3);
        assert!(fh_fit(&data, &Failing).is_err());
    }

    #[test]
    fn constant_models_give_uniform_middle() {
        let m = FhModel { splits: vec![Constant(0.75), Constant(0.25)] };
        let o: Observation = IntervalVector::from_bounds(&[(0.0, 1.0)]).unwrap().into();
        assert_eq!(m.predict_proba(&o).unwrap(), vec![0.25, 0.5, 0.25]);
    }

    #[test]
    fn lda_splits_classify_ordered_groups() {
        let mut rng = RngStream::new(8).rng();
        let mut obs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..240 {
            let y = 1 + i % 4;
            let c = 3.0 * y as f64 + rng.random_range(-1.0..1.0);
            let w = rng.random_range(0.5..1.5);
            obs.push(IntervalVector::from_bounds(&[(c - w, c + w)]).unwrap().into());
            labels.push(y);
        }
        let data = LabeledDataset::from_parts(obs, labels).unwrap();
        let m = fh_fit(&data, &LdaIdFitter::default()).unwrap();
        assert_eq!(m.n_classes(), 4);
        let correct = data
            .observations()
            .iter()
            .zip(data.labels())
            .filter(|(o, &y)| argmax_low(&m.predict_proba(o).unwrap()) == y)
            .count();
        assert!(correct >= 216, "{correct}/240");
    }
}
