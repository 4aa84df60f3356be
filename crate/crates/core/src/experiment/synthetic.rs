//! Synthetic interval data: bivariate normal seeds widened into rectangles.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{IntervalVector, LabeledDataset, Observation};
use crate::numeric::{mvn_sample, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub mean: [f64; 2],
    pub sd: [f64; 2],
    pub rho: f64,
}

impl ClassSpec {
    const fn uncorrelated(mean: [f64; 2], sd: [f64; 2]) -> Self {
        ClassSpec { mean, sd, rho: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDesign {
    pub name: String,
    /// In ordinal order, class 1 first.
    pub classes: Vec<ClassSpec>,
    pub per_class: usize,
    /// Interval widths are uniform on this range, independently per feature.
    pub width_range: (f64, f64),
}

impl SyntheticDesign {
    pub const NAMES: [&'static str; 2] = ["three_class", "four_class"];

    pub fn three_class() -> Self {
        SyntheticDesign {
            name: "three_class".into(),
            classes: vec![
                ClassSpec::uncorrelated([25.0, 50.0], [6.0, 3.0]),
                ClassSpec::uncorrelated([38.0, 40.0], [3.0, 3.0]),
                ClassSpec::uncorrelated([45.0, 35.0], [5.0, 5.0]),
            ],
            per_class: 100,
            width_range: (1.0, 5.0),
        }
    }

    pub fn four_class() -> Self {
        SyntheticDesign {
            name: "four_class".into(),
            classes: vec![
                ClassSpec::uncorrelated([25.0, 50.0], [6.0, 3.0]),
                ClassSpec::uncorrelated([30.0, 45.0], [5.0, 5.0]),
                ClassSpec::uncorrelated([38.0, 40.0], [3.0, 3.0]),
                ClassSpec::uncorrelated([45.0, 35.0], [2.0, 3.0]),
            ],
            per_class: 100,
            width_range: (1.0, 5.0),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "three_class" => Ok(Self::three_class()),
            "four_class" => Ok(Self::four_class()),
            other => Err(Error::InvalidParameter(format!(
                "unknown design {other:?}; expected one of {}",
                Self::NAMES.join(", ")
            ))),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn with_per_class(mut self, per_class: usize) -> Self {
        self.per_class = per_class;
        self
    }
}

/// Draws `per_class` observations per class. Each seed `(z1, z2)` becomes
/// `([z1 - g1/2, z1 + g1/2], [z2 - g2/2, z2 + g2/2])` with independent
/// uniform widths `g1, g2`.
pub fn gen_synthetic(design: &SyntheticDesign, rng: RngStream) -> Result<LabeledDataset> {
    let (w_lo, w_hi) = design.width_range;
    if !(w_lo >= 0.0 && w_lo <= w_hi) || design.per_class == 0 || design.classes.len() < 2 {
        return Err(Error::InvalidParameter(format!("invalid design {:?}", design.name)));
    }
    let mut rng = rng.rng();
    let n = design.per_class * design.classes.len();
    let mut observations: Vec<Observation> = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (q, spec) in design.classes.iter().enumerate() {
        for _ in 0..design.per_class {
            let z = mvn_sample(&mut rng, spec.mean, spec.sd, spec.rho)?;
            let g1 = rng.random_range(w_lo..=w_hi);
            let g2 = rng.random_range(w_lo..=w_hi);
            let v = IntervalVector::from_bounds(&[(z[0] - g1 / 2.0, z[0] + g1 / 2.0), (z[1] - g2 / 2.0, z[1] + g2 / 2.0)])?;
            observations.push(v.into());
            labels.push(q + 1);
        }
    }
    let ids = (1..=n).map(|i| format!("s{i}")).collect();
    LabeledDataset::new(ids, observations, labels, design.classes.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_widths() {
        let d = gen_synthetic(&SyntheticDesign::three_class(), RngStream::new(1)).unwrap();
        assert_eq!(d.len(), 300);
        assert_eq!(d.class_counts(), vec![100, 100, 100]);
        for o in d.observations() {
            for x in o.as_vector().unwrap().iter() {
                assert!((1.0..=5.0).contains(&x.width()), "{x:?}");
            }
        }
        let four = gen_synthetic(&SyntheticDesign::four_class(), RngStream::new(1)).unwrap();
        assert_eq!(four.len(), 400);
        assert!(SyntheticDesign::by_name("five_class").is_err());
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let a = gen_synthetic(&SyntheticDesign::four_class(), RngStream::new(9)).unwrap();
        let b = gen_synthetic(&SyntheticDesign::four_class(), RngStream::new(9)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn seed_moments_match_design() {
        let design = SyntheticDesign::three_class().with_per_class(10_000);
        let d = gen_synthetic(&design, RngStream::new(3)).unwrap();
        for (q, spec) in design.classes.iter().enumerate() {
            let mids: Vec<[f64; 2]> = d
                .observations()
                .iter()
                .zip(d.labels())
                .filter(|(_, &y)| y == q + 1)
                .map(|(o, _)| {
                    let v = o.as_vector().unwrap();
                    [v[0].midpoint(), v[1].midpoint()]
                })
                .collect();
            let n = mids.len() as f64;
            for j in 0..2 {
                let mean = mids.iter().map(|m| m[j]).sum::<f64>() / n;
                let var = mids.iter().map(|m| (m[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                assert!((mean - spec.mean[j]).abs() < 0.2, "class {} mean {mean}", q + 1);
                assert!((var / spec.sd[j].powi(2) - 1.0).abs() < 0.15, "class {} var {var}", q + 1);
            }
        }
    }
}
