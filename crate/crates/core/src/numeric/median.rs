use crate::error::{Error, Result};

/// Weighted median of ordinal class codes: the smallest class whose
/// cumulative weight, in class order, reaches half of the total weight.
///
/// The comparison allows a relative slack of `1e-12` so that exact ties, which
/// summation order can push either way, resolve to the lower class.
pub fn weighted_median(classes: &[usize], weights: &[f64]) -> Result<usize> {
    if classes.len() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} classes and {} weights",
            classes.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter("weights must be finite and >= 0".into()));
    }
    let mut pairs: Vec<(usize, f64)> = classes.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by_key(|p| p.0);
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("total weight must be positive".into()));
    }
    let half = total / 2.0 - 1e-12 * total;
    let mut cumulative = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let class = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == class {
            cumulative += pairs[i].1;
            i += 1;
        }
        if cumulative >= half {
            return Ok(class);
        }
    }
    // rounding can leave the last class marginally short
    Ok(pairs[pairs.len() - 1].0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::RngStream;
    use rand::Rng;

    /// Exhaustive search for the L1 minimizer over every candidate class,
    /// ties to the lowest.
    fn brute_force(classes: &[usize], weights: &[f64], q: usize) -> usize {
        let cost = |m: usize| -> f64 {
            classes
                .iter()
                .zip(weights)
                .map(|(&c, &w)| w * (c as f64 - m as f64).abs())
                .sum()
        };
        let mut best = (1, cost(1));
        for m in 2..=q {
            let c = cost(m);
            if c < best.1 {
                best = (m, c);
            }
        }
        best.0
    }

    #[test]
    fn hand_cases() {
        assert_eq!(weighted_median(&[1, 2, 3], &[1.0, 1.0, 1.0]).unwrap(), 2);
        assert_eq!(weighted_median(&[1, 2, 3], &[5.0, 1.0, 1.0]).unwrap(), 1);
        assert_eq!(weighted_median(&[3, 1], &[1.0, 1.0]).unwrap(), 1);
        assert!(weighted_median(&[1, 2], &[0.0, 0.0]).is_err());
        assert!(weighted_median(&[1, 2], &[1.0]).is_err());
    }

    #[test]
    fn agrees_with_brute_force() {
        let mut rng = RngStream::new(2024).rng();
        for _ in 0..10_000 {
            let q = rng.random_range(2..=7);
            let n = rng.random_range(1..=12);
            let classes: Vec<usize> = (0..n).map(|_| rng.random_range(1..=q)).collect();
            let weights: Vec<f64> = (0..n)
                .map(|_| if rng.random_bool(0.3) { rng.random_range(0..3) as f64 } else { rng.random::<f64>() })
                .collect();
            if weights.iter().sum::<f64>() == 0.0 {
                continue;
            }
            assert_eq!(
                weighted_median(&classes, &weights).unwrap(),
                brute_force(&classes, &weights, q),
                "{classes:?} {weights:?}"
            );
        }
    }
}
