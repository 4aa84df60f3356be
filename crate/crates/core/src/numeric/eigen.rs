use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, in the order of `values`.
    /// The largest-magnitude component of each column is positive.
    pub vectors: DMatrix<f64>,
}

const SYMMETRY_TOL: f64 = 1e-10;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigen-decomposition.
///
/// Sweeps over every `(p, q)` pair until the off-diagonal Frobenius norm is at
/// most `1e-12 * ||A||_F`.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "eigen-decomposition of a {}x{} matrix",
            n,
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("matrix has non-finite entries".into()));
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let asym = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .fold(0.0f64, |m, (i, j)| m.max((a[(i, j)] - a[(j, i)]).abs()));
    if asym > SYMMETRY_TOL * scale.max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }

    // Row-major working copies; `m` is kept exactly symmetric.
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    // `v` stores eigenvectors as rows so both updates touch contiguous memory.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let frob = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = OFF_DIAGONAL_TOL * frob;
    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * m[i * n + j] * m[i * n + j];
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&m) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // skip rotations that cannot change the diagonal at working precision
                if apq.abs() < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) && sweeps > 3 {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, n, p, q, c, s);
                // rotation zeroes (p, q) analytically
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                for k in 0..n {
                    let vp = v[p * n + k];
                    let vq = v[q * n + k];
                    v[p * n + k] = c * vp - s * vq;
                    v[q * n + k] = s * vp + c * vq;
                }
            }
        }
        converged = off_norm(&m) <= target;
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let row = &v[i * n..(i + 1) * n];
        let pivot = row
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (k, x)| if x.abs() > best.1.abs() { (k, *x) } else { best });
        let sign = if pivot.1 < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors[(k, col)] = sign * row[k];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Applies `J^T M J` for the Givens rotation in the `(p, q)` plane, except for
/// the 2x2 block which the caller sets directly.
#[inline]
fn rotate(m: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let mkp = m[k * n + p];
        let mkq = m[k * n + q];
        let new_p = c * mkp - s * mkq;
        let new_q = s * mkp + c * mkq;
        m[k * n + p] = new_p;
        m[p * n + k] = new_p;
        m[k * n + q] = new_q;
        m[q * n + k] = new_q;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::RngStream;
    use rand::Rng;

    fn inf_norm(a: &DMatrix<f64>) -> f64 {
        a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn check_decomposition(a: &DMatrix<f64>) {
        let e = sym_eigen(a).unwrap();
        let n = a.nrows();
        let norm = inf_norm(a);
        for w in e.values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for (j, &lambda) in e.values.iter().enumerate() {
            let v = e.vectors.column(j);
            let residual = a * v - v * lambda;
            assert!(residual.amax() <= 1e-9 * norm);
            let pivot = v.iter().fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
            assert!(pivot > 0.0);
        }
        let vtv = e.vectors.transpose() * &e.vectors;
        assert!(inf_norm(&(vtv - DMatrix::identity(n, n))) <= 1e-10);
        let trace: f64 = a.diagonal().iter().sum();
        assert!((trace - e.values.iter().sum::<f64>()).abs() <= 1e-8 * norm.max(1.0));
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
        let recon = &e.vectors * lambda * e.vectors.transpose();
        assert!(inf_norm(&(recon - a)) <= 1e-8 * norm);
    }

    #[test]
    fn identity_and_diagonal() {
        let e = sym_eigen(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);

        let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let e = sym_eigen(&d).unwrap();
        assert_eq!(e.values, vec![2.0, 1.0]);
        assert_eq!(e.vectors.column(0).as_slice(), &[0.0, 1.0]);
        assert_eq!(e.vectors.column(1).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn rejects_asymmetric() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(sym_eigen(&a), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn random_symmetric_residuals() {
        for seed in 0..5 {
            let mut rng = RngStream::new(seed).rng();
            let n = 20;
            let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let a = &b + b.transpose();
            check_decomposition(&a);
        }
    }

    #[test]
    fn agrees_with_nalgebra_spectrum() {
        let mut rng = RngStream::new(11).rng();
        let n = 30;
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-3.0..3.0));
        let a = &b * b.transpose() - DMatrix::identity(n, n) * 10.0;
        let ours = sym_eigen(&a).unwrap().values;
        let mut reference: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
        reference.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in ours.iter().zip(&reference) {
            assert!((x - y).abs() < 1e-9 * inf_norm(&a), "{x} vs {y}");
        }
        check_decomposition(&a);
    }

    #[test]
    fn repeated_eigenvalues_and_rank_deficiency() {
        let u = DMatrix::from_row_slice(4, 1, &[1.0, 2.0, -1.0, 0.5]);
        let a = &u * u.transpose();
        check_decomposition(&a);
        let e = sym_eigen(&a).unwrap();
        assert!((e.values[0] - 6.25).abs() < 1e-12);
        assert!(e.values[1..].iter().all(|v| v.abs() < 1e-12));
    }
}
