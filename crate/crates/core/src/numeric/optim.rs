use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    /// Stop when `||grad||_inf <= tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl Minimum {
    pub fn grad_norm(&self) -> f64 {
        inf_norm(&self.grad)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const APPROX_EPS: f64 = 1e-10;

/// Approximate Wolfe conditions: near the optimum the Armijo decrease drops
/// below the resolution of `f`, so a step is also accepted when `f` does not
/// rise beyond rounding and the directional derivative has shrunk.
fn approx_wolfe(f0: f64, slope0: f64, f: f64, slope: f64) -> bool {
    f <= f0 + APPROX_EPS * f0.abs() && slope >= 0.9 * slope0 && slope <= -0.8 * slope0
}

/// BFGS with a backtracking Armijo line search.
///
/// `objective(x)` returns the value and the gradient. Accepted steps never
/// increase the objective beyond rounding. Hitting `max_iter`, or a line search that cannot
/// make progress, returns with `converged == false`.
pub fn minimize<F>(mut objective: F, x0: &[f64], opts: MinimizeOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = objective(&x);
    check_finite(fx, &g)?;

    // inverse Hessian approximation, row-major
    let mut h = identity(n);
    let mut first_step = true;

    for iter in 0..opts.max_iter {
        if inf_norm(&g) <= opts.tol {
            return Ok(Minimum { x, value: fx, grad: g, iterations: iter, converged: true });
        }
        let mut d = mat_vec(&h, &g, n);
        d.iter_mut().for_each(|v| *v = -*v);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            h = identity(n);
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut step = if first_step { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = objective(&trial);
            let finite = ft.is_finite() && gt.iter().all(|v| v.is_finite());
            if finite && (ft <= fx + ARMIJO * step * slope || approx_wolfe(fx, slope, ft, dot(&gt, &d))) {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            return Ok(Minimum { x, value: fx, grad: g, iterations: iter, converged: false });
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if first_step {
                let scale = sy / dot(&y, &y);
                h = identity(n);
                h.iter_mut().for_each(|v| *v *= scale);
            }
            bfgs_update(&mut h, &s, &y, sy, n);
            first_step = false;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    let converged = inf_norm(&g) <= opts.tol;
    Ok(Minimum { x, value: fx, grad: g, iterations: opts.max_iter, converged })
}

fn check_finite(f: f64, g: &[f64]) -> Result<()> {
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure(
            "objective or gradient is not finite at the starting point".into(),
        ));
    }
    Ok(())
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

fn mat_vec(h: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| dot(&h[i * n..(i + 1) * n], v)).collect()
}

/// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y, n);
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ];
        (f, g)
    }

    fn central_diff<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                (f(&xp) - f(&xm)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn quadratic_bowl() {
        for x0 in [vec![3.0, -4.0, 10.0], vec![-1e3, 1e-3, 7.0]] {
            let m = minimize(
                |x| (x.iter().map(|v| v * v).sum(), x.iter().map(|v| 2.0 * v).collect()),
                &x0,
                MinimizeOptions::default(),
            )
            .unwrap();
            assert!(m.converged);
            assert!(m.x.iter().all(|v| v.abs() < 1e-8), "{:?}", m.x);
        }
    }

    #[test]
    fn rosenbrock_from_classic_start() {
        let m = minimize(rosenbrock, &[-1.2, 1.0], MinimizeOptions::default()).unwrap();
        assert!(m.converged, "{m:?}");
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn rosenbrock_gradient_matches_finite_differences() {
        for x in [[-1.2, 1.0], [0.3, -0.7], [2.0, 4.1]] {
            let (_, g) = rosenbrock(&x);
            let fd = central_diff(|p| rosenbrock(p).0, &x, 1e-6);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn inconsistent_gradient_is_caught_by_finite_differences() {
        // gradient off by a factor of two
        let bad = |x: &[f64]| (x[0] * x[0], vec![4.0 * x[0]]);
        let (_, g) = bad(&[1.5]);
        let fd = central_diff(|p| bad(p).0, &[1.5], 1e-6);
        assert!((g[0] - fd[0]).abs() > 1e-3);
    }

    #[test]
    fn objective_never_increases() {
        let mut values = Vec::new();
        let m = minimize(
            |x| {
                let r = rosenbrock(x);
                values.push(r.0);
                r
            },
            &[-1.2, 1.0],
            MinimizeOptions { tol: 1e-10, max_iter: 500 },
        )
        .unwrap();
        assert!(m.value <= values[0]);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let r = minimize(|_| (f64::NAN, vec![0.0]), &[0.0], MinimizeOptions::default());
        assert!(matches!(r, Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn unbounded_objective_reports_non_convergence() {
        let m = minimize(|x| (-x[0], vec![-1.0]), &[0.0], MinimizeOptions { tol: 1e-8, max_iter: 20 }).unwrap();
        assert!(!m.converged);
    }
}
