//! Small unconstrained minimizers: BFGS with Armijo backtracking, a
//! finite-difference Newton polish, and IRLS for logistic regression.

use nalgebra::{DMatrix, DVector};

/// A value and gradient, or None where the objective is undefined.
pub type Evaluation = Option<(f64, Vec<f64>)>;

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Convergence when the largest absolute gradient entry falls below this.
    pub grad_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub inverse_hessian: DMatrix<f64>,
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Central differences of an analytic gradient, symmetrized.
pub fn fd_hessian<F>(f: &mut F, x: &[f64]) -> Option<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Evaluation,
{
    let d = x.len();
    let mut h = DMatrix::zeros(d, d);
    let mut work = x.to_vec();
    for j in 0..d {
        let step = 1e-5 * (1.0 + x[j].abs());
        work[j] = x[j] + step;
        let (_, up) = f(&work)?;
        work[j] = x[j] - step;
        let (_, down) = f(&work)?;
        work[j] = x[j];
        for i in 0..d {
            h[(i, j)] = (up[i] - down[i]) / (2.0 * step);
        }
    }
    let sym = (&h + h.transpose()) * 0.5;
    sym.iter().all(|v| v.is_finite()).then_some(sym)
}

/// Inverse of a symmetric positive definite matrix, or None.
pub fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.inverse())
}

/// BFGS on the inverse Hessian, started from `h0` (identity when None).
pub fn bfgs<F>(mut f: F, x0: &[f64], h0: Option<DMatrix<f64>>, opts: &BfgsOptions) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> Evaluation,
{
    let d = x0.len();
    let identity = DMatrix::<f64>::identity(d, d);
    let mut h = h0.unwrap_or_else(|| identity.clone());
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g0) = f(x0)?;
    let mut g = DVector::from_vec(g0);
    let mut iterations = 0;
    let mut converged = false;
    let mut fresh = false;
    while iterations < opts.max_iter {
        if max_abs(g.as_slice()) <= opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut p = -(&h * &g);
        let mut slope = g.dot(&p);
        if !(slope < 0.0) {
            h = identity.clone();
            p = -g.clone();
            slope = g.dot(&p);
            fresh = true;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + &p * step;
            if let Some((ft, gt)) = f(trial.as_slice()) {
                // near the optimum f stops resolving progress, so a step that keeps f
                // within rounding and shrinks the gradient is also taken
                let armijo = ft <= fx + 1e-4 * step * slope;
                let flat = ft <= fx + 8.0 * f64::EPSILON * fx.abs().max(1.0) && max_abs(&gt) < max_abs(g.as_slice());
                if ft.is_finite() && (armijo || flat) {
                    accepted = Some((trial, ft, DVector::from_vec(gt)));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if fresh {
                break;
            }
            h = identity.clone();
            fresh = true;
            continue;
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← H − ρ(s·(Hy)ᵀ + (Hy)·sᵀ) + (ρ²yᵀHy + ρ)ssᵀ
            h -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
            h += (&s * s.transpose()) * (rho * rho * yhy + rho);
        }
        let stalled = (fx - f_new).abs() <= 1e-16 * fx.abs().max(1.0) && max_abs(s.as_slice()) <= 1e-14;
        x = x_new;
        fx = f_new;
        g = g_new;
        fresh = false;
        if stalled {
            converged = max_abs(g.as_slice()) <= opts.grad_tol;
            break;
        }
    }
    if !converged && max_abs(g.as_slice()) <= opts.grad_tol {
        converged = true;
    }
    Some(Minimum {
        x: x.as_slice().to_vec(),
        value: fx,
        gradient: g.as_slice().to_vec(),
        iterations,
        converged,
        inverse_hessian: h,
    })
}

/// Newton steps with a finite-difference Hessian, kept only while they lower
/// the gradient norm without raising the objective materially.
pub fn newton_polish<F>(mut f: F, start: Minimum, steps: usize, grad_tol: f64) -> Minimum
where
    F: FnMut(&[f64]) -> Evaluation,
{
    let mut best = start;
    for _ in 0..steps {
        if max_abs(&best.gradient) <= grad_tol * 1e-2 {
            break;
        }
        let Some(hess) = fd_hessian(&mut f, &best.x) else {
            break;
        };
        let g = DVector::from_column_slice(&best.gradient);
        let step = match hess.clone().cholesky() {
            Some(c) => c.solve(&g),
            None => match hess.clone().lu().solve(&g) {
                Some(s) => s,
                None => break,
            },
        };
        let trial: Vec<f64> = best.x.iter().zip(step.iter()).map(|(a, b)| a - b).collect();
        let Some((ft, gt)) = f(&trial) else {
            break;
        };
        let slack = 1e-12 * best.value.abs().max(1.0);
        if !(ft <= best.value + slack) || !(max_abs(&gt) < max_abs(&best.gradient)) {
            break;
        }
        if let Some(inv) = spd_inverse(&hess) {
            best.inverse_hessian = inv;
        }
        best.x = trial;
        best.value = ft;
        best.gradient = gt;
        best.iterations += 1;
        best.converged = max_abs(&best.gradient) <= grad_tol;
    }
    best
}

/// Logistic regression of `response` on `design` rows (intercept included by
/// the caller) by iteratively reweighted least squares.
pub fn logistic_irls(design: &[Vec<f64>], response: &[f64], max_iter: usize) -> Option<Vec<f64>> {
    let n = design.len();
    let p = design.first()?.len();
    let x = DMatrix::from_fn(n, p, |i, j| design[i][j]);
    let mut beta = DVector::zeros(p);
    for _ in 0..max_iter {
        let eta = &x * &beta;
        let mut grad = DVector::zeros(p);
        let mut info = DMatrix::zeros(p, p);
        for i in 0..n {
            let pr = crate::model::sigmoid(eta[i]);
            let w = pr * (1.0 - pr);
            let row = x.row(i);
            grad += row.transpose() * (response[i] - pr);
            info += row.transpose() * row * w;
        }
        let delta = info.cholesky()?.solve(&grad);
        beta += &delta;
        if !beta.iter().all(|v| v.is_finite()) || max_abs(beta.as_slice()) > 1e6 {
            return None;
        }
        if max_abs(delta.as_slice()) < 1e-10 {
            return Some(beta.as_slice().to_vec());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Evaluation {
        let (a, b) = (x[0], x[1]);
        let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        Some((v, g))
    }

    #[test]
    fn bfgs_solves_rosenbrock() {
        let m = bfgs(rosenbrock, &[-1.2, 1.0], None, &BfgsOptions::default()).unwrap();
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-8 && (m.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fd_hessian_of_quadratic() {
        let mut q = |x: &[f64]| Some((x[0] * x[0] + 3.0 * x[0] * x[1], vec![2.0 * x[0] + 3.0 * x[1], 3.0 * x[0]]));
        let h = fd_hessian(&mut q, &[0.3, -2.0]).unwrap();
        assert!((h[(0, 0)] - 2.0).abs() < 1e-8);
        assert!((h[(0, 1)] - 3.0).abs() < 1e-8);
        assert!(h[(1, 1)].abs() < 1e-8);
    }

    #[test]
    fn polish_reaches_tight_gradient() {
        let m = bfgs(rosenbrock, &[-1.2, 1.0], None, &BfgsOptions { max_iter: 500, grad_tol: 1e-3 }).unwrap();
        let p = newton_polish(rosenbrock, m, 5, 1e-12);
        assert!(max_abs(&p.gradient) < 1e-10);
    }

    #[test]
    fn irls_matches_closed_form_two_groups() {
        // group 0: 3 of 10 successes, group 1: 6 of 10
        let mut design = Vec::new();
        let mut y = Vec::new();
        for g in 0..2 {
            let hits = if g == 0 { 3 } else { 6 };
            for k in 0..10 {
                design.push(vec![1.0, g as f64]);
                y.push(if k < hits { 1.0 } else { 0.0 });
            }
        }
        let b = logistic_irls(&design, &y, 50).unwrap();
        let l0 = (0.3f64 / 0.7).ln();
        let l1 = (0.6f64 / 0.4).ln();
        assert!((b[0] - l0).abs() < 1e-9);
        assert!((b[1] - (l1 - l0)).abs() < 1e-9);
    }
}
