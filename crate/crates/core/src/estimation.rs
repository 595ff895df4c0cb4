//! Maximum likelihood fit of (η, θ), the response-mean estimator μ̂ and its
//! plug-in variance, the likelihood-ratio statistic and BIC.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::likelihood::{el_weights_from_t, ell1, ProfileLikelihood};
use crate::model::{check_eta, logit, normal_c_xi_gradient, normal_log_density, sigmoid};
use crate::model::{ModelSpec, OutcomeModel, Theta};
use crate::optimize::{bfgs, fd_hessian, logistic_irls, max_abs, newton_polish, spd_inverse, BfgsOptions};
use crate::rng::substream;

/// ℓ₂ score given to parameter values outside the EL-feasible region.
pub const INFEASIBLE_LOGLIK: f64 = -1e30;
/// V̂ is treated as singular above this condition number.
pub const MAX_CONDITION: f64 = 1e12;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub multistarts: usize,
    /// Tolerance on the largest entry of ∇ℓ₂/n.
    pub tol: f64,
    pub max_iter: usize,
    /// Seed for the perturbed starting points.
    pub seed: u64,
    /// Run every start and keep the best, instead of stopping at the first converged one.
    pub exhaustive: bool,
    /// Warm start replacing the default initializer for the first start.
    pub start: Option<Theta>,
    /// Inverse Hessian of −ℓ₂/n to seed BFGS at the warm start.
    pub inverse_hessian: Option<DMatrix<f64>>,
    /// Compute V̂, the θ covariance, μ̂ and σ̂².
    pub inference: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            multistarts: 5,
            tol: 1e-9,
            max_iter: 500,
            seed: 0,
            exhaustive: false,
            start: None,
            inverse_hessian: None,
            inference: true,
        }
    }
}

impl FitOptions {
    /// Options for a refit warm-started at an earlier solution.
    pub fn warm(fit: &FitResult) -> Self {
        Self {
            start: Some(fit.theta_hat.clone()),
            inverse_hessian: Some(fit.inverse_hessian.clone()),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub theta_hat: Theta,
    pub eta_hat: f64,
    pub lambda_hat: f64,
    pub lambda_degenerate: bool,
    pub ell1: f64,
    pub ell2: f64,
    pub weights: Vec<f64>,
    pub n: usize,
    pub n1: usize,
    /// V̂⁻¹ − {η̂(1 − η̂)}⁻¹e₁e₁ᵀ, absent when V̂ is singular.
    pub theta_cov: Option<Vec<Vec<f64>>>,
    pub vhat_condition: Option<f64>,
    pub singular_vhat: bool,
    pub mu_hat: Option<f64>,
    pub sigma2_hat: Option<f64>,
    pub mu_se: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub multistart_index: usize,
    pub grad_norm: f64,
    #[serde(skip)]
    pub inverse_hessian: DMatrix<f64>,
}

impl FitResult {
    pub fn d_theta(&self) -> usize {
        self.theta_hat.dim()
    }

    pub fn loglik(&self) -> f64 {
        self.ell1 + self.ell2
    }
}

fn objective<'p>(
    prof: &'p ProfileLikelihood<'p>,
    lambda_hint: &'p Cell<Option<f64>>,
) -> impl FnMut(&[f64]) -> Option<(f64, Vec<f64>)> + 'p {
    let n = prof.design().n() as f64;
    move |x: &[f64]| {
        let eval = prof.evaluate(x, lambda_hint.get(), true).ok()?;
        if !eval.lambda.degenerate {
            lambda_hint.set(Some(eval.lambda.lambda));
        }
        let grad = eval.gradient?.into_iter().map(|g| -g / n).collect();
        Some((-eval.ell2 / n, grad))
    }
}

/// ℓ₂(θ), with infeasible θ scored as [`INFEASIBLE_LOGLIK`].
pub fn ell2_or_infeasible(prof: &ProfileLikelihood<'_>, theta: &[f64]) -> f64 {
    prof.evaluate(theta, None, false)
        .map(|e| e.ell2)
        .unwrap_or(INFEASIBLE_LOGLIK)
}

/// Complete-case maximum likelihood estimate of ξ.
pub fn complete_case_xi(data: &Dataset, spec: &ModelSpec) -> Result<Vec<f64>> {
    let observed: Vec<usize> = (0..data.n()).filter(|&i| data.observed(i)).collect();
    if observed.is_empty() {
        return Err(Error::DegenerateData("no observed responses".into()));
    }
    let start = match &spec.outcome {
        OutcomeModel::Normal(nb) => {
            let dm = nb.mean.len();
            let mut xi = vec![0.0; nb.n_params()];
            let ys: Vec<f64> = observed.iter().map(|&i| data.y(i).unwrap()).collect();
            let ybar = ys.iter().sum::<f64>() / ys.len() as f64;
            let intercept = nb.mean.terms.iter().position(|t| t.is_intercept());
            match nb.link {
                crate::model::MeanLink::Identity => {
                    let x = DMatrix::from_fn(observed.len(), dm, |r, c| nb.mean.terms[c].eval(data.row(observed[r])));
                    let y = DVector::from_column_slice(&ys);
                    if let Ok(b) = x.clone().svd(true, true).solve(&y, 1e-12) {
                        xi[..dm].copy_from_slice(b.as_slice());
                    }
                }
                crate::model::MeanLink::Log => {
                    if let Some(j) = intercept {
                        xi[j] = ybar.abs().max(1e-3).ln();
                    }
                }
            }
            let resid: f64 = observed
                .iter()
                .zip(&ys)
                .map(|(&i, y)| {
                    let (mu, _) = nb.mean_var(data.row(i), &xi);
                    (y - mu).powi(2)
                })
                .sum::<f64>()
                / ys.len() as f64;
            if let Some(j) = nb.logvar.terms.iter().position(|t| t.is_intercept()) {
                xi[dm + j] = resid.max(1e-8).ln();
            }
            xi
        }
        OutcomeModel::Generic(g) => g.initial_params(),
    };
    let m = observed.len() as f64;
    let f = |xi: &[f64]| {
        let mut value = 0.0;
        let mut grad = vec![0.0; xi.len()];
        for &i in &observed {
            let (x, y) = (data.row(i), data.y(i).unwrap());
            value -= spec.outcome.log_f(y, x, xi);
            for (g, s) in grad.iter_mut().zip(spec.outcome.score(y, x, xi)) {
                *g -= s;
            }
        }
        value.is_finite().then(|| (value / m, grad.into_iter().map(|g| g / m).collect()))
    };
    let opts = BfgsOptions {
        max_iter: 500,
        grad_tol: 1e-8,
    };
    match bfgs(f, &start, None, &opts) {
        Some(min) if min.x.iter().all(|v| v.is_finite()) => Ok(min.x),
        _ => Ok(start),
    }
}

/// θ⁰: complete-case ξ, logistic regression of 1 − d on x_p for (α, β), γ = 0.
pub fn initial_theta(data: &Dataset, spec: &ModelSpec) -> Result<Theta> {
    let xi = complete_case_xi(data, spec)?;
    let eta = data.n1() as f64 / data.n() as f64;
    let design: Vec<Vec<f64>> = data
        .rows()
        .map(|row| std::iter::once(1.0).chain(spec.propensity.iter().map(|&j| row[j])).collect())
        .collect();
    let missing: Vec<f64> = (0..data.n()).map(|i| if data.observed(i) { 0.0 } else { 1.0 }).collect();
    let coef = logistic_irls(&design, &missing, 100).unwrap_or_else(|| {
        let mut c = vec![0.0; 1 + spec.d_beta()];
        c[0] = logit(1.0 - eta);
        c
    });
    // logit pr(D = 0 | x) = α* + x_pᵀβ at γ = 0, and α = α* + logit η
    Ok(Theta::new(coef[0] + logit(eta), coef[1..].to_vec(), 0.0, xi))
}

fn perturbed(base: &Theta, k: usize, seed: u64) -> Theta {
    let mut rng = substream(seed, k as u64);
    let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
    Theta {
        alpha: base.alpha + 0.3 * z(),
        beta: base.beta.iter().map(|b| b + 0.3 * z()).collect(),
        gamma: base.gamma + 0.5 * z(),
        xi: base.xi.iter().map(|x| x + 0.1 * z()).collect(),
    }
}

struct Candidate {
    x: Vec<f64>,
    value: f64,
    grad_norm: f64,
    iterations: usize,
    converged: bool,
    start: usize,
    inverse_hessian: DMatrix<f64>,
}

fn optimize_from(
    prof: &ProfileLikelihood<'_>,
    x0: &[f64],
    h0: Option<DMatrix<f64>>,
    opts: &FitOptions,
    start: usize,
) -> Option<Candidate> {
    let design = prof.design();
    let hint = Cell::new(Some((design.n() - design.n1()) as f64 / design.n() as f64));
    let mut f = objective(prof, &hint);
    f(x0)?;
    let h0 = h0.or_else(|| fd_hessian(&mut f, x0).and_then(|h| spd_inverse(&h)));
    let bopts = BfgsOptions {
        max_iter: opts.max_iter,
        grad_tol: opts.tol,
    };
    let mut min = bfgs(&mut f, x0, h0, &bopts)?;
    if !min.converged {
        min = newton_polish(&mut f, min, 8, opts.tol);
    }
    Some(Candidate {
        grad_norm: max_abs(&min.gradient),
        x: min.x,
        value: min.value,
        iterations: min.iterations,
        converged: min.converged,
        start,
        inverse_hessian: min.inverse_hessian,
    })
}

/// Maximize ℓ₂(θ) and assemble the fit. η̂ = n₁/n in closed form.
pub fn fit_mle(data: &Dataset, spec: &ModelSpec, opts: &FitOptions) -> Result<FitResult> {
    data.check_estimable()?;
    let prof = ProfileLikelihood::new(data, spec);
    let base = match &opts.start {
        Some(t) => {
            spec.check_theta(t)?;
            t.clone()
        }
        None => initial_theta(data, spec)?,
    };
    let starts = opts.multistarts.max(1);
    let mut fallback: Option<Theta> = None;
    let mut best: Option<Candidate> = None;
    for k in 0..starts {
        let (x0, h0) = if k == 0 {
            (base.to_vec(), opts.inverse_hessian.clone())
        } else {
            // a failed warm start falls back to the default initializer first
            let warm = opts.start.is_some();
            if warm && fallback.is_none() {
                fallback = Some(initial_theta(data, spec)?);
            }
            let anchor = fallback.as_ref().unwrap_or(&base);
            if warm && k == 1 {
                (anchor.to_vec(), None)
            } else {
                (perturbed(anchor, k, opts.seed).to_vec(), None)
            }
        };
        let Some(cand) = optimize_from(&prof, &x0, h0, opts, k) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some(b) => (cand.converged && !b.converged) || (cand.converged == b.converged && cand.value < b.value),
        };
        if better {
            best = Some(cand);
        }
        if !opts.exhaustive && best.as_ref().is_some_and(|b| b.converged) {
            break;
        }
    }
    let best = best.ok_or_else(|| Error::NonConvergence {
        starts,
        grad_norm: f64::INFINITY,
        best: base.to_vec(),
    })?;
    if !best.converged {
        return Err(Error::NonConvergence {
            starts,
            grad_norm: best.grad_norm,
            best: best.x,
        });
    }
    assemble(data, spec, &prof, best, opts.inference)
}

fn assemble(
    data: &Dataset,
    spec: &ModelSpec,
    prof: &ProfileLikelihood<'_>,
    best: Candidate,
    inference: bool,
) -> Result<FitResult> {
    let (n, n1) = (data.n(), data.n1());
    let eta_hat = n1 as f64 / n as f64;
    let eval = prof.evaluate(&best.x, None, false)?;
    let weights = el_weights_from_t(&eval.t_values, eval.lambda.lambda)?;
    let theta_hat = Theta::from_slice(&best.x, spec.d_beta());
    let mut fit = FitResult {
        theta_hat,
        eta_hat,
        lambda_hat: eval.lambda.lambda,
        lambda_degenerate: eval.lambda.degenerate,
        ell1: ell1(n1, n - n1, eta_hat)?,
        ell2: eval.ell2,
        weights,
        n,
        n1,
        theta_cov: None,
        vhat_condition: None,
        singular_vhat: false,
        mu_hat: None,
        sigma2_hat: None,
        mu_se: None,
        converged: best.converged,
        iterations: best.iterations,
        multistart_index: best.start,
        grad_norm: best.grad_norm,
        inverse_hessian: best.inverse_hessian,
    };
    if inference {
        fit.mu_hat = Some(mu_hat(&fit, data, spec)?);
        let vhat = vhat(&fit.theta_hat, eta_hat, data, spec)?;
        let cond = condition_number(&vhat);
        fit.vhat_condition = Some(cond);
        match invert_vhat(&vhat) {
            Ok(vinv) => {
                let mut cov = vinv.clone();
                cov[(0, 0)] -= 1.0 / (eta_hat * (1.0 - eta_hat));
                fit.theta_cov = Some(to_rows(&cov));
                let s2 = sigma2_with(&fit, data, spec, &vinv)?;
                fit.sigma2_hat = Some(s2);
                fit.mu_se = Some((s2 / n as f64).sqrt());
            }
            Err(Error::SingularVhat { .. }) => fit.singular_vhat = true,
            Err(e) => return Err(e),
        }
    }
    Ok(fit)
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn invert_vhat(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let condition = condition_number(v);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularVhat { condition });
    }
    spd_inverse(v).ok_or(Error::SingularVhat { condition })
}

/// V̂ = n⁻¹ Σᵢ [(1 − π̂ᵢ)π̂ᵢ ∇t ∇tᵀ + dᵢ I_e s sᵀ I_eᵀ] with s = ∇_ξ log f.
pub fn vhat(theta: &Theta, eta: f64, data: &Dataset, spec: &ModelSpec) -> Result<DMatrix<f64>> {
    check_eta(eta)?;
    let prof = ProfileLikelihood::new(data, spec);
    let x = theta.to_vec();
    let d = x.len();
    let off = 2 + spec.d_beta();
    let t = prof.t_values(&x)?;
    let shift = logit(eta);
    let mut v = DMatrix::zeros(d, d);
    for (i, &ti) in t.iter().enumerate() {
        let pi = sigmoid(ti - shift);
        let g = DVector::from_vec(prof.grad_t(i, &x)?);
        v.syger(pi * (1.0 - pi), &g, &g, 1.0);
        if prof.observed(i) {
            let s = DVector::from_vec(prof.score(i, &x));
            let mut block = v.view_mut((off, off), (d - off, d - off));
            block.syger(1.0, &s, &s, 1.0);
        }
    }
    v.fill_upper_triangle_with_lower_triangle();
    Ok(v / data.n() as f64)
}

/// K(x; θ, η): the mean of y given x, mixing the observed and tilted arms by π(x).
pub fn k_fun(x: &[f64], theta: &Theta, eta: f64, spec: &ModelSpec) -> Result<f64> {
    check_eta(eta)?;
    let m = spec.outcome.moments(x, theta.gamma, &theta.xi)?;
    let t = spec.linear_part(x, theta) + m.c;
    let pi = sigmoid(t - logit(eta));
    Ok((1.0 - pi) * m.mean + pi * m.tilted_mean)
}

/// K with both arm means taken by Gauss–Hermite quadrature, for either family.
pub fn k_fun_quadrature(x: &[f64], theta: &Theta, eta: f64, spec: &ModelSpec) -> Result<f64> {
    check_eta(eta)?;
    let m = spec.outcome.moments_quadrature(x, theta.gamma, &theta.xi)?;
    let t = spec.linear_part(x, theta) + m.c;
    let pi = sigmoid(t - logit(eta));
    Ok((1.0 - pi) * m.mean + pi * m.tilted_mean)
}

/// ∇_θ K; analytic for the normal family, central differences otherwise.
pub fn grad_k(x: &[f64], theta: &Theta, eta: f64, spec: &ModelSpec) -> Result<Vec<f64>> {
    match spec.outcome.as_normal() {
        Some(nb) => {
            let mf = nb.mean.eval(x);
            let vf = nb.logvar.eval(x);
            let (mu, s2) = nb.mean_var_from_features(&mf, &vf, &theta.xi);
            let gamma = theta.gamma;
            let t = spec.linear_part(x, theta) + gamma * mu + 0.5 * gamma * gamma * s2;
            let pi = sigmoid(t - logit(eta));
            let shift = gamma * s2;
            let dk_dt = shift * pi * (1.0 - pi);
            let mut g = Vec::with_capacity(theta.dim());
            g.push(dk_dt);
            g.extend(spec.propensity.iter().map(|&j| dk_dt * x[j]));
            g.push(dk_dt * (mu + shift) + pi * s2);
            let dm = mf.len();
            let mut dc = vec![0.0; nb.n_params()];
            normal_c_xi_gradient(nb, &mf, &vf, mu, s2, gamma, &mut dc);
            let mut dmu = vec![0.0; dm];
            nb.mean_gradient(&mf, mu, &mut dmu);
            for j in 0..nb.n_params() {
                let direct = if j < dm { dmu[j] } else { pi * gamma * s2 * vf[j - dm] };
                g.push(direct + dk_dt * dc[j]);
            }
            Ok(g)
        }
        None => grad_k_fd(x, theta, eta, spec),
    }
}

pub fn grad_k_fd(x: &[f64], theta: &Theta, eta: f64, spec: &ModelSpec) -> Result<Vec<f64>> {
    let base = theta.to_vec();
    let mut work = base.clone();
    let db = spec.d_beta();
    let mut g = vec![0.0; base.len()];
    for j in 0..base.len() {
        let h = FD_STEP * (1.0 + base[j].abs());
        work[j] = base[j] + h;
        let up = k_fun(x, &Theta::from_slice(&work, db), eta, spec)?;
        work[j] = base[j] - h;
        let down = k_fun(x, &Theta::from_slice(&work, db), eta, spec)?;
        work[j] = base[j];
        g[j] = (up - down) / (2.0 * h);
    }
    Ok(g)
}

/// μ̂ = n⁻¹ Σᵢ K(xᵢ; θ̂, η̂).
pub fn mu_hat(fit: &FitResult, data: &Dataset, spec: &ModelSpec) -> Result<f64> {
    let mut s = 0.0;
    for x in data.rows() {
        s += k_fun(x, &fit.theta_hat, fit.eta_hat, spec)?;
    }
    Ok(s / data.n() as f64)
}

/// μ̂ with K evaluated by quadrature instead of the closed form.
pub fn mu_hat_quadrature(fit: &FitResult, data: &Dataset, spec: &ModelSpec) -> Result<f64> {
    let mut s = 0.0;
    for x in data.rows() {
        s += k_fun_quadrature(x, &fit.theta_hat, fit.eta_hat, spec)?;
    }
    Ok(s / data.n() as f64)
}

/// σ̂² = Var̂{K} + Âᵀ V̂⁻¹ Â.
pub fn sigma2_hat(fit: &FitResult, data: &Dataset, spec: &ModelSpec) -> Result<f64> {
    let v = vhat(&fit.theta_hat, fit.eta_hat, data, spec)?;
    sigma2_with(fit, data, spec, &invert_vhat(&v)?)
}

fn sigma2_with(fit: &FitResult, data: &Dataset, spec: &ModelSpec, vinv: &DMatrix<f64>) -> Result<f64> {
    let n = data.n() as f64;
    let mut ks = Vec::with_capacity(data.n());
    let mut a = DVector::zeros(fit.d_theta());
    for x in data.rows() {
        ks.push(k_fun(x, &fit.theta_hat, fit.eta_hat, spec)?);
        a += DVector::from_vec(grad_k(x, &fit.theta_hat, fit.eta_hat, spec)?);
    }
    a /= n;
    let mean = ks.iter().sum::<f64>() / n;
    let var_k = ks.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / n;
    Ok(var_k + (a.transpose() * vinv * &a)[(0, 0)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LrStat {
    pub stat: f64,
    /// False when θ₀ lies outside the EL-feasible region; the statistic is then +∞.
    pub feasible: bool,
}

/// R(θ₀) = 2{ℓ₂(θ̂) − ℓ₂(θ₀)}.
pub fn lr_stat(theta0: &Theta, data: &Dataset, spec: &ModelSpec, fit: &FitResult) -> Result<LrStat> {
    spec.check_theta(theta0)?;
    let prof = ProfileLikelihood::new(data, spec);
    Ok(match prof.evaluate(&theta0.to_vec(), None, false) {
        Ok(e) => LrStat {
            stat: 2.0 * (fit.ell2 - e.ell2),
            feasible: true,
        },
        Err(Error::NoInteriorRoot { .. } | Error::InfeasibleLambda { .. } | Error::Domain { .. }) => LrStat {
            stat: f64::INFINITY,
            feasible: false,
        },
        Err(e) => return Err(e),
    })
}

pub fn bic_value(loglik: f64, k: usize, n: usize) -> f64 {
    -2.0 * loglik + k as f64 * (n as f64).ln()
}

/// −2{ℓ₁(η̂) + ℓ₂(θ̂)} + (d_θ + 1) ln n; η counts as a parameter.
pub fn bic(fit: &FitResult) -> f64 {
    bic_value(fit.loglik(), fit.d_theta() + 1, fit.n)
}

/// Complete-case log-likelihood Σ_{d=1} log f at ξ, used by tests and diagnostics.
pub fn observed_loglik(xi: &[f64], data: &Dataset, spec: &ModelSpec) -> f64 {
    (0..data.n())
        .filter_map(|i| data.y(i).map(|y| (i, y)))
        .map(|(i, y)| match spec.outcome.as_normal() {
            Some(nb) => {
                let (mu, s2) = nb.mean_var(data.row(i), xi);
                normal_log_density(y, mu, s2)
            }
            None => spec.outcome.log_f(y, data.row(i), xi),
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{Basis, Term};
    use crate::model::{MeanLink, NormalBasis};
    use crate::quadrature::GaussHermite;

    fn one_col_spec() -> ModelSpec {
        let outcome = OutcomeModel::Normal(NormalBasis::new(
            Basis::new(vec![Term::intercept(), Term::linear(0)]),
            MeanLink::Identity,
            Basis::new(vec![Term::intercept()]),
        ));
        ModelSpec::new(vec!["x".into()], vec![0], outcome)
    }

    #[test]
    fn k_example_against_quadrature() {
        // μ = 1, σ² = 1, α + xβ = −1, γ = 0.5, η = 0.7
        let spec = one_col_spec();
        let theta = Theta::new(-1.0, vec![0.0], 0.5, vec![1.0, 0.0, 0.0]);
        let k = k_fun(&[0.0], &theta, 0.7, &spec).unwrap();
        let rule = GaussHermite::default_rule();
        let num = rule.normal_expectation(|z| {
            let y = 1.0 + z;
            y * (0.7 + 0.3 * (-1.0 + 0.5 * y).exp())
        });
        let den = 0.7 + 0.3 * (-0.375f64).exp();
        assert!((k - num / den).abs() < 1e-12);
        assert!((k - 1.1138).abs() < 1e-4);
        let kq = k_fun_quadrature(&[0.0], &theta, 0.7, &spec).unwrap();
        assert!((k - kq).abs() < 1e-10);
    }

    #[test]
    fn k_limits() {
        let spec = one_col_spec();
        let theta = Theta::new(0.4, vec![0.2], 0.0, vec![1.5, 0.3, 0.2]);
        assert!((k_fun(&[2.0], &theta, 0.4, &spec).unwrap() - 2.1).abs() < 1e-14);
        let tilted = Theta { gamma: 0.7, ..theta };
        let near_one = k_fun(&[2.0], &tilted, 1.0 - 1e-12, &spec).unwrap();
        assert!((near_one - 2.1).abs() < 1e-9);
    }

    #[test]
    fn grad_k_matches_differences() {
        let spec = one_col_spec();
        let theta = Theta::new(-0.3, vec![0.4], 0.8, vec![1.0, -0.5, 0.3]);
        for x in [-1.0, 0.2, 1.7] {
            let a = grad_k(&[x], &theta, 0.65, &spec).unwrap();
            let f = grad_k_fd(&[x], &theta, 0.65, &spec).unwrap();
            for (u, v) in a.iter().zip(&f) {
                assert!((u - v).abs() < 1e-7 * (1.0 + v.abs()), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn bic_trivial() {
        assert_eq!(bic_value(0.0, 0, 100), 0.0);
        assert!((bic_value(-10.0, 3, 100) - (20.0 + 3.0 * 100f64.ln())).abs() < 1e-12);
    }
}
