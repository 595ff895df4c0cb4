//! Empirical-likelihood core: the inner Lagrange multiplier, the profile
//! log-likelihood pieces ℓ₁ and ℓ₂, EL weights and the weighted covariate CDF.
//!
//! For fixed θ the atoms pᵢ on the covariate rows maximize Σ log pᵢ subject to
//! Σ pᵢ = 1 and Σ pᵢ(e^{tᵢ} − 1) = 0, giving pᵢ = n⁻¹/(1 + λ(e^{tᵢ} − 1)) where λ
//! is the unique root of Σ (wᵢ − 1)/(1 + λ(wᵢ − 1)) on the feasibility interval.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{check_eta, normal_c_xi_gradient, normal_score, normal_score_at, LN_2PI};
use crate::model::{ModelSpec, OutcomeModel, Theta};

/// Relative inset of the bracket from the ends of the feasibility interval.
const BRACKET_INSET: f64 = 1e-10;
const LAMBDA_TOL: f64 = 1e-12;
const LAMBDA_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSolution {
    pub lambda: f64,
    /// All tᵢ were zero; λ is then set by convention.
    pub degenerate: bool,
    pub iterations: usize,
}

/// aᵢ/(1 + λaᵢ), written to stay finite when aᵢ = e^{tᵢ} − 1 is huge.
#[inline]
fn lambda_term(a: f64, lambda: f64) -> f64 {
    if a > 1.0 {
        1.0 / (lambda + 1.0 / a)
    } else {
        a / (1.0 + lambda * a)
    }
}

fn lambda_equation(a: &[f64], lambda: f64) -> (f64, f64) {
    let mut g = 0.0;
    let mut dg = 0.0;
    for &ai in a {
        let term = lambda_term(ai, lambda);
        g += term;
        dg -= term * term;
    }
    (g, dg)
}

/// Root of Σ (wᵢ − 1)/(1 + λ(wᵢ − 1)) = 0 with wᵢ = e^{tᵢ}.
///
/// The left side is strictly decreasing on the feasibility interval, so a
/// bracketed Newton iteration with bisection fallback finds the unique root.
pub fn solve_lambda(t_values: &[f64], target: Option<f64>) -> Result<LambdaSolution> {
    let a: Vec<f64> = t_values.iter().map(|t| t.exp_m1()).collect();
    solve_lambda_expm1(&a, t_values, target)
}

fn solve_lambda_expm1(a: &[f64], t_values: &[f64], target: Option<f64>) -> Result<LambdaSolution> {
    let amax = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let amin = a.iter().copied().fold(f64::INFINITY, f64::min);
    if a.is_empty() || (amax == 0.0 && amin == 0.0) {
        return Ok(LambdaSolution {
            lambda: target.unwrap_or(0.0),
            degenerate: true,
            iterations: 0,
        });
    }
    let no_root = || Error::NoInteriorRoot {
        t_min: t_values.iter().copied().fold(f64::INFINITY, f64::min),
        t_max: t_values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    if amax.is_nan() || amin.is_nan() || !(amax > 0.0 && amin < 0.0) {
        return Err(no_root());
    }
    let mut lo = (-1.0 / amax) * (1.0 - BRACKET_INSET);
    let mut hi = (-1.0 / amin) * (1.0 - BRACKET_INSET);
    if lambda_equation(a, lo).0 <= 0.0 || lambda_equation(a, hi).0 >= 0.0 {
        // the root sits within the inset of a feasibility boundary
        return Err(no_root());
    }
    let mut lambda = match target {
        Some(l) if l > lo && l < hi => l,
        _ => 0.0,
    };
    for iter in 1..=LAMBDA_MAX_ITER {
        let (g, dg) = lambda_equation(a, lambda);
        if g.abs() < LAMBDA_TOL {
            return Ok(LambdaSolution {
                lambda,
                degenerate: false,
                iterations: iter,
            });
        }
        if g > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let newton = lambda - g / dg;
        let next = if newton > lo && newton < hi && dg < 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - lambda).abs() <= 4.0 * f64::EPSILON * lambda.abs().max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * lambda.abs().max(1e-300) {
            return Ok(LambdaSolution {
                lambda: next,
                degenerate: false,
                iterations: iter,
            });
        }
        lambda = next;
    }
    Ok(LambdaSolution {
        lambda,
        degenerate: false,
        iterations: LAMBDA_MAX_ITER,
    })
}

/// λ + (1 − λ)e^{−t} written through a = e^t − 1, for t > 0.
#[inline]
fn lambda_inner(lambda: f64, a: f64) -> f64 {
    lambda + (1.0 - lambda) / (1.0 + a)
}

/// ln{1 + λ(e^t − 1)}, or None when the argument is not positive.
#[inline]
fn log_denominator(t: f64, lambda: f64) -> Option<f64> {
    let a = t.exp_m1();
    if t > 0.0 {
        let inner = lambda_inner(lambda, a);
        (inner > 0.0).then(|| t + inner.ln())
    } else {
        let arg = lambda * a;
        (arg > -1.0).then(|| arg.ln_1p())
    }
}

/// Binomial log-likelihood of the response indicators: n₁ ln η + n₂ ln(1 − η).
pub fn ell1(n1: usize, n2: usize, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(n1 as f64 * eta.ln() + n2 as f64 * (1.0 - eta).ln())
}

/// Per-row features precomputed once for a dataset and model.
#[derive(Debug, Clone)]
pub struct Design {
    n: usize,
    observed: Vec<bool>,
    y: Vec<f64>,
    d_beta: usize,
    d_mean: usize,
    d_var: usize,
    /// n × d_β propensity covariates.
    xp: Vec<f64>,
    mean_f: Vec<f64>,
    var_f: Vec<f64>,
    /// Raw covariate rows, kept for generic densities.
    x: Vec<f64>,
    d_x: usize,
}

impl Design {
    pub fn new(data: &Dataset, spec: &ModelSpec) -> Self {
        let n = data.n();
        let d_beta = spec.d_beta();
        let mut xp = Vec::with_capacity(n * d_beta);
        let mut x = Vec::with_capacity(n * data.d_x());
        for row in data.rows() {
            xp.extend(spec.propensity.iter().map(|&j| row[j]));
            x.extend_from_slice(row);
        }
        let (d_mean, d_var, mean_f, var_f) = match &spec.outcome {
            OutcomeModel::Normal(nb) => {
                let mut mf = vec![0.0; n * nb.mean.len()];
                let mut vf = vec![0.0; n * nb.logvar.len()];
                for (i, row) in data.rows().enumerate() {
                    nb.mean.eval_into(row, &mut mf[i * nb.mean.len()..(i + 1) * nb.mean.len()]);
                    nb.logvar.eval_into(row, &mut vf[i * nb.logvar.len()..(i + 1) * nb.logvar.len()]);
                }
                (nb.mean.len(), nb.logvar.len(), mf, vf)
            }
            OutcomeModel::Generic(_) => (0, 0, vec![], vec![]),
        };
        Self {
            n,
            observed: (0..n).map(|i| data.observed(i)).collect(),
            y: (0..n).map(|i| data.y(i).unwrap_or(f64::NAN)).collect(),
            d_beta,
            d_mean,
            d_var,
            xp,
            mean_f,
            var_f,
            x,
            d_x: data.d_x(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n1(&self) -> usize {
        self.observed.iter().filter(|o| **o).count()
    }

    #[inline]
    fn xp(&self, i: usize) -> &[f64] {
        &self.xp[i * self.d_beta..(i + 1) * self.d_beta]
    }

    #[inline]
    fn mean_f(&self, i: usize) -> &[f64] {
        &self.mean_f[i * self.d_mean..(i + 1) * self.d_mean]
    }

    #[inline]
    fn var_f(&self, i: usize) -> &[f64] {
        &self.var_f[i * self.d_var..(i + 1) * self.d_var]
    }

    #[inline]
    fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.d_x..(i + 1) * self.d_x]
    }

    #[inline]
    fn linear(&self, i: usize, theta: &[f64]) -> f64 {
        theta[0]
            + self
                .xp(i)
                .iter()
                .zip(&theta[1..1 + self.d_beta])
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }
}

/// ℓ₂ at θ, with λ_θ and, optionally, the gradient.
#[derive(Debug, Clone)]
pub struct ProfileEval {
    pub ell2: f64,
    pub lambda: LambdaSolution,
    pub t_values: Vec<f64>,
    pub gradient: Option<Vec<f64>>,
}

/// The profile log-likelihood ℓ₂(θ) of one dataset under one model.
#[derive(Debug, Clone)]
pub struct ProfileLikelihood<'a> {
    spec: &'a ModelSpec,
    design: Design,
}

impl<'a> ProfileLikelihood<'a> {
    pub fn new(data: &Dataset, spec: &'a ModelSpec) -> Self {
        Self {
            spec,
            design: Design::new(data, spec),
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        self.spec
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn d_theta(&self) -> usize {
        self.spec.d_theta()
    }

    /// tᵢ for every row and Σ_{d=1} log f.
    fn t_and_loglik(&self, theta: &[f64], moments: &mut Vec<(f64, f64)>) -> Result<(Vec<f64>, f64)> {
        let des = &self.design;
        let gi = 1 + des.d_beta;
        let gamma = theta[gi];
        let xi = &theta[gi + 1..];
        let mut t = Vec::with_capacity(des.n);
        let mut loglik = 0.0;
        moments.clear();
        match &self.spec.outcome {
            OutcomeModel::Normal(nb) => {
                // constant log-variance bases repeat the same exponent on every row
                let (mut last_log_s2, mut last_s2) = (f64::NAN, f64::NAN);
                for i in 0..des.n {
                    let (mu, log_s2) = nb.mean_logvar_from_features(des.mean_f(i), des.var_f(i), xi);
                    if log_s2 != last_log_s2 {
                        last_log_s2 = log_s2;
                        last_s2 = log_s2.exp();
                    }
                    let s2 = last_s2;
                    moments.push((mu, s2));
                    let ti = des.linear(i, theta) + gamma * mu + 0.5 * gamma * gamma * s2;
                    if !ti.is_finite() {
                        return Err(Error::Domain {
                            x: des.x(i).to_vec(),
                        });
                    }
                    t.push(ti);
                    if des.observed[i] {
                        let r = des.y[i] - mu;
                        loglik -= 0.5 * (LN_2PI + log_s2 + r * r / s2);
                    }
                }
            }
            OutcomeModel::Generic(g) => {
                let outcome = &self.spec.outcome;
                for i in 0..des.n {
                    let x = des.x(i);
                    t.push(des.linear(i, theta) + outcome.c(x, gamma, xi)?);
                    if des.observed[i] {
                        loglik += g.log_density(des.y[i], x, xi);
                    }
                }
            }
        }
        Ok((t, loglik))
    }

    pub fn t_values(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let mut m = Vec::new();
        Ok(self.t_and_loglik(theta, &mut m)?.0)
    }

    pub fn evaluate(&self, theta: &[f64], lambda_hint: Option<f64>, want_gradient: bool) -> Result<ProfileEval> {
        let des = &self.design;
        let d_theta = self.d_theta();
        assert_eq!(theta.len(), d_theta, "theta has wrong dimension");
        let mut moments = Vec::new();
        let (t, loglik) = self.t_and_loglik(theta, &mut moments)?;
        let a: Vec<f64> = t.iter().map(|v| v.exp_m1()).collect();
        let lambda = solve_lambda_expm1(&a, &t, lambda_hint)?;
        let lam = lambda.lambda;
        let mut value = loglik;
        let mut shares = Vec::with_capacity(if want_gradient { t.len() } else { 0 });
        for (i, (&ti, &ai)) in t.iter().zip(&a).enumerate() {
            if !des.observed[i] {
                value += ti;
            }
            // ln{1 + λa} and λe^t/{1 + λa}, factoring e^t out when t > 0
            let (log_den, share) = if ti > 0.0 {
                let inner = lambda_inner(lam, ai);
                (ti + inner.ln(), lam / inner)
            } else {
                let den = 1.0 + lam * ai;
                ((lam * ai).ln_1p(), lam * (1.0 + ai) / den)
            };
            if !log_den.is_finite() {
                return Err(Error::InfeasibleLambda { row: i });
            }
            value -= log_den;
            if want_gradient {
                shares.push(share);
            }
        }
        let gradient = if want_gradient {
            Some(self.gradient(theta, &shares, &moments)?)
        } else {
            None
        };
        Ok(ProfileEval {
            ell2: value,
            lambda,
            t_values: t,
            gradient,
        })
    }

    /// Σᵢ [(1 − dᵢ) − λwᵢ/(1 + λ(wᵢ − 1))] ∇t(xᵢ, θ) + Σ_{d=1} I_e ∇_ξ log f.
    ///
    /// λ_θ is stationary in h(θ, λ), so its dependence on θ drops out of the gradient.
    fn gradient(&self, theta: &[f64], shares: &[f64], moments: &[(f64, f64)]) -> Result<Vec<f64>> {
        let des = &self.design;
        let d_theta = self.d_theta();
        let gi = 1 + des.d_beta;
        let gamma = theta[gi];
        let xi = &theta[gi + 1..];
        let mut grad = vec![0.0; d_theta];
        let mut gt = vec![0.0; d_theta];
        let mut score = vec![0.0; d_theta - gi - 1];
        for i in 0..des.n {
            let coef = if des.observed[i] { 0.0 } else { 1.0 } - shares[i];
            self.grad_t_row(i, gamma, xi, moments.get(i).copied(), &mut gt)?;
            for (g, v) in grad.iter_mut().zip(&gt) {
                *g += coef * v;
            }
            if des.observed[i] {
                match (&self.spec.outcome, moments.get(i)) {
                    (OutcomeModel::Normal(nb), Some(&(mu, s2))) => {
                        normal_score_at(nb, des.mean_f(i), des.var_f(i), des.y[i], mu, s2, &mut score)
                    }
                    _ => self.score_row(i, xi, &mut score),
                }
                for (g, v) in grad[gi + 1..].iter_mut().zip(&score) {
                    *g += v;
                }
            }
        }
        Ok(grad)
    }

    fn grad_t_row(&self, i: usize, gamma: f64, xi: &[f64], moments: Option<(f64, f64)>, out: &mut [f64]) -> Result<()> {
        let des = &self.design;
        let gi = 1 + des.d_beta;
        out[0] = 1.0;
        out[1..gi].copy_from_slice(des.xp(i));
        match &self.spec.outcome {
            OutcomeModel::Normal(nb) => {
                let (mu, s2) = moments.unwrap_or_else(|| {
                    nb.mean_var_from_features(des.mean_f(i), des.var_f(i), xi)
                });
                out[gi] = mu + gamma * s2;
                normal_c_xi_gradient(nb, des.mean_f(i), des.var_f(i), mu, s2, gamma, &mut out[gi + 1..]);
            }
            OutcomeModel::Generic(_) => {
                let (dg, dxi) = self.spec.outcome.c_gradient(des.x(i), gamma, xi)?;
                out[gi] = dg;
                out[gi + 1..].copy_from_slice(&dxi);
            }
        }
        Ok(())
    }

    fn score_row(&self, i: usize, xi: &[f64], out: &mut [f64]) {
        let des = &self.design;
        match &self.spec.outcome {
            OutcomeModel::Normal(nb) => {
                normal_score(nb, des.mean_f(i), des.var_f(i), des.y[i], xi, out);
            }
            OutcomeModel::Generic(_) => {
                out.copy_from_slice(&self.spec.outcome.score(des.y[i], des.x(i), xi));
            }
        }
    }

    /// ∇_θ t(xᵢ, θ) for row i.
    pub fn grad_t(&self, i: usize, theta: &[f64]) -> Result<Vec<f64>> {
        let gi = 1 + self.design.d_beta;
        let mut out = vec![0.0; self.d_theta()];
        self.grad_t_row(i, theta[gi], &theta[gi + 1..], None, &mut out)?;
        Ok(out)
    }

    /// ∇_ξ log f(yᵢ | xᵢ, ξ) for an observed row.
    pub fn score(&self, i: usize, theta: &[f64]) -> Vec<f64> {
        let gi = 1 + self.design.d_beta;
        let mut out = vec![0.0; self.d_theta() - gi - 1];
        self.score_row(i, &theta[gi + 1..], &mut out);
        out
    }

    pub fn observed(&self, i: usize) -> bool {
        self.design.observed[i]
    }
}

/// Profile log-likelihood ℓ₂(θ).
pub fn ell2(theta: &Theta, data: &Dataset, spec: &ModelSpec) -> Result<f64> {
    data.check_estimable()?;
    spec.check_theta(theta)?;
    let prof = ProfileLikelihood::new(data, spec);
    Ok(prof.evaluate(&theta.to_vec(), None, false)?.ell2)
}

/// pᵢ = n⁻¹/{1 + λ(e^{tᵢ} − 1)}.
pub fn el_weights_from_t(t_values: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = t_values.len() as f64;
    t_values
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            log_denominator(t, lambda)
                .map(|ld| (-ld).exp() / n)
                .ok_or(Error::InfeasibleLambda { row: i })
        })
        .collect()
}

pub fn el_weights(theta: &Theta, lambda: f64, data: &Dataset, spec: &ModelSpec) -> Result<Vec<f64>> {
    spec.check_theta(theta)?;
    let prof = ProfileLikelihood::new(data, spec);
    let t = prof.t_values(&theta.to_vec())?;
    el_weights_from_t(&t, lambda)
}

/// F̂(x | D = 1) = Σᵢ pᵢ I(xᵢ ≤ x) with the inequality taken elementwise.
pub fn fhat_cdf(point: &[f64], weights: &[f64], data: &Dataset) -> f64 {
    data.rows()
        .zip(weights)
        .filter(|(row, _)| row.iter().zip(point).all(|(a, b)| a <= b))
        .map(|(_, w)| w)
        .sum()
}

/// EL quantities at one θ.
#[derive(Debug, Clone)]
pub struct ElState {
    pub lambda: f64,
    pub degenerate: bool,
    pub t_values: Vec<f64>,
    pub weights: Vec<f64>,
    pub ell1: f64,
    pub ell2: f64,
}

impl ElState {
    pub fn evaluate(theta: &Theta, eta: f64, data: &Dataset, spec: &ModelSpec) -> Result<Self> {
        data.check_estimable()?;
        spec.check_theta(theta)?;
        let prof = ProfileLikelihood::new(data, spec);
        let eval = prof.evaluate(&theta.to_vec(), None, false)?;
        let weights = el_weights_from_t(&eval.t_values, eval.lambda.lambda)?;
        Ok(Self {
            lambda: eval.lambda.lambda,
            degenerate: eval.lambda.degenerate,
            weights,
            t_values: eval.t_values,
            ell1: ell1(data.n1(), data.n2(), eta)?,
            ell2: eval.ell2,
        })
    }
}
