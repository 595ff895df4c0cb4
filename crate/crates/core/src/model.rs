//! Propensity and outcome models and the closed-form quantities built from them.
//!
//! The full parameter vector is θ = (α, β, γ, ξ), where α is the intercept of the
//! density ratio between the missing and observed covariate distributions, β the
//! propensity slopes, γ the tilting coefficient on the response, and ξ the outcome
//! model parameters. With `c(x, γ, ξ) = ln ∫ e^{γy} f(y|x, ξ) dy` the covariate log
//! density ratio is `t(x, θ) = α + x_pᵀβ + c(x, γ, ξ)`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::quadrature::GaussHermite;

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;
const FD_STEP: f64 = 1e-6;
const MAX_PROPOSALS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub gamma: f64,
    pub xi: Vec<f64>,
}

impl Theta {
    pub fn new(alpha: f64, beta: Vec<f64>, gamma: f64, xi: Vec<f64>) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            xi,
        }
    }

    pub fn dim(&self) -> usize {
        2 + self.beta.len() + self.xi.len()
    }

    pub fn gamma_index(&self) -> usize {
        1 + self.beta.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(self.alpha);
        v.extend_from_slice(&self.beta);
        v.push(self.gamma);
        v.extend_from_slice(&self.xi);
        v
    }

    pub fn from_slice(values: &[f64], d_beta: usize) -> Self {
        assert!(values.len() >= 2 + d_beta, "theta vector too short");
        Self {
            alpha: values[0],
            beta: values[1..1 + d_beta].to_vec(),
            gamma: values[1 + d_beta],
            xi: values[2 + d_beta..].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite()
            && self.gamma.is_finite()
            && self.beta.iter().all(|v| v.is_finite())
            && self.xi.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanLink {
    #[default]
    Identity,
    Log,
}

/// Normal outcome model: μ(x, ξ) = link⁻¹⟨mean features, ξ_mean⟩ and
/// σ²(x, ξ) = exp⟨log-variance features, ξ_var⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalBasis {
    pub mean: Basis,
    pub link: MeanLink,
    pub logvar: Basis,
}

impl NormalBasis {
    pub fn new(mean: Basis, link: MeanLink, logvar: Basis) -> Self {
        Self { mean, link, logvar }
    }

    pub fn n_params(&self) -> usize {
        self.mean.len() + self.logvar.len()
    }

    /// (μ, σ²) from already evaluated feature rows.
    #[inline]
    pub fn mean_var_from_features(&self, mean_f: &[f64], var_f: &[f64], xi: &[f64]) -> (f64, f64) {
        let (mu, log_s2) = self.mean_logvar_from_features(mean_f, var_f, xi);
        (mu, log_s2.exp())
    }

    /// (μ, ln σ²) from already evaluated feature rows.
    #[inline]
    pub fn mean_logvar_from_features(&self, mean_f: &[f64], var_f: &[f64], xi: &[f64]) -> (f64, f64) {
        let (xi_m, xi_v) = xi.split_at(mean_f.len());
        let eta: f64 = mean_f.iter().zip(xi_m).map(|(a, b)| a * b).sum();
        let mu = match self.link {
            MeanLink::Identity => eta,
            MeanLink::Log => eta.exp(),
        };
        (mu, var_f.iter().zip(xi_v).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn mean_var(&self, x: &[f64], xi: &[f64]) -> (f64, f64) {
        let mf = self.mean.eval(x);
        let vf = self.logvar.eval(x);
        self.mean_var_from_features(&mf, &vf, xi)
    }

    /// ∇_ξ μ for the mean block.
    #[inline]
    pub fn mean_gradient(&self, mean_f: &[f64], mu: f64, out: &mut [f64]) {
        match self.link {
            MeanLink::Identity => out.copy_from_slice(mean_f),
            MeanLink::Log => {
                for (o, f) in out.iter_mut().zip(mean_f) {
                    *o = mu * f;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    /// Normal proposal location and scale.
    pub loc: f64,
    pub scale: f64,
    /// Upper bound of ln(target density / proposal density) over y.
    pub log_bound: f64,
}

/// A user-supplied parametric density f(y | x, ξ) integrated by quadrature.
pub trait GenericDensity: Send + Sync + fmt::Debug {
    fn n_params(&self) -> usize;

    fn log_density(&self, y: f64, x: &[f64], xi: &[f64]) -> f64;

    /// Location and scale used to standardize the quadrature grid.
    fn location_scale(&self, x: &[f64], xi: &[f64]) -> (f64, f64);

    /// Closed form of ln ∫ e^{γy} f(y|x, ξ) dy, when known.
    fn tilting_moment(&self, _x: &[f64], _gamma: f64, _xi: &[f64]) -> Option<f64> {
        None
    }

    /// Normal envelope for accept–reject sampling of the tilted density.
    fn envelope(&self, _x: &[f64], _gamma: f64, _xi: &[f64]) -> Option<Envelope> {
        None
    }

    /// Covariate columns the density depends on, when declared.
    fn covariates(&self) -> Option<Vec<usize>> {
        None
    }

    /// Starting point for the complete-case fit of ξ.
    fn initial_params(&self) -> Vec<f64> {
        vec![0.0; self.n_params()]
    }
}

#[derive(Debug, Clone)]
pub enum OutcomeModel {
    Normal(NormalBasis),
    Generic(Arc<dyn GenericDensity>),
}

/// Mean of f, mean of the e^{γy}-tilted density, and the log tilting constant c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltMoments {
    pub mean: f64,
    pub tilted_mean: f64,
    pub c: f64,
}

impl OutcomeModel {
    pub fn n_params(&self) -> usize {
        match self {
            OutcomeModel::Normal(nb) => nb.n_params(),
            OutcomeModel::Generic(g) => g.n_params(),
        }
    }

    pub fn as_normal(&self) -> Option<&NormalBasis> {
        match self {
            OutcomeModel::Normal(nb) => Some(nb),
            OutcomeModel::Generic(_) => None,
        }
    }

    fn location_scale(&self, x: &[f64], xi: &[f64]) -> (f64, f64) {
        match self {
            OutcomeModel::Normal(nb) => {
                let (mu, s2) = nb.mean_var(x, xi);
                (mu, s2.sqrt())
            }
            OutcomeModel::Generic(g) => g.location_scale(x, xi),
        }
    }

    pub fn log_f(&self, y: f64, x: &[f64], xi: &[f64]) -> f64 {
        match self {
            OutcomeModel::Normal(nb) => {
                let (mu, s2) = nb.mean_var(x, xi);
                normal_log_density(y, mu, s2)
            }
            OutcomeModel::Generic(g) => g.log_density(y, x, xi),
        }
    }

    /// c(x, γ, ξ) evaluated by 64-node Gauss–Hermite quadrature regardless of family.
    pub fn c_quadrature(&self, x: &[f64], gamma: f64, xi: &[f64]) -> f64 {
        let (loc, scale) = self.location_scale(x, xi);
        GaussHermite::default_rule()
            .log_integral(loc, scale, |y| gamma * y + self.log_f(y, x, xi))
    }

    pub fn c(&self, x: &[f64], gamma: f64, xi: &[f64]) -> Result<f64> {
        if gamma == 0.0 {
            return Ok(0.0);
        }
        let c = match self {
            OutcomeModel::Normal(nb) => {
                let (mu, s2) = nb.mean_var(x, xi);
                gamma * mu + 0.5 * gamma * gamma * s2
            }
            OutcomeModel::Generic(g) => match g.tilting_moment(x, gamma, xi) {
                Some(c) => c,
                None => self.c_quadrature(x, gamma, xi),
            },
        };
        if c.is_finite() {
            Ok(c)
        } else {
            Err(Error::Domain { x: x.to_vec() })
        }
    }

    pub fn score(&self, y: f64, x: &[f64], xi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_params()];
        match self {
            OutcomeModel::Normal(nb) => {
                let mf = nb.mean.eval(x);
                let vf = nb.logvar.eval(x);
                normal_score(nb, &mf, &vf, y, xi, &mut out);
            }
            OutcomeModel::Generic(g) => {
                let mut work = xi.to_vec();
                for j in 0..xi.len() {
                    let h = FD_STEP * (1.0 + xi[j].abs());
                    work[j] = xi[j] + h;
                    let up = g.log_density(y, x, &work);
                    work[j] = xi[j] - h;
                    let down = g.log_density(y, x, &work);
                    work[j] = xi[j];
                    out[j] = (up - down) / (2.0 * h);
                }
            }
        }
        out
    }

    /// (∂c/∂γ, ∂c/∂ξ).
    pub fn c_gradient(&self, x: &[f64], gamma: f64, xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self {
            OutcomeModel::Normal(nb) => {
                let mf = nb.mean.eval(x);
                let vf = nb.logvar.eval(x);
                let (mu, s2) = nb.mean_var_from_features(&mf, &vf, xi);
                let mut dxi = vec![0.0; nb.n_params()];
                normal_c_xi_gradient(nb, &mf, &vf, mu, s2, gamma, &mut dxi);
                Ok((mu + gamma * s2, dxi))
            }
            OutcomeModel::Generic(_) => {
                let dgamma = self.moments(x, gamma, xi)?.tilted_mean;
                let mut work = xi.to_vec();
                let mut dxi = vec![0.0; xi.len()];
                for j in 0..xi.len() {
                    let h = FD_STEP * (1.0 + xi[j].abs());
                    work[j] = xi[j] + h;
                    let up = self.c(x, gamma, &work)?;
                    work[j] = xi[j] - h;
                    let down = self.c(x, gamma, &work)?;
                    work[j] = xi[j];
                    dxi[j] = (up - down) / (2.0 * h);
                }
                Ok((dgamma, dxi))
            }
        }
    }

    pub fn moments(&self, x: &[f64], gamma: f64, xi: &[f64]) -> Result<TiltMoments> {
        match self {
            OutcomeModel::Normal(nb) => {
                let (mu, s2) = nb.mean_var(x, xi);
                Ok(TiltMoments {
                    mean: mu,
                    tilted_mean: mu + gamma * s2,
                    c: gamma * mu + 0.5 * gamma * gamma * s2,
                })
            }
            OutcomeModel::Generic(_) => self.moments_quadrature(x, gamma, xi),
        }
    }

    /// Tilt moments by quadrature for either family.
    pub fn moments_quadrature(&self, x: &[f64], gamma: f64, xi: &[f64]) -> Result<TiltMoments> {
        let (loc, scale) = self.location_scale(x, xi);
        let rule = GaussHermite::default_rule();
        let log_f = |y: f64| self.log_f(y, x, xi);
        let mean = rule.integral(loc, scale, |y| y, log_f);
        let c = if gamma == 0.0 {
            0.0
        } else {
            rule.log_integral(loc, scale, |y| gamma * y + log_f(y))
        };
        let tilted_mean = rule.integral(loc, scale, |y| y, |y| gamma * y - c + log_f(y));
        if c.is_finite() && mean.is_finite() && tilted_mean.is_finite() {
            Ok(TiltMoments {
                mean,
                tilted_mean,
                c,
            })
        } else {
            Err(Error::Domain { x: x.to_vec() })
        }
    }

    /// Draw from f(y|x, ξ) tilted by e^{γy}.
    pub fn sample_tilted<R: RngCore + ?Sized>(
        &self,
        x: &[f64],
        gamma: f64,
        xi: &[f64],
        rng: &mut R,
    ) -> Result<f64> {
        match self {
            OutcomeModel::Normal(nb) => {
                let (mu, s2) = nb.mean_var(x, xi);
                let z: f64 = StandardNormal.sample(rng);
                Ok(mu + gamma * s2 + s2.sqrt() * z)
            }
            OutcomeModel::Generic(g) => {
                let env = g.envelope(x, gamma, xi).ok_or_else(|| {
                    Error::Sampling("generic density supplies no envelope".into())
                })?;
                let c = self.c(x, gamma, xi)?;
                for _ in 0..MAX_PROPOSALS {
                    let z: f64 = StandardNormal.sample(rng);
                    let y = env.loc + env.scale * z;
                    let log_target = gamma * y - c + g.log_density(y, x, xi);
                    let log_prop = normal_log_density(y, env.loc, env.scale * env.scale);
                    let u: f64 = rng.random();
                    if u.ln() < log_target - log_prop - env.log_bound {
                        return Ok(y);
                    }
                }
                Err(Error::Sampling(format!(
                    "envelope exhausted after {MAX_PROPOSALS} proposals"
                )))
            }
        }
    }
}

/// Propensity covariates, outcome model and optional instrument over named columns.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub columns: Vec<String>,
    pub propensity: Vec<usize>,
    pub outcome: OutcomeModel,
    pub instrument: Option<usize>,
}

impl ModelSpec {
    pub fn new(columns: Vec<String>, propensity: Vec<usize>, outcome: OutcomeModel) -> Self {
        Self {
            columns,
            propensity,
            outcome,
            instrument: None,
        }
    }

    pub fn with_instrument(mut self, column: usize) -> Self {
        self.instrument = Some(column);
        self
    }

    pub fn d_beta(&self) -> usize {
        self.propensity.len()
    }

    pub fn d_xi(&self) -> usize {
        self.outcome.n_params()
    }

    pub fn d_theta(&self) -> usize {
        2 + self.d_beta() + self.d_xi()
    }

    pub fn linear_part(&self, x: &[f64], theta: &Theta) -> f64 {
        theta.alpha
            + self
                .propensity
                .iter()
                .zip(&theta.beta)
                .map(|(&j, b)| x[j] * b)
                .sum::<f64>()
    }

    /// Parameter names in θ order.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names = vec!["alpha".to_string()];
        names.extend(
            self.propensity
                .iter()
                .map(|&j| format!("beta[{}]", self.columns[j])),
        );
        names.push("gamma".to_string());
        match &self.outcome {
            OutcomeModel::Normal(nb) => {
                names.extend(
                    nb.mean
                        .labels(&self.columns)
                        .into_iter()
                        .map(|l| format!("xi_mean[{l}]")),
                );
                names.extend(
                    nb.logvar
                        .labels(&self.columns)
                        .into_iter()
                        .map(|l| format!("xi_logvar[{l}]")),
                );
            }
            OutcomeModel::Generic(g) => {
                names.extend((0..g.n_params()).map(|j| format!("xi[{j}]")));
            }
        }
        names
    }

    pub fn check_theta(&self, theta: &Theta) -> Result<()> {
        if theta.beta.len() != self.d_beta() || theta.xi.len() != self.d_xi() {
            return Err(Error::InvalidArgument(format!(
                "theta has d_beta={} d_xi={}, model expects {} and {}",
                theta.beta.len(),
                theta.xi.len(),
                self.d_beta(),
                self.d_xi()
            )));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidArgument("theta has non-finite entries".into()));
        }
        Ok(())
    }
}

#[inline]
pub fn normal_log_density(y: f64, mu: f64, s2: f64) -> f64 {
    let r = y - mu;
    -0.5 * (LN_2PI + s2.ln()) - 0.5 * r * r / s2
}

#[inline]
pub(crate) fn normal_score(
    nb: &NormalBasis,
    mean_f: &[f64],
    var_f: &[f64],
    y: f64,
    xi: &[f64],
    out: &mut [f64],
) {
    let (mu, s2) = nb.mean_var_from_features(mean_f, var_f, xi);
    normal_score_at(nb, mean_f, var_f, y, mu, s2, out);
}

/// Score of log f with (μ, σ²) already evaluated.
#[inline]
pub(crate) fn normal_score_at(
    nb: &NormalBasis,
    mean_f: &[f64],
    var_f: &[f64],
    y: f64,
    mu: f64,
    s2: f64,
    out: &mut [f64],
) {
    let r = y - mu;
    let (out_m, out_v) = out.split_at_mut(mean_f.len());
    nb.mean_gradient(mean_f, mu, out_m);
    let scale = r / s2;
    for o in out_m.iter_mut() {
        *o *= scale;
    }
    let v = -0.5 * (1.0 - r * r / s2);
    for (o, f) in out_v.iter_mut().zip(var_f) {
        *o = v * f;
    }
}

/// ∂c/∂ξ = γ∇μ + ½γ²∇σ² for the normal family.
#[inline]
pub(crate) fn normal_c_xi_gradient(
    nb: &NormalBasis,
    mean_f: &[f64],
    var_f: &[f64],
    mu: f64,
    s2: f64,
    gamma: f64,
    out: &mut [f64],
) {
    let (out_m, out_v) = out.split_at_mut(mean_f.len());
    nb.mean_gradient(mean_f, mu, out_m);
    for o in out_m.iter_mut() {
        *o *= gamma;
    }
    let k = 0.5 * gamma * gamma * s2;
    for (o, f) in out_v.iter_mut().zip(var_f) {
        *o = k * f;
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn c_fun(x: &[f64], gamma: f64, xi: &[f64], model: &OutcomeModel) -> Result<f64> {
    model.c(x, gamma, xi)
}

pub fn t_fun(x: &[f64], theta: &Theta, spec: &ModelSpec) -> Result<f64> {
    Ok(spec.linear_part(x, theta) + spec.outcome.c(x, theta.gamma, &theta.xi)?)
}

/// π(x; θ, η) = pr(D = 0 | x), computed as a logistic function of t + ln{(1−η)/η}.
pub fn propensity_marginal(x: &[f64], theta: &Theta, eta: f64, spec: &ModelSpec) -> Result<f64> {
    check_eta(eta)?;
    let t = t_fun(x, theta, spec)?;
    Ok(sigmoid(t - logit(eta)))
}

/// Intercept of the conditional logistic propensity: α* = α − ln{η/(1−η)}.
pub fn alpha_star(theta: &Theta, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(theta.alpha - logit(eta))
}

pub fn log_f(y: f64, x: &[f64], xi: &[f64], model: &OutcomeModel) -> f64 {
    model.log_f(y, x, xi)
}

pub fn score_xi(y: f64, x: &[f64], xi: &[f64], model: &OutcomeModel) -> Vec<f64> {
    model.score(y, x, xi)
}

/// (1, x_pᵀ, ∂c/∂γ, ∂c/∂ξᵀ)ᵀ.
pub fn grad_t(x: &[f64], theta: &Theta, spec: &ModelSpec) -> Result<Vec<f64>> {
    let (dgamma, dxi) = spec.outcome.c_gradient(x, theta.gamma, &theta.xi)?;
    let mut g = Vec::with_capacity(spec.d_theta());
    g.push(1.0);
    g.extend(spec.propensity.iter().map(|&j| x[j]));
    g.push(dgamma);
    g.extend(dxi);
    Ok(g)
}

/// Draw y from pr(y | x, D = 0) = exp{γy − c(x, γ, ξ)} f(y | x, ξ).
pub fn tilted_outcome_sampler<R: RngCore + ?Sized>(
    x: &[f64],
    theta: &Theta,
    model: &OutcomeModel,
    rng: &mut R,
) -> Result<f64> {
    model.sample_tilted(x, theta.gamma, &theta.xi, rng)
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eta must lie in (0, 1), got {eta}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Term;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// μ(x) = ξ₀ + ξ₁x, σ² = exp(ξ₂) over a single column.
    fn linear_normal() -> OutcomeModel {
        OutcomeModel::Normal(NormalBasis::new(
            Basis::new(vec![Term::intercept(), Term::linear(0)]),
            MeanLink::Identity,
            Basis::new(vec![Term::intercept()]),
        ))
    }

    fn spec1() -> ModelSpec {
        ModelSpec::new(vec!["x".into()], vec![0], linear_normal())
    }

    /// ξ such that μ = m and σ² = s2 at x = 0.
    fn xi_for(m: f64, s2: f64) -> Vec<f64> {
        vec![m, 0.0, s2.ln()]
    }

    #[derive(Debug)]
    struct StdNormal;

    impl GenericDensity for StdNormal {
        fn n_params(&self) -> usize {
            1
        }
        fn log_density(&self, y: f64, _x: &[f64], xi: &[f64]) -> f64 {
            normal_log_density(y, xi[0], 1.0)
        }
        fn location_scale(&self, _x: &[f64], xi: &[f64]) -> (f64, f64) {
            (xi[0], 1.0)
        }
        fn envelope(&self, _x: &[f64], gamma: f64, xi: &[f64]) -> Option<Envelope> {
            // tilted target is N(ξ + γ, 1); a N(ξ + γ, 2²) proposal dominates it by ln 2
            Some(Envelope {
                loc: xi[0] + gamma,
                scale: 2.0,
                log_bound: 2f64.ln(),
            })
        }
    }

    #[test]
    fn c_vanishes_at_gamma_zero() {
        let m = linear_normal();
        assert_eq!(c_fun(&[1.3], 0.0, &[0.2, 0.4, 1.1], &m).unwrap(), 0.0);
        let g = OutcomeModel::Generic(Arc::new(StdNormal));
        assert_eq!(c_fun(&[1.3], 0.0, &[0.7], &g).unwrap(), 0.0);
    }

    #[test]
    fn c_normal_closed_form_example() {
        let m = linear_normal();
        let c = c_fun(&[0.0], 0.5, &xi_for(1.0, 2.0), &m).unwrap();
        assert!((c - 0.75).abs() < 1e-14);
        let q = m.c_quadrature(&[0.0], 0.5, &xi_for(1.0, 2.0));
        assert!((q - 0.75).abs() < 1e-12);
    }

    #[test]
    fn c_generic_standard_normal() {
        let g = OutcomeModel::Generic(Arc::new(StdNormal));
        let c = c_fun(&[0.0], 1.0, &[0.0], &g).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn t_examples() {
        let spec = spec1();
        let zero = Theta::new(0.0, vec![0.0], 0.0, vec![0.3, -0.2, 0.5]);
        for x in [-3.0, 0.0, 2.5] {
            assert_eq!(t_fun(&[x], &zero, &spec).unwrap(), 0.0);
        }
        let th = Theta::new(1.0, vec![2.0], 0.0, vec![0.3, -0.2, 0.5]);
        assert_eq!(t_fun(&[3.0], &th, &spec).unwrap(), 7.0);
        // μ = 1 and σ² = 2 at x = 2 with ξ = (1, 0, ln 2)
        let th = Theta::new(-1.0, vec![0.5], 0.5, xi_for(1.0, 2.0));
        assert!((t_fun(&[2.0], &th, &spec).unwrap() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn propensity_examples_and_overflow() {
        let spec = spec1();
        let th = Theta::new(0.0, vec![0.0], 0.0, vec![0.0, 0.0, 0.0]);
        assert!((propensity_marginal(&[1.0], &th, 0.5, &spec).unwrap() - 0.5).abs() < 1e-15);
        assert!((propensity_marginal(&[1.0], &th, 0.7, &spec).unwrap() - 0.3).abs() < 1e-15);
        let big = Theta::new(800.0, vec![0.0], 0.0, vec![0.0, 0.0, 0.0]);
        let p = propensity_marginal(&[1.0], &big, 0.5, &spec).unwrap();
        assert!(p.is_finite() && p <= 1.0 && p > 0.999);
        assert!(propensity_marginal(&[1.0], &th, 1.0, &spec).is_err());
    }

    #[test]
    fn alpha_star_examples() {
        let th = |a| Theta::new(a, vec![], 0.0, vec![]);
        assert_eq!(alpha_star(&th(0.0), 0.5).unwrap(), 0.0);
        assert_eq!(alpha_star(&th(1.0), 0.5).unwrap(), 1.0);
        let expected = 0.3 - 3f64.ln();
        assert!((alpha_star(&th(0.3), 0.75).unwrap() - expected).abs() < 1e-15);
        assert!((expected + 0.7986).abs() < 1e-4);
    }

    #[test]
    fn log_f_examples() {
        let m = linear_normal();
        let v = log_f(0.0, &[0.0], &xi_for(0.0, 1.0), &m);
        assert!((v + 0.5 * LN_2PI).abs() < 1e-15);
        let v = log_f(3.0, &[0.0], &xi_for(1.0, 4.0), &m);
        let expected = -0.5 * (8.0 * std::f64::consts::PI).ln() - 0.5;
        assert!((v - expected).abs() < 1e-14);
        assert!((expected + 2.1121).abs() < 1e-4);
        let total = GaussHermite::default_rule().integral(1.0, 2.0, |_| 1.0, |y| m.log_f(y, &[0.0], &xi_for(1.0, 4.0)));
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn score_examples() {
        let m = linear_normal();
        let xi = xi_for(0.0, 1.0);
        let s = score_xi(1.0, &[0.0], &xi, &m);
        assert!((s[0] - 1.0).abs() < 1e-15);
        // at y = μ the mean block vanishes and the variance block is −½·features
        let s = score_xi(0.0, &[0.0], &xi, &m);
        assert_eq!(s[0], 0.0);
        assert_eq!(s[1], 0.0);
        assert!((s[2] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn grad_t_at_gamma_zero() {
        let spec = spec1();
        let th = Theta::new(0.4, vec![-0.3], 0.0, vec![0.5, 1.5, 0.2]);
        let g = grad_t(&[2.0], &th, &spec).unwrap();
        assert_eq!(g[0], 1.0);
        assert_eq!(g[1], 2.0);
        assert!((g[2] - 3.5).abs() < 1e-15);
        assert!(g[3..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn tilted_sampler_normal_means() {
        let m = linear_normal();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (mu, s2, gamma, expected, tol) in [(0.0, 1.0, 0.5, 0.5, 0.01), (1.0, 4.0, 0.25, 2.0, 0.02)] {
            let th = Theta::new(0.0, vec![0.0], gamma, xi_for(mu, s2));
            let n = 1_000_000;
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for _ in 0..n {
                let y = tilted_outcome_sampler(&[0.0], &th, &m, &mut rng).unwrap();
                sum += y;
                sum2 += y * y;
            }
            let mean = sum / n as f64;
            let var = sum2 / n as f64 - mean * mean;
            assert!((mean - expected).abs() < tol, "mean {mean}");
            // 4 Monte Carlo standard errors for mean and variance
            assert!((mean - (mu + gamma * s2)).abs() < 4.0 * (s2 / n as f64).sqrt());
            assert!((var - s2).abs() < 4.0 * s2 * (2.0 / n as f64).sqrt());
        }
    }

    #[test]
    fn tilted_sampler_gamma_zero_is_untilted() {
        let m = linear_normal();
        let th = Theta::new(0.0, vec![0.0], 0.0, xi_for(1.0, 4.0));
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let y = tilted_outcome_sampler(&[0.0], &th, &m, &mut a).unwrap();
        let z: f64 = StandardNormal.sample(&mut b);
        assert_eq!(y, 1.0 + 2.0 * z);
    }

    #[test]
    fn generic_accept_reject_mean() {
        let g = OutcomeModel::Generic(Arc::new(StdNormal));
        let th = Theta::new(0.0, vec![], 0.5, vec![1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let mean: f64 = (0..n)
            .map(|_| tilted_outcome_sampler(&[0.0], &th, &g, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.5).abs() < 4.0 / (n as f64).sqrt());
    }
}
