//! Identifiability of (α, β, γ) for a declared model.
//!
//! Checks are syntactic on the declared bases, plus a numerical rank test on
//! sample points. A verdict is advisory; fitting is not blocked by it.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MeanLink, ModelSpec, NormalBasis, OutcomeModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IdentStatus {
    Identifiable,
    NotIdentifiable,
    IdentifiableOnlyIfGammaZero,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IdentRule {
    InstrumentVariable,
    LinearIndependenceBasis,
    NormalCaseI,
    NormalCaseII,
    NormalCaseIII,
    NoRuleApplies,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub status: IdentStatus,
    pub rule: IdentRule,
    pub explanation: String,
    pub caveats: Vec<String>,
}

impl Verdict {
    fn new(status: IdentStatus, rule: IdentRule, explanation: impl Into<String>) -> Self {
        Self {
            status,
            rule,
            explanation: explanation.into(),
            caveats: vec![],
        }
    }

    fn unknown(explanation: impl Into<String>) -> Self {
        Self::new(IdentStatus::Unknown, IdentRule::NoRuleApplies, explanation)
    }

    pub fn is_identifiable(&self) -> bool {
        self.status == IdentStatus::Identifiable
    }
}

const SIGN_CAVEAT: &str = "the quadratic tilt term ½γ²σ² is even in γ; with no instrument the sign of γ rests on the γ-linear mean terms";

fn outcome_uses(spec: &ModelSpec, col: usize) -> bool {
    match &spec.outcome {
        OutcomeModel::Normal(nb) => nb.mean.uses_column(col) || nb.logvar.uses_column(col),
        OutcomeModel::Generic(g) => g.covariates().is_some_and(|c| c.contains(&col)),
    }
}

/// An instrument is excluded from the propensity and enters the outcome model.
pub fn check_instrument(spec: &ModelSpec, instrument: usize) -> Result<Verdict> {
    let Some(name) = spec.columns.get(instrument) else {
        return Err(Error::InvalidArgument(format!(
            "instrument index {instrument} out of range for {} columns",
            spec.columns.len()
        )));
    };
    if spec.propensity.contains(&instrument) {
        return Ok(Verdict::unknown(format!(
            "'{name}' is a propensity covariate, so it cannot serve as an instrument"
        )));
    }
    if !outcome_uses(spec, instrument) {
        return Ok(Verdict::unknown(format!(
            "'{name}' does not enter the outcome model, so it carries no information on γ"
        )));
    }
    Ok(Verdict::new(
        IdentStatus::Identifiable,
        IdentRule::InstrumentVariable,
        format!("'{name}' is excluded from the propensity and shifts the outcome distribution"),
    ))
}

fn normal(spec: &ModelSpec) -> Result<&NormalBasis> {
    spec.outcome
        .as_normal()
        .ok_or_else(|| Error::InvalidArgument("rule applies to the normal outcome family only".into()))
}

/// Observations for the normal family with mean xᵀb₁ + b₂xᵀx and log-variance b₃ + xᵀb₄.
pub fn check_normal_family(spec: &ModelSpec, gamma_zero_hypothesis: bool) -> Result<Verdict> {
    let nb = normal(spec)?;
    if nb.link == MeanLink::Log {
        return Ok(Verdict::new(
            IdentStatus::Identifiable,
            IdentRule::LinearIndependenceBasis,
            "log-link mean exp(·) is not a linear function of x, so it is independent of 1 and x",
        ));
    }
    if nb.mean.max_degree() >= 2 {
        let mut v = Verdict::new(
            IdentStatus::Identifiable,
            IdentRule::NormalCaseI,
            "the mean has a term of degree two or more (b₂ ≠ 0)",
        );
        v.caveats.push(SIGN_CAVEAT.into());
        return Ok(v);
    }
    if let Some(term) = nb
        .mean
        .terms
        .iter()
        .find(|t| t.linear_column().is_some_and(|c| !spec.propensity.contains(&c)))
    {
        return Ok(Verdict::new(
            IdentStatus::Identifiable,
            IdentRule::InstrumentVariable,
            format!(
                "mean term '{}' is excluded from the propensity and acts as an instrument",
                term.label(&spec.columns)
            ),
        ));
    }
    if nb.logvar.is_constant() {
        return Ok(Verdict::new(
            IdentStatus::NotIdentifiable,
            IdentRule::NormalCaseII,
            "linear mean in the propensity covariates with constant variance: γμ is absorbed by α + xᵀβ",
        ));
    }
    if nb.logvar.max_degree() <= 1 {
        return Ok(if gamma_zero_hypothesis {
            Verdict::new(
                IdentStatus::Identifiable,
                IdentRule::NormalCaseIII,
                "linear mean with log-linear variance, identifiable under the hypothesis γ = 0",
            )
        } else {
            Verdict::new(
                IdentStatus::IdentifiableOnlyIfGammaZero,
                IdentRule::NormalCaseIII,
                "linear mean with log-linear variance: identifiable only when γ = 0",
            )
        });
    }
    Ok(Verdict::unknown("linear mean with a nonlinear log-variance is outside the normal-family observations"))
}

/// Generic ξ used when none is supplied to the rank test.
fn probe_xi(nb: &NormalBasis) -> Vec<f64> {
    (0..nb.n_params()).map(|j| 0.3 + 0.1 * j as f64).collect()
}

/// Rank test of {1, x_p, g₁(x), …} on sample points, where the gⱼ carry the γ-dependent
/// part of c(x, γ, ξ). γ-linear terms come from the mean and the ½γ² term from σ²(x).
pub fn check_linear_independence(spec: &ModelSpec, points: &[Vec<f64>], xi: Option<&[f64]>) -> Result<Verdict> {
    let nb = normal(spec)?;
    let xi: Vec<f64> = match xi {
        Some(v) if v.len() == nb.n_params() => v.to_vec(),
        Some(v) => {
            return Err(Error::InvalidArgument(format!("xi has {} entries, model expects {}", v.len(), nb.n_params())))
        }
        None => probe_xi(nb),
    };
    let mut linear_g: Vec<Box<dyn Fn(&[f64]) -> f64 + '_>> = Vec::new();
    match nb.link {
        MeanLink::Identity => {
            for term in &nb.mean.terms {
                let absorbed = term.is_intercept() || term.linear_column().is_some_and(|c| spec.propensity.contains(&c));
                if !absorbed {
                    linear_g.push(Box::new(move |x: &[f64]| term.eval(x)));
                }
            }
        }
        MeanLink::Log => {
            let xi = xi.clone();
            linear_g.push(Box::new(move |x: &[f64]| nb.mean_var(x, &xi).0));
        }
    }
    let quadratic_g = !nb.logvar.is_constant();
    let n_cols = 1 + spec.d_beta() + linear_g.len() + usize::from(quadratic_g);
    let needed = linear_g.len() + usize::from(quadratic_g) + spec.columns.len() + 1;
    if points.len() < needed {
        return Err(Error::InsufficientPoints {
            needed,
            got: points.len(),
        });
    }
    if linear_g.is_empty() {
        return Ok(Verdict::unknown(if quadratic_g {
            "only σ²(x) carries γ, through ½γ², which is not injective in γ"
        } else {
            "no basis function beyond 1 and the propensity covariates carries γ"
        }));
    }
    let m = DMatrix::from_fn(points.len(), n_cols, |r, c| {
        let x = &points[r];
        if c == 0 {
            1.0
        } else if c <= spec.d_beta() {
            x[spec.propensity[c - 1]]
        } else if c - 1 - spec.d_beta() < linear_g.len() {
            linear_g[c - 1 - spec.d_beta()](x)
        } else {
            nb.mean_var(x, &xi).1
        }
    });
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 1e-8 * max {
        Ok(Verdict::new(
            IdentStatus::Identifiable,
            IdentRule::LinearIndependenceBasis,
            format!("{n_cols} basis functions are linearly independent on the sample (σ_min/σ_max = {:.3e})", min / max),
        ))
    } else {
        Ok(Verdict::unknown(format!(
            "basis functions are numerically dependent on the sample (σ_min/σ_max = {:.3e})",
            min / max.max(f64::MIN_POSITIVE)
        )))
    }
}

/// Instrument rule, then the normal-family observations, then the rank test.
pub fn check_model(spec: &ModelSpec, points: Option<&[Vec<f64>]>, xi: Option<&[f64]>, gamma_zero_hypothesis: bool) -> Result<Verdict> {
    if let Some(z) = spec.instrument {
        let v = check_instrument(spec, z)?;
        if v.is_identifiable() {
            return Ok(v);
        }
    }
    if spec.outcome.as_normal().is_none() {
        return Ok(Verdict::unknown("no syntactic rule covers a generic outcome density without an instrument"));
    }
    let v = check_normal_family(spec, gamma_zero_hypothesis)?;
    if v.status != IdentStatus::Unknown {
        return Ok(v);
    }
    match points {
        Some(p) => check_linear_independence(spec, p, xi),
        None => Ok(v),
    }
}
