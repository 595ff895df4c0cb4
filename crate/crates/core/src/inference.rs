//! Wald intervals, the likelihood-ratio test for θ and the nonparametric bootstrap.

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{fit_mle, lr_stat, mu_hat, FitOptions, FitResult};
use crate::model::{ModelSpec, Theta};
use crate::par::Execution;
use crate::rng::substream;

pub const MIN_BOOTSTRAP: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CiMethod {
    WaldPlugin,
    WaldBootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalEstimate {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: CiMethod,
    pub se: f64,
    pub bootstrap_failures: usize,
}

/// Where the standard error of μ̂ comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceSource {
    Plugin,
    Bootstrap { se: f64, failures: usize },
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("level must lie in (0, 1), got {level}")))
    }
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// estimate ± z_{(1+level)/2}·se.
pub fn wald_interval(estimate: f64, se: f64, level: f64, method: CiMethod, bootstrap_failures: usize) -> Result<IntervalEstimate> {
    check_level(level)?;
    if !(se >= 0.0) || !estimate.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid estimate {estimate} or standard error {se}")));
    }
    let half = normal_quantile(0.5 * (1.0 + level)) * se;
    Ok(IntervalEstimate {
        estimate,
        lower: estimate - half,
        upper: estimate + half,
        level,
        method,
        se,
        bootstrap_failures,
    })
}

pub fn wald_ci_mu(fit: &FitResult, level: f64, source: VarianceSource) -> Result<IntervalEstimate> {
    let mu = fit
        .mu_hat
        .ok_or_else(|| Error::InvalidArgument("fit carries no mean estimate".into()))?;
    match source {
        VarianceSource::Plugin => {
            let se = fit.mu_se.ok_or_else(|| {
                Error::InvalidArgument("plug-in variance unavailable (singular information matrix)".into())
            })?;
            wald_interval(mu, se, level, CiMethod::WaldPlugin, 0)
        }
        VarianceSource::Bootstrap { se, failures } => {
            wald_interval(mu, se, level, CiMethod::WaldBootstrap, failures)
        }
    }
}

/// θ̂ⱼ ± z·√(Σ̂ⱼⱼ/n) from the asymptotic covariance of √n(θ̂ − θ).
pub fn wald_ci_theta(fit: &FitResult, index: usize, level: f64) -> Result<IntervalEstimate> {
    let d = fit.d_theta();
    if index >= d {
        return Err(Error::InvalidArgument(format!("component {index} out of range for d_theta = {d}")));
    }
    let cov = fit.theta_cov.as_ref().ok_or(Error::SingularVhat {
        condition: fit.vhat_condition.unwrap_or(f64::INFINITY),
    })?;
    let var = cov[index][index];
    if !(var > 0.0) {
        return Err(Error::InvalidArgument(format!("non-positive variance {var} for component {index}")));
    }
    let se = (var / fit.n as f64).sqrt();
    wald_interval(fit.theta_hat.to_vec()[index], se, level, CiMethod::WaldPlugin, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LrTest {
    pub stat: f64,
    pub critical: f64,
    pub reject: bool,
    pub pvalue: f64,
    pub df: usize,
    pub feasible: bool,
}

pub fn chi2_upper_tail(stat: f64, df: usize) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    if !stat.is_finite() {
        return 0.0;
    }
    let chi = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    chi.sf(stat)
}

pub fn chi2_quantile(p: f64, df: usize) -> f64 {
    ChiSquared::new(df as f64).expect("positive degrees of freedom").inverse_cdf(p)
}

/// Test H₀: θ = θ₀ by referring R(θ₀) to χ² with d_θ degrees of freedom.
/// `level` is the confidence level, so the test size is 1 − level.
pub fn lr_test(theta0: &Theta, data: &Dataset, spec: &ModelSpec, fit: &FitResult, level: f64) -> Result<LrTest> {
    check_level(level)?;
    let r = lr_stat(theta0, data, spec, fit)?;
    let df = spec.d_theta();
    let critical = chi2_quantile(level, df);
    Ok(LrTest {
        stat: r.stat,
        critical,
        reject: r.stat > critical,
        pvalue: chi2_upper_tail(r.stat, df),
        df,
        feasible: r.feasible,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapResult {
    pub se_mu: f64,
    pub se_theta: Vec<f64>,
    pub failures: usize,
    pub requested: usize,
    /// One row per successful resample: μ̂ followed by θ̂.
    pub estimates: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct BootstrapOptions {
    pub fit: FitOptions,
    pub execution: Execution,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions {
                multistarts: 2,
                inference: false,
                ..FitOptions::default()
            },
            execution: Execution::Parallel,
        }
    }
}

/// Resample index sets: resample `b` is drawn from its own stream.
pub fn resample_indices(n: usize, b: usize, seed: u64) -> Vec<usize> {
    let mut rng = substream(seed, b as u64);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Generic bootstrap engine: evaluate `statistic` on `reps` resamples and keep
/// the successful ones in resample order.
pub fn bootstrap_with<F>(n: usize, reps: usize, seed: u64, execution: Execution, statistic: F) -> (Vec<Vec<f64>>, usize)
where
    F: Fn(&[usize]) -> Result<Vec<f64>> + Sync + Send,
{
    let outcomes = execution.map(reps, |b| statistic(&resample_indices(n, b, seed)));
    let mut rows = Vec::with_capacity(reps);
    let mut failures = 0;
    for o in outcomes {
        match o {
            Ok(v) => rows.push(v),
            Err(_) => failures += 1,
        }
    }
    (rows, failures)
}

/// Sample standard deviation of each column.
pub fn column_sd(rows: &[Vec<f64>]) -> Vec<f64> {
    let m = rows.len();
    let Some(first) = rows.first() else {
        return vec![];
    };
    (0..first.len())
        .map(|j| {
            if m < 2 {
                return 0.0;
            }
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / m as f64;
            (rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt()
        })
        .collect()
}

/// Nonparametric bootstrap of (μ̂, θ̂). Refits warm-start from `reference`;
/// failed refits are discarded and counted.
pub fn bootstrap(
    data: &Dataset,
    spec: &ModelSpec,
    reference: &FitResult,
    b: usize,
    seed: u64,
    opts: &BootstrapOptions,
) -> Result<BootstrapResult> {
    if b < MIN_BOOTSTRAP {
        return Err(Error::InvalidArgument(format!("need at least {MIN_BOOTSTRAP} bootstrap samples, got {b}")));
    }
    let fit_opts = FitOptions {
        start: Some(reference.theta_hat.clone()),
        inverse_hessian: Some(reference.inverse_hessian.clone()),
        inference: false,
        ..opts.fit.clone()
    };
    let (rows, failures) = bootstrap_with(data.n(), b, seed, opts.execution, |idx| {
        let sample = data.select(idx);
        let fit = fit_mle(&sample, spec, &fit_opts)?;
        let mu = mu_hat(&fit, &sample, spec)?;
        let mut row = vec![mu];
        row.extend(fit.theta_hat.to_vec());
        Ok(row)
    });
    if 2 * failures > b {
        return Err(Error::BootstrapFailures {
            failures,
            requested: b,
        });
    }
    let sd = column_sd(&rows);
    Ok(BootstrapResult {
        se_mu: sd[0],
        se_theta: sd[1..].to_vec(),
        failures,
        requested: b,
        estimates: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_interval() {
        let ci = wald_interval(0.0, 1.0, 0.95, CiMethod::WaldPlugin, 0).unwrap();
        assert!((ci.upper - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((ci.lower + 1.959_963_984_540_054).abs() < 1e-9);
        let wide = wald_interval(0.0, 1.0, 0.99, CiMethod::WaldPlugin, 0).unwrap();
        assert!(wide.lower < ci.lower && wide.upper > ci.upper);
        assert!(wald_interval(0.0, 1.0, 1.0, CiMethod::WaldPlugin, 0).is_err());
    }

    #[test]
    fn chi2_tail_edges() {
        assert_eq!(chi2_upper_tail(0.0, 3), 1.0);
        assert!((chi2_upper_tail(chi2_quantile(0.95, 7), 7) - 0.05).abs() < 1e-10);
        assert!((chi2_quantile(0.95, 1) - 3.841_458_820_694_124).abs() < 1e-8);
    }

    #[test]
    fn constant_statistic_has_zero_se() {
        let (rows, failures) = bootstrap_with(10, 200, 3, Execution::Parallel, |_| Ok(vec![1.5, -2.0]));
        assert_eq!(failures, 0);
        assert_eq!(column_sd(&rows), vec![0.0, 0.0]);
    }

    #[test]
    fn resampling_is_deterministic() {
        assert_eq!(resample_indices(50, 4, 9), resample_indices(50, 4, 9));
        assert_ne!(resample_indices(50, 4, 9), resample_indices(50, 5, 9));
    }
}
