//! Scenario generators, Monte Carlo ground truth and the replication harness.

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, Term};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimation::{fit_mle, FitOptions};
use crate::inference::{bootstrap, wald_ci_mu, BootstrapOptions, VarianceSource};
use crate::model::{logit, sigmoid, MeanLink, ModelSpec, NormalBasis, OutcomeModel, Theta};
use crate::par::Execution;
use crate::rng::{derive_seed, substream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CovariateSampler {
    Bernoulli { p: f64 },
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, sd: f64 },
}

impl CovariateSampler {
    fn sample(&self, rng: &mut StreamRng) -> Result<f64> {
        let bad = |e: String| Error::InvalidArgument(format!("covariate sampler: {e}"));
        Ok(match *self {
            CovariateSampler::Bernoulli { p } => {
                if Bernoulli::new(p).map_err(|e| bad(e.to_string()))?.sample(rng) {
                    1.0
                } else {
                    0.0
                }
            }
            CovariateSampler::Uniform { low, high } => {
                Uniform::new(low, high).map_err(|e| bad(e.to_string()))?.sample(rng)
            }
            CovariateSampler::Normal { mean, sd } => {
                Normal::new(mean, sd).map_err(|e| bad(e.to_string()))?.sample(rng)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioName {
    Example1,
    Example2,
    Example3,
    Custom,
}

/// Data-generating truth plus the model the harness fits.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    /// Independent covariate laws, one per column of `model.columns`.
    pub covariates: Vec<CovariateSampler>,
    pub model: ModelSpec,
    /// Conditional-propensity intercept α*, slopes β and tilt γ.
    pub alpha_star: f64,
    pub beta: Vec<f64>,
    pub gamma: f64,
    pub xi: Vec<f64>,
    pub sigma2: f64,
    pub n: usize,
}

/// σ² setting from text: a number, or `eA` / `exp(A)` for e^A.
pub fn parse_sigma2(text: &str) -> Result<f64> {
    let s = text.trim();
    let exponent = s
        .strip_prefix("exp(")
        .and_then(|r| r.strip_suffix(')'))
        .or_else(|| s.strip_prefix('e').filter(|r| !r.is_empty()));
    let value = match exponent {
        Some(a) => a.trim().parse::<f64>().map(f64::exp),
        None => s.parse::<f64>(),
    }
    .map_err(|_| Error::InvalidArgument(format!("cannot read sigma2 setting '{text}'")))?;
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidArgument(format!("sigma2 must be positive, got {value}")))
    }
}

fn names(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

/// Preset for Example 1, 2 or 3 at the given σ².
pub fn example(k: u8, sigma2: f64, n: usize) -> Result<ScenarioSpec> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
    }
    let ls2 = sigma2.ln();
    let intercept = || Basis::new(vec![Term::intercept()]);
    match k {
        1 | 2 => {
            // columns: u, z; z is the instrument
            let mean = Basis::new(vec![Term::intercept(), Term::linear(0), Term::linear(1)]);
            let (link, xi0, covariates) = if k == 1 {
                (
                    MeanLink::Log,
                    0.5,
                    vec![
                        CovariateSampler::Bernoulli { p: 0.5 },
                        CovariateSampler::Uniform { low: -1.0, high: 1.0 },
                    ],
                )
            } else {
                (
                    MeanLink::Identity,
                    2.5,
                    vec![
                        CovariateSampler::Normal { mean: 1.0, sd: 1.0 },
                        CovariateSampler::Normal { mean: 0.0, sd: 1.0 },
                    ],
                )
            };
            let outcome = OutcomeModel::Normal(NormalBasis::new(mean, link, intercept()));
            Ok(ScenarioSpec {
                name: if k == 1 { ScenarioName::Example1 } else { ScenarioName::Example2 },
                covariates,
                model: ModelSpec::new(names(&["u", "z"]), vec![0], outcome).with_instrument(1),
                alpha_star: -1.7,
                beta: vec![-0.4],
                gamma: 0.5,
                xi: vec![xi0, -1.0, 1.5, ls2],
                sigma2,
                n,
            })
        }
        3 => {
            let x = Term::linear(0);
            let mean = Basis::new(vec![Term::intercept(), x.clone(), Term::from_factors([(0, 2)])]);
            let logvar = Basis::new(vec![Term::intercept(), x]);
            let outcome = OutcomeModel::Normal(NormalBasis::new(mean, MeanLink::Identity, logvar));
            Ok(ScenarioSpec {
                name: ScenarioName::Example3,
                covariates: vec![CovariateSampler::Normal { mean: 0.0, sd: 1.0 }],
                model: ModelSpec::new(names(&["x"]), vec![0], outcome),
                alpha_star: -2.7,
                beta: vec![-0.4],
                gamma: 0.5,
                xi: vec![2.0, -1.0, 1.0, ls2, 0.5],
                sigma2,
                n,
            })
        }
        _ => Err(Error::InvalidArgument(format!("no example {k}; expected 1, 2 or 3"))),
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.covariates.len() != self.model.columns.len() {
            return Err(Error::Spec(format!(
                "{} covariate laws for {} columns",
                self.covariates.len(),
                self.model.columns.len()
            )));
        }
        self.model.check_theta(&self.theta_with_alpha(self.alpha_star))?;
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        Ok(())
    }

    fn theta_with_alpha(&self, alpha: f64) -> Theta {
        Theta::new(alpha, self.beta.clone(), self.gamma, self.xi.clone())
    }

    /// True θ, whose DRM intercept α = α* + logit η needs the true η.
    pub fn true_theta(&self, eta: f64) -> Theta {
        self.theta_with_alpha(self.alpha_star + logit(eta))
    }

    /// pr(D = 0 | x) = sigmoid(α* + x_pᵀβ + c(x, γ, ξ)).
    pub fn missing_probability(&self, x: &[f64]) -> Result<f64> {
        let theta = self.theta_with_alpha(self.alpha_star);
        let lin = self.model.linear_part(x, &theta);
        Ok(sigmoid(lin + self.model.outcome.c(x, self.gamma, &self.xi)?))
    }

    fn draw_x(&self, rng: &mut StreamRng, out: &mut Vec<f64>) -> Result<()> {
        for s in &self.covariates {
            out.push(s.sample(rng)?);
        }
        Ok(())
    }

    /// One row: x, then d, then y from f (observed) or its e^{γy} tilt (missing).
    fn draw_row(&self, rng: &mut StreamRng, x: &mut Vec<f64>) -> Result<(bool, f64)> {
        x.clear();
        self.draw_x(rng, x)?;
        let p_miss = self.missing_probability(x)?;
        let missing = rng.random::<f64>() < p_miss;
        let gamma = if missing { self.gamma } else { 0.0 };
        let y = self.model.outcome.sample_tilted(x, gamma, &self.xi, rng)?;
        Ok((!missing, y))
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub data: Dataset,
    /// Responses before masking.
    pub y_full: Vec<f64>,
}

/// n rows from the scenario, bit-reproducible for a fixed seed.
pub fn generate(scenario: &ScenarioSpec, seed: u64) -> Result<SimulatedData> {
    scenario.validate()?;
    let mut rng = substream(seed, 0);
    let mut x_all = Vec::with_capacity(scenario.n * scenario.covariates.len());
    let mut y = Vec::with_capacity(scenario.n);
    let mut y_full = Vec::with_capacity(scenario.n);
    let mut x = Vec::new();
    for _ in 0..scenario.n {
        let (observed, yi) = scenario.draw_row(&mut rng, &mut x)?;
        x_all.extend_from_slice(&x);
        y.push(observed.then_some(yi));
        y_full.push(yi);
    }
    Ok(SimulatedData {
        data: Dataset::new(scenario.model.columns.clone(), x_all, y)?,
        y_full,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truth {
    /// Mean of the pre-masking responses.
    pub mu: f64,
    pub mu_se: f64,
    /// Fraction of missing responses.
    pub miss: f64,
    pub miss_se: f64,
    /// The same two targets averaged as E[K(x)] and E[π(x)] over x draws alone.
    pub mu_smoothed: f64,
    pub miss_smoothed: f64,
}

const TRUTH_BLOCK: usize = 1 << 16;

/// Monte Carlo ground truth for (μ, 1 − η).
pub fn true_mu_eta(scenario: &ScenarioSpec, draws: usize, seed: u64, execution: Execution) -> Result<Truth> {
    scenario.validate()?;
    if draws == 0 {
        return Err(Error::InvalidArgument("draws must be positive".into()));
    }
    let blocks = draws.div_ceil(TRUTH_BLOCK);
    // per block: Σy, Σy², Σd0, Σπ, ΣK
    let partial = execution.map(blocks, |b| -> Result<[f64; 5]> {
        let mut rng = substream(seed, b as u64);
        let m = TRUTH_BLOCK.min(draws - b * TRUTH_BLOCK);
        let mut acc = [0.0; 5];
        let mut x = Vec::new();
        for _ in 0..m {
            let (observed, y) = scenario.draw_row(&mut rng, &mut x)?;
            acc[0] += y;
            acc[1] += y * y;
            acc[2] += if observed { 0.0 } else { 1.0 };
            let pi = scenario.missing_probability(&x)?;
            let mom = scenario.model.outcome.moments(&x, scenario.gamma, &scenario.xi)?;
            acc[3] += pi;
            acc[4] += (1.0 - pi) * mom.mean + pi * mom.tilted_mean;
        }
        Ok(acc)
    });
    let mut tot = [0.0; 5];
    for p in partial {
        for (t, v) in tot.iter_mut().zip(p?) {
            *t += v;
        }
    }
    let m = draws as f64;
    let mu = tot[0] / m;
    let var = (tot[1] / m - mu * mu).max(0.0);
    let miss = tot[2] / m;
    Ok(Truth {
        mu,
        mu_se: (var / m).sqrt(),
        miss,
        miss_se: (miss * (1.0 - miss) / m).sqrt(),
        mu_smoothed: tot[4] / m,
        miss_smoothed: tot[3] / m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Baselines {
    pub ybar_r: f64,
    pub ybar_full: Option<f64>,
}

/// Complete-case mean ȳ_r and, when available, the full-data mean ȳ.
pub fn baselines(data: &Dataset, truth_y: Option<&[f64]>) -> Result<Baselines> {
    let obs: Vec<f64> = data.responses().iter().flatten().copied().collect();
    if obs.is_empty() {
        return Err(Error::DegenerateData("no observed responses for the complete-case mean".into()));
    }
    let ybar_full = match truth_y {
        Some(y) if !y.is_empty() => Some(y.iter().sum::<f64>() / y.len() as f64),
        Some(_) => return Err(Error::InvalidArgument("empty full response vector".into())),
        None => None,
    };
    Ok(Baselines {
        ybar_r: obs.iter().sum::<f64>() / obs.len() as f64,
        ybar_full,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum McInterval {
    None,
    Plugin,
    Bootstrap { b: usize },
}

#[derive(Debug, Clone)]
pub struct McOptions {
    pub interval: McInterval,
    pub level: f64,
    pub fit: FitOptions,
    pub truth_draws: usize,
    pub execution: Execution,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            interval: McInterval::Plugin,
            level: 0.95,
            fit: FitOptions::default(),
            truth_draws: 1_000_000,
            execution: Execution::Parallel,
        }
    }
}

/// Summary of one estimator across replications; scales follow the ×100 convention.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCReport {
    pub estimator: String,
    pub reps: usize,
    pub n: usize,
    pub truth: f64,
    pub mean_estimate: f64,
    pub rb_pct: f64,
    pub mse_x100: f64,
    pub coverage_pct: Option<f64>,
    pub mean_se: Option<f64>,
    pub empirical_sd: f64,
    pub failures: usize,
    pub seed: u64,
}

/// What one replication produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepRecord {
    pub rep: usize,
    pub mu_hat: Option<f64>,
    pub mu_se: Option<f64>,
    pub covered: Option<bool>,
    pub ybar_r: f64,
    pub ybar_r_covered: bool,
    pub ybar_full: f64,
    pub ybar_full_covered: bool,
    pub theta_hat: Option<Vec<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct McOutcome {
    pub truth: Truth,
    pub reports: Vec<MCReport>,
    pub records: Vec<RepRecord>,
}

fn mean_sd_covered(values: &[f64], level_z: f64) -> (f64, f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd, level_z * sd / m.sqrt())
}

fn one_rep(scenario: &ScenarioSpec, rep: usize, seed: u64, opts: &McOptions, truth: f64) -> Result<RepRecord> {
    let sim = generate(scenario, derive_seed(seed, rep as u64))?;
    let base = baselines(&sim.data, Some(&sim.y_full))?;
    let z = crate::inference::normal_quantile(0.5 * (1.0 + opts.level));
    let obs: Vec<f64> = sim.data.responses().iter().flatten().copied().collect();
    let (_, _, half_r) = mean_sd_covered(&obs, z);
    let (_, _, half_full) = mean_sd_covered(&sim.y_full, z);
    let mut record = RepRecord {
        rep,
        mu_hat: None,
        mu_se: None,
        covered: None,
        ybar_r: base.ybar_r,
        ybar_r_covered: (base.ybar_r - truth).abs() <= half_r,
        ybar_full: base.ybar_full.unwrap_or(f64::NAN),
        ybar_full_covered: (base.ybar_full.unwrap_or(f64::NAN) - truth).abs() <= half_full,
        theta_hat: None,
        error: None,
    };
    let inference = !matches!(opts.interval, McInterval::None);
    let fit_opts = FitOptions {
        seed: derive_seed(seed ^ 0x5EED, rep as u64),
        inference,
        ..opts.fit.clone()
    };
    let outcome = fit_mle(&sim.data, &scenario.model, &fit_opts).and_then(|mut fit| {
        if fit.mu_hat.is_none() {
            fit.mu_hat = Some(crate::estimation::mu_hat(&fit, &sim.data, &scenario.model)?);
        }
        let ci = match opts.interval {
            McInterval::None => None,
            McInterval::Plugin => Some(wald_ci_mu(&fit, opts.level, VarianceSource::Plugin)?),
            McInterval::Bootstrap { b } => {
                let bopts = BootstrapOptions {
                    execution: Execution::Sequential,
                    ..BootstrapOptions::default()
                };
                let boot = bootstrap(&sim.data, &scenario.model, &fit, b, derive_seed(seed ^ 0xB007, rep as u64), &bopts)?;
                Some(wald_ci_mu(
                    &fit,
                    opts.level,
                    VarianceSource::Bootstrap {
                        se: boot.se_mu,
                        failures: boot.failures,
                    },
                )?)
            }
        };
        Ok((fit, ci))
    });
    match outcome {
        Ok((fit, ci)) => {
            record.mu_hat = fit.mu_hat;
            record.mu_se = ci.map(|c| c.se).or(fit.mu_se);
            record.covered = ci.map(|c| c.lower <= truth && truth <= c.upper);
            record.theta_hat = Some(fit.theta_hat.to_vec());
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    Ok(record)
}

fn summarize(estimator: &str, values: &[(f64, Option<bool>, Option<f64>)], reps: usize, n: usize, truth: f64, seed: u64) -> MCReport {
    let m = values.len() as f64;
    let mean = values.iter().map(|v| v.0).sum::<f64>() / m;
    let mse = values.iter().map(|v| (v.0 - truth).powi(2)).sum::<f64>() / m;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    let cov: Vec<bool> = values.iter().filter_map(|v| v.1).collect();
    let ses: Vec<f64> = values.iter().filter_map(|v| v.2).collect();
    MCReport {
        estimator: estimator.to_string(),
        reps,
        n,
        truth,
        mean_estimate: mean,
        rb_pct: 100.0 * (mean - truth) / truth,
        mse_x100: 100.0 * mse,
        coverage_pct: (!cov.is_empty()).then(|| 100.0 * cov.iter().filter(|c| **c).count() as f64 / cov.len() as f64),
        mean_se: (!ses.is_empty()).then(|| ses.iter().sum::<f64>() / ses.len() as f64),
        empirical_sd: sd,
        failures: reps - values.len(),
        seed,
    }
}

/// Replicate generate → fit → interval and aggregate against the Monte Carlo truth.
pub fn run_mc(scenario: &ScenarioSpec, reps: usize, seed: u64, opts: &McOptions) -> Result<McOutcome> {
    scenario.validate()?;
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let truth = true_mu_eta(scenario, opts.truth_draws, derive_seed(seed, u64::MAX), opts.execution)?;
    let target = truth.mu_smoothed;
    let records = opts
        .execution
        .map(reps, |r| one_rep(scenario, r, seed, opts, target))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let fitted: Vec<_> = records
        .iter()
        .filter_map(|r| r.mu_hat.map(|m| (m, r.covered, r.mu_se)))
        .collect();
    let failures = reps - fitted.len();
    if 2 * failures > reps {
        return Err(Error::TooManyFailures { failures, reps });
    }
    let with_ci = !matches!(opts.interval, McInterval::None);
    let cc: Vec<_> = records.iter().map(|r| (r.ybar_r, with_ci.then_some(r.ybar_r_covered), None)).collect();
    let full: Vec<_> = records.iter().map(|r| (r.ybar_full, with_ci.then_some(r.ybar_full_covered), None)).collect();
    let reports = vec![
        summarize("mu_hat", &fitted, reps, scenario.n, target, seed),
        summarize("ybar_r", &cc, reps, scenario.n, target, seed),
        summarize("ybar_full", &full, reps, scenario.n, target, seed),
    ];
    Ok(McOutcome {
        truth,
        reports,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma2_settings() {
        assert_eq!(parse_sigma2("4").unwrap(), 4.0);
        assert!((parse_sigma2("e0.7").unwrap() - 0.7f64.exp()).abs() < 1e-15);
        assert!((parse_sigma2("exp(0.7)").unwrap() - 0.7f64.exp()).abs() < 1e-15);
        assert!(parse_sigma2("-1").is_err());
        assert!(parse_sigma2("e").is_err());
    }

    #[test]
    fn generate_is_reproducible() {
        let s = example(2, 1.0, 300).unwrap();
        let a = generate(&s, 11).unwrap();
        let b = generate(&s, 11).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(a.y_full, b.y_full);
        let c = generate(&s, 12).unwrap();
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn baselines_examples() {
        let d = Dataset::from_rows(vec!["x".into()], &[vec![0.0], vec![1.0]], vec![Some(1.0), Some(3.0)]).unwrap();
        let b = baselines(&d, Some(&[1.0, 3.0])).unwrap();
        assert_eq!(b.ybar_r, 2.0);
        assert_eq!(b.ybar_full, Some(2.0));
        let empty = Dataset::from_rows(vec!["x".into()], &[vec![0.0]], vec![None]).unwrap();
        assert!(baselines(&empty, None).is_err());
    }

    #[test]
    fn constant_mean_truth_under_ignorability() {
        let mut s = example(2, 1.0, 10).unwrap();
        s.gamma = 0.0;
        s.xi = vec![3.0, 0.0, 0.0, 0.0];
        let t = true_mu_eta(&s, 200_000, 5, Execution::Parallel).unwrap();
        assert!((t.mu - 3.0).abs() < 4.0 * t.mu_se);
        assert!((t.mu_smoothed - 3.0).abs() < 1e-12);
    }
}
