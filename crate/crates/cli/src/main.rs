//! Batch front end: fit, bootstrap, simulate, generate, ident and compare.

mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mnar_drm::config::ModelConfig;
use mnar_drm::estimation::{bic, fit_mle, FitOptions, FitResult};
use mnar_drm::identifiability::check_model;
use mnar_drm::inference::{bootstrap, wald_ci_mu, wald_ci_theta, BootstrapOptions, IntervalEstimate, VarianceSource};
use mnar_drm::model::alpha_star;
use mnar_drm::simulation::{example, generate, parse_sigma2, run_mc, McInterval, McOptions, MCReport, ScenarioSpec, Truth};
use mnar_drm::{Dataset, Error, ModelSpec, Verdict};
use serde::Serialize;
use serde_json::{Map, Value};

use report::{emit, fmt_opt, long_csv, to_json, wide_csv, Format, FORMAT_VERSION};

/// Rows handed to the rank-based identifiability check.
const IDENT_POINTS: usize = 500;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("identifiability not established ({:?}, rule {:?}): {}; rerun with --force to fit anyway", .0.status, .0.rule, .0.explanation)]
    NotIdentified(Box<Verdict>),
    #[error("serializing report: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Parse { .. } | Error::Spec(_) | Error::InvalidArgument(_)) => 2,
            CliError::Usage(_) => 2,
            CliError::Core(
                Error::NonConvergence { .. } | Error::TooManyFailures { .. } | Error::BootstrapFailures { .. },
            ) => 3,
            CliError::NotIdentified(_) => 4,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "mnar-drm", version, about = "Semiparametric likelihood inference for non-ignorably missing responses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a CSV dataset.
    Fit(FitArgs),
    /// Fit, then bootstrap the standard errors.
    Bootstrap(BootstrapArgs),
    /// Monte Carlo study of a scenario.
    Simulate(SimulateArgs),
    /// Write one simulated dataset as CSV.
    Generate(GenerateArgs),
    /// Identifiability verdict for a model.
    Ident(IdentArgs),
    /// Rank candidate models on one dataset by BIC.
    Compare(CompareArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// TOML model specification.
    #[arg(long, conflicts_with = "example")]
    model_spec: Option<PathBuf>,
    /// Use the fitted model of a preset example.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    example: Option<u8>,
    /// Declare an instrument column (excluded from the propensity).
    #[arg(long, value_name = "COLUMN")]
    instrument: Option<String>,
}

#[derive(Args, Clone)]
struct OutputArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to json with --out and table otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl OutputArgs {
    fn format(&self) -> Format {
        self.format
            .unwrap_or(if self.out.is_some() { Format::Json } else { Format::Table })
    }
}

#[derive(Args, Clone)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Multistart seed; required with --boot.
    #[arg(long)]
    seed: Option<u64>,
    /// Bootstrap resamples for a bootstrap Wald interval.
    #[arg(long, value_name = "B")]
    boot: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Fit even when identifiability is not established.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BootstrapArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_name = "B", default_value_t = 200)]
    boot: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3), required_unless_present = "scenario")]
    example: Option<u8>,
    /// TOML model file with a [scenario] table.
    #[arg(long, conflicts_with = "example")]
    scenario: Option<PathBuf>,
    /// σ² setting: a number, `eA` or `exp(A)`.
    #[arg(long, default_value = "1")]
    sigma2: String,
    #[arg(long)]
    n: Option<usize>,
}

impl ScenarioArgs {
    fn resolve(&self) -> CliResult<(ScenarioSpec, String)> {
        let (mut s, response) = match (self.example, &self.scenario) {
            (Some(k), _) => (example(k, parse_sigma2(&self.sigma2)?, 2000)?, "y".to_string()),
            (None, Some(p)) => {
                let cfg = ModelConfig::from_path(p)?;
                (cfg.scenario()?, cfg.response.clone())
            }
            (None, None) => return Err(CliError::Usage("give --example or --scenario".into())),
        };
        if let Some(n) = self.n {
            s.n = n;
        }
        s.validate()?;
        Ok((s, response))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    /// Bootstrap intervals with B resamples instead of plug-in intervals.
    #[arg(long, value_name = "B")]
    boot: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Draws for the Monte Carlo ground truth.
    #[arg(long, default_value_t = 1_000_000)]
    truth_draws: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    seed: u64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IdentArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Sample points for the rank test, and the column list when the spec omits it.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Report what holds under the hypothesis γ = 0.
    #[arg(long)]
    gamma_zero: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    data: PathBuf,
    /// Candidate model files; repeat the flag for each.
    #[arg(long, required = true)]
    model_spec: Vec<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

fn with_instrument(spec: ModelSpec, instrument: Option<&str>) -> CliResult<ModelSpec> {
    match instrument {
        None => Ok(spec),
        Some(z) => {
            let j = spec
                .columns
                .iter()
                .position(|c| c == z)
                .ok_or_else(|| Error::Spec(format!("instrument '{z}' is not a declared covariate")))?;
            Ok(spec.with_instrument(j))
        }
    }
}

/// Read `data` under the model named by `model`.
fn load(data: &Path, model: &ModelArgs) -> CliResult<(Dataset, ModelSpec)> {
    let (data, spec) = match (&model.model_spec, model.example) {
        (Some(p), _) => {
            let cfg = ModelConfig::from_path(p)?;
            cfg.prepare(Dataset::read_csv_path(data, &cfg.response)?)?
        }
        (None, Some(k)) => {
            let spec = example(k, 1.0, 1)?.model;
            let d = Dataset::read_csv_path(data, "y")?.project(&spec.columns)?;
            (d, spec)
        }
        (None, None) => return Err(CliError::Usage("give --model-spec or --example".into())),
    };
    Ok((data, with_instrument(spec, model.instrument.as_deref())?))
}

fn sample_points(data: &Dataset) -> Vec<Vec<f64>> {
    data.rows().take(IDENT_POINTS).map(|r| r.to_vec()).collect()
}

#[derive(Serialize)]
struct ParameterRow {
    name: String,
    estimate: f64,
    se: Option<f64>,
    lower: Option<f64>,
    upper: Option<f64>,
    bootstrap_se: Option<f64>,
}

#[derive(Serialize)]
struct BootstrapSummary {
    requested: usize,
    failures: usize,
    seed: u64,
    se_mu: f64,
}

#[derive(Serialize)]
struct Diagnostics {
    converged: bool,
    iterations: usize,
    grad_norm: f64,
    multistart_index: usize,
    lambda_degenerate: bool,
    singular_vhat: bool,
    vhat_condition: Option<f64>,
}

#[derive(Serialize)]
struct FitReport {
    format_version: u32,
    n: usize,
    n1: usize,
    level: f64,
    parameters: Vec<ParameterRow>,
    alpha_star: f64,
    eta_hat: f64,
    lambda_hat: f64,
    mu_hat: Option<f64>,
    sigma2_hat: Option<f64>,
    mu_se: Option<f64>,
    mu_ci_plugin: Option<IntervalEstimate>,
    mu_ci_bootstrap: Option<IntervalEstimate>,
    bootstrap: Option<BootstrapSummary>,
    ell1: f64,
    ell2: f64,
    loglik: f64,
    bic: f64,
    diagnostics: Diagnostics,
    identifiability: Verdict,
    forced: bool,
}

struct FitRequest<'a> {
    seed: u64,
    boot: Option<(usize, u64)>,
    level: f64,
    force: bool,
    data: &'a Dataset,
    spec: &'a ModelSpec,
}

fn run_fit(req: &FitRequest<'_>) -> CliResult<(FitReport, FitResult)> {
    let verdict = check_model(req.spec, Some(&sample_points(req.data)), None, false)?;
    if !verdict.is_identifiable() && !req.force {
        return Err(CliError::NotIdentified(Box::new(verdict)));
    }
    let opts = FitOptions {
        seed: req.seed,
        ..FitOptions::default()
    };
    let fit = fit_mle(req.data, req.spec, &opts)?;
    let boot = match req.boot {
        Some((b, seed)) => Some(bootstrap(req.data, req.spec, &fit, b, seed, &BootstrapOptions::default())?),
        None => None,
    };
    let parameters = req
        .spec
        .parameter_names()
        .into_iter()
        .zip(fit.theta_hat.to_vec())
        .enumerate()
        .map(|(j, (name, estimate))| {
            let ci = wald_ci_theta(&fit, j, req.level).ok();
            ParameterRow {
                name,
                estimate,
                se: ci.map(|c| c.se),
                lower: ci.map(|c| c.lower),
                upper: ci.map(|c| c.upper),
                bootstrap_se: boot.as_ref().map(|b| b.se_theta[j]),
            }
        })
        .collect();
    let mu_ci_plugin = fit
        .mu_se
        .map(|_| wald_ci_mu(&fit, req.level, VarianceSource::Plugin))
        .transpose()?;
    let mu_ci_bootstrap = match (&boot, fit.mu_hat) {
        (Some(b), Some(_)) => Some(wald_ci_mu(
            &fit,
            req.level,
            VarianceSource::Bootstrap {
                se: b.se_mu,
                failures: b.failures,
            },
        )?),
        _ => None,
    };
    let report = FitReport {
        format_version: FORMAT_VERSION,
        n: fit.n,
        n1: fit.n1,
        level: req.level,
        parameters,
        alpha_star: alpha_star(&fit.theta_hat, fit.eta_hat)?,
        eta_hat: fit.eta_hat,
        lambda_hat: fit.lambda_hat,
        mu_hat: fit.mu_hat,
        sigma2_hat: fit.sigma2_hat,
        mu_se: fit.mu_se,
        mu_ci_plugin,
        mu_ci_bootstrap,
        bootstrap: boot.as_ref().map(|b| BootstrapSummary {
            requested: b.requested,
            failures: b.failures,
            seed: req.boot.map(|(_, s)| s).unwrap_or_default(),
            se_mu: b.se_mu,
        }),
        ell1: fit.ell1,
        ell2: fit.ell2,
        loglik: fit.loglik(),
        bic: bic(&fit),
        diagnostics: Diagnostics {
            converged: fit.converged,
            iterations: fit.iterations,
            grad_norm: fit.grad_norm,
            multistart_index: fit.multistart_index,
            lambda_degenerate: fit.lambda_degenerate,
            singular_vhat: fit.singular_vhat,
            vhat_condition: fit.vhat_condition,
        },
        identifiability: verdict,
        forced: req.force,
    };
    Ok((report, fit))
}

fn fit_table(r: &FitReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "n = {}, observed = {}, eta_hat = {:.6}", r.n, r.n1, r.eta_hat);
    let _ = writeln!(
        s,
        "identifiability: {:?} ({:?}){}",
        r.identifiability.status,
        r.identifiability.rule,
        if r.forced && !r.identifiability.is_identifiable() { ", fitted with --force" } else { "" }
    );
    let pct = 100.0 * r.level;
    let _ = writeln!(s, "\n{:<28}{:>14}{:>14}{:>14}{:>14}", "parameter", "estimate", "se", "lower", "upper");
    for p in &r.parameters {
        let _ = writeln!(
            s,
            "{:<28}{:>14.6}{}{}{}",
            p.name,
            p.estimate,
            fmt_opt(p.se, 14),
            fmt_opt(p.lower, 14),
            fmt_opt(p.upper, 14)
        );
    }
    let _ = writeln!(s, "{:<28}{:>14.6}", "alpha_star", r.alpha_star);
    let _ = writeln!(s, "\nmu_hat      {}   se {}", fmt_opt(r.mu_hat, 12), fmt_opt(r.mu_se, 10));
    if let Some(ci) = &r.mu_ci_plugin {
        let _ = writeln!(s, "  {pct:.0}% plug-in Wald   [{:.6}, {:.6}]", ci.lower, ci.upper);
    }
    if let Some(ci) = &r.mu_ci_bootstrap {
        let _ = writeln!(
            s,
            "  {pct:.0}% bootstrap Wald [{:.6}, {:.6}]  ({} failed refits)",
            ci.lower, ci.upper, ci.bootstrap_failures
        );
    }
    let _ = writeln!(s, "sigma2_hat  {}", fmt_opt(r.sigma2_hat, 12));
    let _ = writeln!(s, "\nl1 = {:.6}  l2 = {:.6}  loglik = {:.6}  BIC = {:.6}", r.ell1, r.ell2, r.loglik, r.bic);
    let d = &r.diagnostics;
    let _ = writeln!(
        s,
        "converged = {}  iterations = {}  |grad| = {:.3e}  start = {}  cond(V) = {}",
        d.converged,
        d.iterations,
        d.grad_norm,
        d.multistart_index,
        d.vhat_condition.map_or("-".into(), |c| format!("{c:.3e}"))
    );
    s
}

fn write_report<T: Serialize>(report: &T, output: &OutputArgs, table: impl FnOnce() -> String) -> CliResult<()> {
    let text = match output.format() {
        Format::Json => {
            let mut t = serde_json::to_string_pretty(&to_json(report)?)?;
            t.push('\n');
            t
        }
        Format::Csv => long_csv(&to_json(report)?),
        Format::Table => table(),
    };
    emit(&text, output.out.as_deref())?;
    Ok(())
}

fn check_boot_seed(boot: Option<usize>, seed: Option<u64>) -> CliResult<Option<(usize, u64)>> {
    match (boot, seed) {
        (None, _) => Ok(None),
        (Some(b), Some(s)) => Ok(Some((b, s))),
        (Some(_), None) => Err(CliError::Usage("--boot needs --seed for a reproducible resample".into())),
    }
}

fn cmd_fit(a: FitArgs) -> CliResult<()> {
    let boot = check_boot_seed(a.boot, a.seed)?;
    let (data, spec) = load(&a.data, &a.model)?;
    let (report, _) = run_fit(&FitRequest {
        seed: a.seed.unwrap_or(0),
        boot,
        level: a.level,
        force: a.force,
        data: &data,
        spec: &spec,
    })?;
    write_report(&report, &a.output, || fit_table(&report))
}

fn cmd_bootstrap(a: BootstrapArgs) -> CliResult<()> {
    cmd_fit(FitArgs {
        data: a.data,
        model: a.model,
        seed: Some(a.seed),
        boot: Some(a.boot),
        level: a.level,
        force: a.force,
        output: a.output,
    })
}

#[derive(Serialize)]
struct SimulateReport {
    format_version: u32,
    scenario: String,
    sigma2: f64,
    n: usize,
    reps: usize,
    seed: u64,
    level: f64,
    interval: McInterval,
    truth: Truth,
    reports: Vec<MCReport>,
}

fn simulate_table(r: &SimulateReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} sigma2 = {:.6} n = {} reps = {} seed = {}",
        r.scenario, r.sigma2, r.n, r.reps, r.seed
    );
    let _ = writeln!(
        s,
        "truth: mu = {:.6} (raw {:.6} ± {:.6}), 1 - eta = {:.6}",
        r.truth.mu_smoothed, r.truth.mu, r.truth.mu_se, r.truth.miss_smoothed
    );
    let _ = writeln!(
        s,
        "\n{:<11}{:>12}{:>10}{:>11}{:>10}{:>11}{:>11}{:>10}",
        "estimator", "mean", "RB%", "MSEx100", "cover%", "mean se", "emp sd", "failed"
    );
    for m in &r.reports {
        let _ = writeln!(
            s,
            "{:<11}{:>12.6}{:>10.3}{:>11.4}{}{}{:>11.6}{:>10}",
            m.estimator,
            m.mean_estimate,
            m.rb_pct,
            m.mse_x100,
            m.coverage_pct.map_or(format!("{:>10}", "-"), |c| format!("{c:>10.1}")),
            fmt_opt(m.mean_se, 11),
            m.empirical_sd,
            m.failures
        );
    }
    s
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<()> {
    let (scenario, _) = a.scenario.resolve()?;
    let interval = match a.boot {
        Some(b) => McInterval::Bootstrap { b },
        None => McInterval::Plugin,
    };
    let opts = McOptions {
        interval,
        level: a.level,
        truth_draws: a.truth_draws,
        ..McOptions::default()
    };
    let outcome = run_mc(&scenario, a.reps, a.seed, &opts)?;
    let report = SimulateReport {
        format_version: FORMAT_VERSION,
        scenario: format!("{:?}", scenario.name),
        sigma2: scenario.sigma2,
        n: scenario.n,
        reps: a.reps,
        seed: a.seed,
        level: a.level,
        interval,
        truth: outcome.truth,
        reports: outcome.reports,
    };
    match a.output.format() {
        Format::Csv => {
            let rows = report.reports.iter().map(to_json).collect::<serde_json::Result<Vec<_>>>()?;
            let mut extra = Map::new();
            extra.insert("scenario".into(), Value::String(report.scenario.clone()));
            extra.insert("sigma2".into(), to_json(&report.sigma2)?);
            extra.insert("truth".into(), to_json(&report.truth)?);
            emit(&wide_csv(&rows, &extra), a.output.out.as_deref())?;
            Ok(())
        }
        _ => write_report(&report, &a.output, || simulate_table(&report)),
    }
}

fn cmd_generate(a: GenerateArgs) -> CliResult<()> {
    let (scenario, response) = a.scenario.resolve()?;
    let sim = generate(&scenario, a.seed)?;
    let mut buf = Vec::new();
    sim.data.write_csv(&mut buf, &response)?;
    emit(&String::from_utf8_lossy(&buf), a.out.as_deref())?;
    Ok(())
}

fn cmd_ident(a: IdentArgs) -> CliResult<()> {
    let (spec, points) = match (&a.model.model_spec, a.model.example, &a.data) {
        (Some(p), _, Some(d)) => {
            let cfg = ModelConfig::from_path(p)?;
            let (data, spec) = cfg.prepare(Dataset::read_csv_path(d, &cfg.response)?)?;
            (spec, Some(sample_points(&data)))
        }
        (Some(p), _, None) => {
            let cfg = ModelConfig::from_path(p)?;
            (cfg.build(&cfg.columns(None)?)?, None)
        }
        (None, Some(k), _) => {
            let spec = example(k, 1.0, 1)?.model;
            let points = match &a.data {
                Some(d) => Some(sample_points(&Dataset::read_csv_path(d, "y")?.project(&spec.columns)?)),
                None => None,
            };
            (spec, points)
        }
        (None, None, _) => return Err(CliError::Usage("give --model-spec or --example".into())),
    };
    let spec = with_instrument(spec, a.model.instrument.as_deref())?;
    let verdict = check_model(&spec, points.as_deref(), None, a.gamma_zero)?;
    write_report(&verdict, &a.output, || {
        let mut s = format!("{:?} ({:?})\n{}\n", verdict.status, verdict.rule, verdict.explanation);
        for c in &verdict.caveats {
            let _ = writeln!(s, "caveat: {c}");
        }
        s
    })
}

#[derive(Serialize)]
struct CompareRow {
    model: String,
    d_theta: Option<usize>,
    loglik: Option<f64>,
    bic: Option<f64>,
    selected: bool,
    error: Option<String>,
}

#[derive(Serialize)]
struct CompareReport {
    format_version: u32,
    models: Vec<CompareRow>,
}

fn cmd_compare(a: CompareArgs) -> CliResult<()> {
    let mut rows = Vec::new();
    for path in &a.model_spec {
        let cfg = ModelConfig::from_path(path)?;
        let (data, spec) = cfg.prepare(Dataset::read_csv_path(&a.data, &cfg.response)?)?;
        let opts = FitOptions {
            seed: a.seed.unwrap_or(0),
            inference: false,
            ..FitOptions::default()
        };
        let row = match fit_mle(&data, &spec, &opts) {
            Ok(fit) => CompareRow {
                model: path.display().to_string(),
                d_theta: Some(fit.d_theta()),
                loglik: Some(fit.loglik()),
                bic: Some(bic(&fit)),
                selected: false,
                error: None,
            },
            Err(e) => CompareRow {
                model: path.display().to_string(),
                d_theta: Some(spec.d_theta()),
                loglik: None,
                bic: None,
                selected: false,
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    let best = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.bic.map(|b| (i, b)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::NonConvergence {
            starts: 0,
            grad_norm: f64::NAN,
            best: vec![],
        })?;
    rows[best].selected = true;
    let report = CompareReport {
        format_version: FORMAT_VERSION,
        models: rows,
    };
    write_report(&report, &a.output, || {
        let mut s = format!("{:<40}{:>8}{:>16}{:>16}\n", "model", "d_theta", "loglik", "BIC");
        for r in &report.models {
            let _ = writeln!(
                s,
                "{:<40}{:>8}{}{}{}",
                r.model,
                r.d_theta.map_or("-".into(), |d| d.to_string()),
                fmt_opt(r.loglik, 16),
                fmt_opt(r.bic, 16),
                if r.selected {
                    "  <- selected".to_string()
                } else {
                    r.error.as_ref().map(|e| format!("  ({e})")).unwrap_or_default()
                }
            );
        }
        s
    })
}

fn main() -> ExitCode {
    mnar_drm::par::configure_threads_from_env();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Bootstrap(a) => cmd_bootstrap(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Ident(a) => cmd_ident(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
