//! Parallel versus sequential execution of the embarrassingly parallel layers:
//! bootstrap refits, Monte Carlo replications and ground-truth draws.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mnar_drm::inference::{bootstrap, BootstrapOptions};
use mnar_drm::simulation::{example, generate, run_mc, true_mu_eta, McInterval, McOptions};
use mnar_drm::{fit_mle, Execution, FitOptions};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn bench_bootstrap(c: &mut Criterion) {
    let s = example(2, 1.0, 1000).unwrap();
    let data = generate(&s, 1).unwrap().data;
    let fit = fit_mle(&data, &s.model, &FitOptions::default()).unwrap();
    let mut group = c.benchmark_group("bootstrap_b64_n1000");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    for (name, execution) in MODES {
        let opts = BootstrapOptions {
            execution,
            ..BootstrapOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| black_box(bootstrap(&data, &s.model, &fit, 64, 7, opts).unwrap().se_mu))
        });
    }
    group.finish();
}

fn bench_run_mc(c: &mut Criterion) {
    let s = example(3, 1.0, 500).unwrap();
    let mut group = c.benchmark_group("run_mc_16reps_n500");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    for (name, execution) in MODES {
        let opts = McOptions {
            interval: McInterval::Plugin,
            truth_draws: 1 << 16,
            execution,
            ..McOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| black_box(run_mc(&s, 16, 3, opts).unwrap().reports[0].mse_x100))
        });
    }
    group.finish();
}

fn bench_truth(c: &mut Criterion) {
    let s = example(1, 1.0, 1).unwrap();
    let mut group = c.benchmark_group("true_mu_eta_2e18_draws");
    group.sample_size(10);
    for (name, execution) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| black_box(true_mu_eta(&s, 1 << 18, 5, execution).unwrap().mu_smoothed))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_bootstrap, bench_run_mc, bench_truth);
criterion_main!(benches);
