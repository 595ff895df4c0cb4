use mnar_drm::optimize::logistic_irls;
use mnar_drm::simulation::{example, generate, run_mc, McInterval, McOptions};
use mnar_drm::Execution;
use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

/// Logistic MLE with standard errors from the inverse observed information.
fn logistic_with_se(rows: &[Vec<f64>], response: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let beta = logistic_irls(rows, response, 100).expect("logistic fit");
    let p = beta.len();
    let mut info = DMatrix::<f64>::zeros(p, p);
    for r in rows {
        let eta: f64 = r.iter().zip(&beta).map(|(a, b)| a * b).sum();
        let pr = 1.0 / (1.0 + (-eta).exp());
        let w = pr * (1.0 - pr);
        for a in 0..p {
            for b in 0..p {
                info[(a, b)] += w * r[a] * r[b];
            }
        }
    }
    let cov = info.try_inverse().expect("invertible information");
    let se = (0..p).map(|j| cov[(j, j)].sqrt()).collect();
    (beta, se)
}

/// The generated joint law has logit pr(D = 0 | x, y) = α* + x_pᵀβ + γy.
#[test]
fn drm_propensity_is_recovered_by_logistic_regression() {
    for k in 1..=3u8 {
        let s = example(k, 1.0, 1_000_000).unwrap();
        let sim = generate(&s, 100 + k as u64).unwrap();
        let mut rows = Vec::with_capacity(s.n);
        let mut miss = Vec::with_capacity(s.n);
        for i in 0..s.n {
            let x = sim.data.row(i);
            let mut r = vec![1.0];
            r.extend(s.model.propensity.iter().map(|&j| x[j]));
            r.push(sim.y_full[i]);
            rows.push(r);
            miss.push(if sim.data.observed(i) { 0.0 } else { 1.0 });
        }
        let (est, se) = logistic_with_se(&rows, &miss);
        let mut truth = vec![s.alpha_star];
        truth.extend(&s.beta);
        truth.push(s.gamma);
        for j in 0..truth.len() {
            assert!(
                (est[j] - truth[j]).abs() < 3.0 * se[j],
                "example {k} coefficient {j}: {} vs {} (se {})",
                est[j],
                truth[j],
                se[j]
            );
        }
    }
}

fn ks_uniform(mut u: Vec<f64>) -> f64 {
    u.sort_by(f64::total_cmp);
    let m = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, v)| (v - i as f64 / m).abs().max(((i + 1) as f64 / m - v).abs()))
        .fold(0.0, f64::max)
}

/// Observed responses follow f(·|x): the probability-integral transform is
/// uniform within each u stratum of Example 1.
#[test]
fn observed_responses_follow_f_by_stratum() {
    let s = example(1, 1.0, 400_000).unwrap();
    let sim = generate(&s, 77).unwrap();
    let nb = s.model.outcome.as_normal().unwrap();
    let std = Normal::standard();
    for stratum in [0.0, 1.0] {
        let pit: Vec<f64> = (0..s.n)
            .filter(|&i| sim.data.row(i)[0] == stratum)
            .filter_map(|i| sim.data.y(i).map(|y| (i, y)))
            .map(|(i, y)| {
                let (mu, s2) = nb.mean_var(sim.data.row(i), &s.xi);
                std.cdf((y - mu) / s2.sqrt())
            })
            .collect();
        assert!(pit.len() >= 100_000, "stratum {stratum}: {} rows", pit.len());
        let d = ks_uniform(pit);
        assert!(d < 0.01, "stratum {stratum}: KS distance {d}");
    }
}

#[test]
fn run_mc_does_not_depend_on_scheduling() {
    let s = example(2, 1.0, 300).unwrap();
    let opts = |execution| McOptions {
        interval: McInterval::Plugin,
        truth_draws: 50_000,
        execution,
        ..McOptions::default()
    };
    let a = run_mc(&s, 8, 3, &opts(Execution::Parallel)).unwrap();
    let b = run_mc(&s, 8, 3, &opts(Execution::Sequential)).unwrap();
    assert_eq!(a.reports, b.reports);
    assert_eq!(a.records, b.records);
}
