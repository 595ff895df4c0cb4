use mnar_drm::basis::{Basis, Term};
use mnar_drm::estimation::{grad_k, grad_k_fd, k_fun, lr_stat, mu_hat, mu_hat_quadrature};
use mnar_drm::inference::{bootstrap, wald_ci_mu, BootstrapOptions, VarianceSource};
use mnar_drm::model::{logit, sigmoid};
use mnar_drm::simulation::{example, generate, CovariateSampler, ScenarioName, ScenarioSpec};
use mnar_drm::{ell2, fit_mle, Dataset, Execution, FitOptions, FitResult, MeanLink, ModelSpec, NormalBasis, OutcomeModel};
use proptest::prelude::*;

fn fitted(k: u8, n: usize, seed: u64) -> (Dataset, ModelSpec, FitResult) {
    let s = example(k, 1.0, n).unwrap();
    let data = generate(&s, seed).unwrap().data;
    let fit = fit_mle(&data, &s.model, &FitOptions::default()).unwrap();
    (data, s.model, fit)
}

fn check_identities(data: &Dataset, spec: &ModelSpec, fit: &FitResult) -> Result<(), TestCaseError> {
    let n = data.n() as f64;
    prop_assert!(fit.converged);
    prop_assert_eq!(fit.eta_hat, data.n1() as f64 / n);
    prop_assert!((fit.lambda_hat - data.n2() as f64 / n).abs() < 1e-8);
    let prof = mnar_drm::ProfileLikelihood::new(data, spec);
    let t = prof.t_values(&fit.theta_hat.to_vec()).unwrap();
    prop_assert!((fit.weights.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    let constraint: f64 = fit.weights.iter().zip(&t).map(|(p, t)| p * t.exp_m1()).sum();
    prop_assert!(constraint.abs() < 1e-8);
    let mu = fit.mu_hat.unwrap();
    prop_assert!((mu - mu_hat_quadrature(fit, data, spec).unwrap()).abs() < 1e-8);
    // μ̂ as an integral against the fitted observed-covariate distribution
    let eta = fit.eta_hat;
    let mut via_weights = 0.0;
    for (i, x) in data.rows().enumerate() {
        let m = spec.outcome.moments(x, fit.theta_hat.gamma, &fit.theta_hat.xi).unwrap();
        via_weights += fit.weights[i] * (eta * m.mean + (1.0 - eta) * t[i].exp() * m.tilted_mean);
    }
    prop_assert!((via_weights - mu).abs() < 1e-8, "{via_weights} vs {mu}");
    let cov = fit.theta_cov.as_ref().unwrap();
    for (a, row) in cov.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            prop_assert!((v - cov[b][a]).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn converged_fits_satisfy_exact_identities(k in 1u8..=3, seed in 0u64..100_000, n in 300usize..1500) {
        let (data, spec, fit) = fitted(k, n, seed);
        check_identities(&data, &spec, &fit)?;
        let r = lr_stat(&fit.theta_hat, &data, &spec, &fit).unwrap();
        prop_assert!(r.stat.abs() < 1e-9);
        let mut other = fit.theta_hat.clone();
        other.gamma += 0.2;
        prop_assert!(lr_stat(&other, &data, &spec, &fit).unwrap().stat >= 0.0);
    }

    #[test]
    fn grad_k_matches_finite_differences(k in 1u8..=3, x0 in -2.0..2.0f64, x1 in -1.0..1.0f64, eta in 0.3..0.9f64) {
        let s = example(k, 1.0, 10).unwrap();
        let x: Vec<f64> = if k == 3 { vec![x0] } else { vec![x0.abs().min(1.0).round(), x1] };
        let theta = s.true_theta(eta);
        let a = grad_k(&x, &theta, eta, &s.model).unwrap();
        let f = grad_k_fd(&x, &theta, eta, &s.model).unwrap();
        let scale = f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (p, q) in a.iter().zip(&f) {
            prop_assert!((p - q).abs() < 1e-6 * scale, "{a:?} vs {f:?}");
        }
    }
}

#[test]
fn k_limits() {
    let s = example(2, 1.0, 10).unwrap();
    let mut theta = s.true_theta(0.7);
    let x = [1.0, 0.5];
    let m = s.model.outcome.moments(&x, theta.gamma, &theta.xi).unwrap();
    theta.alpha = -60.0;
    assert!((k_fun(&x, &theta, 0.7, &s.model).unwrap() - m.mean).abs() < 1e-12);
    theta.alpha = 60.0;
    assert!((k_fun(&x, &theta, 0.7, &s.model).unwrap() - m.tilted_mean).abs() < 1e-12);
    assert!(sigmoid(logit(0.3)) - 0.3 < 1e-15);
}

/// Linear mean, constant variance and the covariate in the propensity: shifting
/// γ by δ and absorbing δ into α and β leaves every tᵢ unchanged.
#[test]
fn unidentified_model_has_flat_ell2() {
    let outcome = OutcomeModel::Normal(NormalBasis::new(
        Basis::new(vec![Term::intercept(), Term::linear(0)]),
        MeanLink::Identity,
        Basis::new(vec![Term::intercept()]),
    ));
    let spec = ModelSpec::new(vec!["x".into()], vec![0], outcome);
    let (xi0, xi1, s2) = (1.0, 0.8, 1.5f64);
    let scenario = |alpha: f64, beta: f64, gamma: f64| ScenarioSpec {
        name: ScenarioName::Custom,
        covariates: vec![CovariateSampler::Normal { mean: 0.0, sd: 1.0 }],
        model: spec.clone(),
        alpha_star: alpha,
        beta: vec![beta],
        gamma,
        xi: vec![xi0, xi1, s2.ln()],
        sigma2: s2,
        n: 1500,
    };
    let (a1, b1, g1) = (-1.2, 0.3, 0.5);
    let delta = 0.7;
    let g2 = g1 + delta;
    let b2 = b1 - delta * xi1;
    let a2 = a1 - delta * xi0 - 0.5 * (g2 * g2 - g1 * g1) * s2;
    let (s1, s2_) = (scenario(a1, b1, g1), scenario(a2, b2, g2));
    let d1 = generate(&s1, 17).unwrap().data;
    let d2 = generate(&s2_, 17).unwrap().data;
    assert_eq!(d1, d2, "both truths induce the same observed data");
    let eta = d1.n1() as f64 / d1.n() as f64;
    let l1 = ell2(&s1.true_theta(eta), &d1, &spec).unwrap();
    let l2 = ell2(&s2_.true_theta(eta), &d2, &spec).unwrap();
    assert!((l1 - l2).abs() < 1e-6, "{l1} vs {l2}");
}

#[test]
fn warm_refit_returns_the_same_optimum() {
    let (data, spec, fit) = fitted(3, 800, 5);
    let again = fit_mle(&data, &spec, &FitOptions::warm(&fit)).unwrap();
    let a = fit.theta_hat.to_vec();
    let b = again.theta_hat.to_vec();
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-6), "{a:?} vs {b:?}");
}

#[test]
fn mu_hat_matches_fit_report() {
    let (data, spec, fit) = fitted(1, 600, 8);
    assert_eq!(mu_hat(&fit, &data, &spec).unwrap(), fit.mu_hat.unwrap());
    assert!(fit.sigma2_hat.unwrap() > 0.0);
}

#[test]
fn intervals_nest_by_level() {
    let (_, _, fit) = fitted(2, 800, 2);
    let narrow = wald_ci_mu(&fit, 0.95, VarianceSource::Plugin).unwrap();
    let wide = wald_ci_mu(&fit, 0.99, VarianceSource::Plugin).unwrap();
    assert!(wide.lower <= narrow.lower && narrow.upper <= wide.upper);
}

#[test]
fn bootstrap_is_deterministic_and_order_free() {
    let (data, spec, fit) = fitted(2, 400, 3);
    let par = BootstrapOptions::default();
    let seq = BootstrapOptions {
        execution: Execution::Sequential,
        ..BootstrapOptions::default()
    };
    let a = bootstrap(&data, &spec, &fit, 60, 11, &par).unwrap();
    let b = bootstrap(&data, &spec, &fit, 60, 11, &seq).unwrap();
    assert_eq!(a.estimates, b.estimates);
    assert_eq!(a.se_mu, b.se_mu);
    let c = bootstrap(&data, &spec, &fit, 60, 12, &par).unwrap();
    assert_ne!(a.se_mu, c.se_mu);
}
