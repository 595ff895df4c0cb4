use mnar_drm::likelihood::{el_weights_from_t, fhat_cdf};
use mnar_drm::simulation::{example, generate};
use mnar_drm::{ell2, solve_lambda, ProfileLikelihood, Theta};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn lambda_equation(t: &[f64], lambda: f64) -> f64 {
    t.iter().map(|t| t.exp_m1() / (1.0 + lambda * t.exp_m1())).sum()
}

fn mixed_signs() -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-6.0..6.0f64, 3..200), 0.01..3.0f64, 0.01..3.0f64).prop_map(|(mut t, lo, hi)| {
        t.push(-lo);
        t.push(hi);
        t
    })
}

proptest! {
    #[test]
    fn lambda_is_the_decreasing_root(t in mixed_signs()) {
        let sol = solve_lambda(&t, None).unwrap();
        let g = lambda_equation(&t, sol.lambda);
        prop_assert!(g.abs() < 1e-10, "residual {g} at lambda {}", sol.lambda);
        let eps = 1e-6;
        let feasible = |l: f64| t.iter().all(|t| 1.0 + l * t.exp_m1() > 0.0);
        if feasible(sol.lambda - eps) && feasible(sol.lambda + eps) {
            prop_assert!(lambda_equation(&t, sol.lambda - eps) > g);
            prop_assert!(lambda_equation(&t, sol.lambda + eps) < g);
        }
        let w = el_weights_from_t(&t, sol.lambda).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(w.iter().zip(&t).map(|(p, t)| p * t.exp_m1()).sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn ell2_ignores_row_order(seed in 0u64..500, k in 1u8..=3, shuffle in any::<u64>()) {
        let s = example(k, 1.0, 150).unwrap();
        let data = generate(&s, seed).unwrap().data;
        let theta = s.true_theta(0.7);
        let mut idx: Vec<usize> = (0..data.n()).collect();
        idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(shuffle));
        let permuted = data.select(&idx);
        let a = ell2(&theta, &data, &s.model).unwrap();
        let b = ell2(&theta, &permuted, &s.model).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn ell2_gradient_matches_finite_differences(seed in 0u64..10_000, k in 1u8..=3, shift in prop::collection::vec(-0.3..0.3f64, 8)) {
        let s = example(k, 1.0, 200).unwrap();
        let data = generate(&s, seed).unwrap().data;
        let prof = ProfileLikelihood::new(&data, &s.model);
        let theta: Vec<f64> = s.true_theta(0.7).to_vec().iter().zip(&shift).map(|(v, d)| v + d).collect();
        let eval = prof.evaluate(&theta, None, true);
        prop_assume!(eval.is_ok());
        let analytic = eval.unwrap().gradient.unwrap();
        let mut w = theta.clone();
        let mut numeric = Vec::new();
        for j in 0..theta.len() {
            let h = 1e-6 * (1.0 + theta[j].abs());
            w[j] = theta[j] + h;
            let up = prof.evaluate(&w, None, false).unwrap().ell2;
            w[j] = theta[j] - h;
            let down = prof.evaluate(&w, None, false).unwrap().ell2;
            w[j] = theta[j];
            numeric.push((up - down) / (2.0 * h));
        }
        let scale = numeric.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, n) in analytic.iter().zip(&numeric) {
            prop_assert!((a - n).abs() < 1e-5 * scale, "{analytic:?} vs {numeric:?}");
        }
    }
}

#[test]
fn zero_multiplier_gives_the_empirical_cdf() {
    let s = example(2, 1.0, 300).unwrap();
    let data = generate(&s, 4).unwrap().data;
    let t: Vec<f64> = (0..data.n()).map(|i| (i as f64 * 0.37).sin()).collect();
    let w = el_weights_from_t(&t, 0.0).unwrap();
    for probe in [[0.5, 0.0], [1.5, -0.3], [-1.0, 2.0], [9.0, 9.0]] {
        let ecdf = data
            .rows()
            .filter(|r| r[0] <= probe[0] && r[1] <= probe[1])
            .count() as f64
            / data.n() as f64;
        assert!((fhat_cdf(&probe, &w, &data) - ecdf).abs() < 1e-12);
    }
}

#[test]
fn heavy_tilts_stay_finite() {
    let t: Vec<f64> = (0..400).map(|i| -40.0 + 0.2 * i as f64).collect();
    let sol = solve_lambda(&t, None).unwrap();
    assert!(lambda_equation(&t, sol.lambda).abs() < 1e-10);
    let theta = Theta::new(-30.0, vec![3.0], 2.0, vec![2.5, -1.0, 1.5, 1.0]);
    let s = example(2, 1.0, 300).unwrap();
    let data = generate(&s, 1).unwrap().data;
    // either a finite value or a clean infeasibility error
    match ell2(&theta, &data, &s.model) {
        Ok(v) => assert!(v.is_finite()),
        Err(e) => assert!(matches!(
            e,
            mnar_drm::Error::NoInteriorRoot { .. } | mnar_drm::Error::InfeasibleLambda { .. }
        )),
    }
}
