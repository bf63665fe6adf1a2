//! Structural properties of the overlap constant and the update map.

use proptest::prelude::*;
use swlab_core::scalar::{
    at_condition, f_update, find_opt, gauss_expect, q_derivative, se_bayes, solve_q, Regime,
};
use swlab_core::ModelParams;

fn p() -> ModelParams {
    ModelParams::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jensen_q1_squared_below_q(beta in 0.0f64..3.0, h in 0.0f64..3.0) {
        let s = solve_q(beta, h, &p()).unwrap();
        prop_assert!(s.converged);
        prop_assert!((0.0..=1.0).contains(&s.q));
        prop_assert!(s.q1.abs() <= 1.0);
        prop_assert!(s.q1 * s.q1 <= s.q + 1e-14);
    }

    #[test]
    fn small_field_bounds(beta in 0.0f64..0.95, h in 0.001f64..=0.3) {
        let s = solve_q(beta, h, &p()).unwrap();
        let c = 1.0 - beta * beta;
        let slack = 1e-9;
        prop_assert!(h * h / c - 2.0 * h.powi(4) / c.powi(3) <= s.q + slack);
        prop_assert!(s.q <= h * h / c + slack);
        prop_assert!(h - h * h / (3.0 * c) <= s.q1 + slack);
        prop_assert!(s.q1 <= h + slack);
    }

    #[test]
    fn odd_integrands_vanish(a in -4.0f64..4.0, k in 0u32..4) {
        let v = gauss_expect(|g| (a * g).tanh().powi(2 * k as i32 + 1), &p()).unwrap();
        prop_assert!(v.abs() <= 1e-15);
    }

    #[test]
    fn q_increases_with_field_above_at_line(beta in 0.0f64..0.99, h in 0.01f64..2.0) {
        let d = q_derivative(beta, h, &p()).unwrap();
        prop_assert!(d > 0.0);
        let lo = solve_q(beta, h, &p()).unwrap().q;
        let hi = solve_q(beta, h + 0.01, &p()).unwrap().q;
        prop_assert!(hi > lo);
    }

    #[test]
    fn update_map_shape_high_temperature(beta in 0.05f64..0.99, lambda in 0.5f64..5.0) {
        // f(z)/z strictly decreasing and f non-decreasing on a z-grid
        let zs: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
        let fs: Vec<f64> = zs.iter().map(|&z| f_update(z, beta, lambda, &p()).unwrap()).collect();
        for i in 1..zs.len() {
            prop_assert!(fs[i] / zs[i] < fs[i - 1] / zs[i - 1]);
            prop_assert!(fs[i] - fs[i - 1] >= -1e-6);
        }
        let eps = 1e-4;
        let slope = (f_update(eps, beta, lambda, &p()).unwrap()
            - f_update(-eps, beta, lambda, &p()).unwrap()) / (2.0 * eps);
        prop_assert!((slope - beta * lambda).abs() <= 1e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn at_most_one_positive_fixed_point_high_temperature(
        beta in 0.05f64..0.99,
        lambda in 0.5f64..5.0,
    ) {
        prop_assume!((beta * lambda - 1.0).abs() > 0.05);
        let r = find_opt(beta, lambda, &p()).unwrap();
        let positive: Vec<_> = r.positive().collect();
        if beta * lambda > 1.0 {
            prop_assert_eq!(positive.len(), 1);
            prop_assert!(positive[0].stable && positive[0].at_satisfied);
            prop_assert!(!r.fixed_points[0].stable);
            prop_assert_eq!(r.regime, Regime::SuperCriticalHighTemp);
            prop_assert!(r.opt > 0.0);
        } else {
            prop_assert!(positive.is_empty());
            prop_assert!(r.fixed_points[0].stable);
            prop_assert_eq!(r.regime, Regime::SubCritical);
        }
        for fp in &r.fixed_points {
            prop_assert!(fp.residual.abs() <= 1e-10);
        }
    }

    #[test]
    fn at_most_one_at_fixed_point_low_temperature(beta in 1.05f64..3.0, lambda in 1.2f64..4.0) {
        let r = find_opt(beta, lambda, &p()).unwrap();
        prop_assert!(r.positive().filter(|fp| fp.at_satisfied).count() <= 1);
        if let Some(fp) = r.opt_point() {
            prop_assert!(fp.stable);
            prop_assert!(fp.derivative > 0.0);
        }
    }

    #[test]
    fn bayes_se_limit_solves_rgd_fixed_point(lambda in 1.2f64..4.0) {
        // at β = λ the SE limit (μ/λ, σ²) solves z = f(z), q = q_{β, βλz} with z = q
        let last = se_bayes(lambda, 0.01, 2000, &p()).unwrap().last();
        prop_assert!((last.m - last.q).abs() <= 1e-8);
        let z = last.m;
        let fz = f_update(z, lambda, lambda, &p()).unwrap();
        prop_assert!((fz - z).abs() <= 1e-8);
        let q = solve_q(lambda, lambda * lambda * z, &p()).unwrap().q;
        prop_assert!((q - last.q).abs() <= 1e-8);
        prop_assert!(at_condition(lambda, lambda * lambda * z, &p()).unwrap().satisfied);
    }
}
