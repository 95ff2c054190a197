mod common;

use common::catalogue;
use minkbvp::Nonlinearity;
use proptest::prelude::*;

fn grid() -> Vec<f64> {
    (0..200).map(|k| 0.01 * (20.0f64 / 0.01).powf(k as f64 / 199.0)).collect()
}

/// Richardson-extrapolated central difference.
fn derivative(f: impl Fn(f64) -> f64, u: f64, h: f64) -> f64 {
    let d = |h: f64| (f(u + h) - f(u - h)) / (2.0 * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

#[test]
fn primitive_derivative_is_g() {
    for n in catalogue() {
        for u in grid() {
            let h = 1e-3 * u.min(1.0 / n.log_derivative(u));
            if n.big_g(u + h).unwrap() < 1e300 {
                let fd = derivative(|x| n.big_g(x).unwrap(), u, h);
                let g = n.g(u);
                assert!((fd - g).abs() <= 1e-6 * g, "{n:?} at {u}: {fd} vs {g}");
            } else {
                let fd = derivative(|x| n.log_big_g(x), u, h);
                let r = n.g_over_big_g(u);
                assert!((fd - r).abs() <= 1e-6 * r, "{n:?} at {u}: {fd} vs {r}");
            }
        }
    }
}

#[test]
fn primitive_is_increasing() {
    for n in catalogue() {
        let vals: Vec<f64> = grid().iter().map(|&u| n.log_big_g(u)).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "{n:?}");
    }
}

#[test]
fn power_exp_ratio_tends_to_kappa() {
    for kappa in [1.0, 10.0, 45.0] {
        let n = Nonlinearity::power_exp(2.0, kappa).unwrap();
        let e100 = (n.growth_ratio_tail(100.0).unwrap().at_end.0 - kappa).abs();
        let e1000 = (n.growth_ratio_tail(1000.0).unwrap().at_end.0 - kappa).abs();
        assert!(e100 <= 0.05 * kappa && e1000 <= 0.05 * kappa, "kappa {kappa}: {e100} {e1000}");
        assert!(e1000 < e100);
    }
}

#[test]
fn log_primitive_agrees_with_quadrature() {
    for n in catalogue() {
        for u in [0.05, 0.3, 1.0, 2.5, 7.0, 15.0] {
            let (direct, quad) = (n.log_big_g(u), n.log_big_g_by_quadrature(u));
            assert!((direct - quad).abs() <= 1e-10 * direct.abs().max(1.0), "{n:?} at {u}: {direct} vs {quad}");
        }
    }
}

#[test]
fn zero_conditions_hold_for_catalogue() {
    for n in catalogue() {
        assert!(n.check_zero_conditions().pass, "{n:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g_positive_and_increasing(p in 1.1f64..4.0, kappa in 0.1f64..50.0, u in 1e-3f64..30.0) {
        for n in [Nonlinearity::power(p).unwrap(), Nonlinearity::exp_power(p).unwrap(), Nonlinearity::power_exp(p, kappa).unwrap()] {
            prop_assert!(n.log_g(u) < n.log_g(u * 1.01));
            prop_assert!(n.log_derivative(u) > 0.0);
            prop_assert_eq!(n.g(0.0), 0.0);
        }
    }

    #[test]
    fn scale_shifts_logs(s in 0.01f64..100.0, u in 0.1f64..10.0) {
        let n = Nonlinearity::power_exp(2.0, 3.0).unwrap();
        let m = n.with_scale(s).unwrap();
        prop_assert!((m.log_g(u) - n.log_g(u) - s.ln()).abs() <= 1e-12 * (1.0 + n.log_g(u).abs()));
        prop_assert!((m.log_big_g(u) - n.log_big_g(u) - s.ln()).abs() <= 1e-10 * (1.0 + n.log_big_g(u).abs()));
    }
}
