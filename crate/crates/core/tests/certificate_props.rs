mod common;

use common::*;
use minkbvp::bvp::{BoundaryCondition, Problem};
use minkbvp::certificates::{self, compute_constants, wedge_certificate, TheoremConstants};
use minkbvp::error::Error;
use minkbvp::figures;
use minkbvp::{Nonlinearity, WeightFunction};
use proptest::prelude::*;

fn fig2_weight() -> WeightFunction {
    fig_weight(-10.0)
}

fn admissible() -> Vec<(WeightFunction, Nonlinearity)> {
    vec![
        (fig2_weight(), Nonlinearity::power_exp(2.0, 45.0).unwrap()),
        (fig_weight(-10.0), Nonlinearity::exp_power(2.0).unwrap()),
        (fig_weight(-4.0), Nonlinearity::exp_power(2.0).unwrap()),
        (figures::fig3_problem(-10.0).unwrap().weight, Nonlinearity::exp_power(3.0).unwrap()),
        (WeightFunction::step(&[0.5, 1.0, 2.0], &[2.0, -1.0, 1.0, -3.0], 3.0).unwrap(), Nonlinearity::exp_power(2.0).unwrap()),
    ]
}

fn check_estimates_above(c: &TheoremConstants, n: &Nonlinearity) {
    for k in 0..100 {
        let rho = c.r_star * 100f64.powf(k as f64 / 99.0);
        assert!(c.estimates_hold(n, rho), "estimates fail at rho = {rho} (R* = {})", c.r_star);
    }
}

#[test]
fn constants_satisfy_invariants() {
    for (w, n) in admissible() {
        let c = compute_constants(&w, &n).unwrap();
        assert!(c.invariants_hold(), "{c:?}");
        assert!(c.r_star >= c.r_hat);
        assert!(c.log_alpha0.is_finite() && c.log_alpha0 > 0.0);
        check_estimates_above(&c, &n);
    }
}

#[test]
fn r_star_grows_with_negative_part() {
    for (w, n) in admissible() {
        let c1 = compute_constants(&w, &n).unwrap();
        let heavier = w.scaled_negative_part(2.0).unwrap();
        match compute_constants(&heavier, &n) {
            Ok(c2) => assert!(c2.r_star >= c1.r_star - 1e-6, "{} -> {}", c1.r_star, c2.r_star),
            Err(Error::GrowthConditionUnmet { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn growth_condition_threshold() {
    let w = fig2_weight();
    assert!(compute_constants(&w, &Nonlinearity::power_exp(2.0, 45.0).unwrap()).is_ok());
    assert!(matches!(
        compute_constants(&w, &Nonlinearity::power_exp(2.0, 30.0).unwrap()),
        Err(Error::GrowthConditionUnmet { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degree_depends_only_on_mean_sign(
        pos in 0.1f64..5.0,
        neg in -10.0f64..-0.1,
        split in 0.1f64..0.9,
        r in 1e-4f64..3.0,
        which in 0usize..5,
    ) {
        let w = WeightFunction::step(&[split], &[pos, neg], 1.0).unwrap();
        let n = catalogue().swap_remove(which);
        let mean = w.mean_value();
        match certificates::brouwer_degree_f_sharp(&w, &n, r) {
            Ok(d) => {
                prop_assert_eq!(d, if mean < 0.0 { 1 } else { 0 });
                prop_assert_eq!(d, sign_table_degree(&w, &n, r));
            }
            Err(Error::DegenerateBoundary { .. }) => prop_assert!(mean == 0.0),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}

#[test]
fn zero_mean_degree_is_degenerate() {
    let w = WeightFunction::step(&[0.5], &[1.0, -1.0], 1.0).unwrap();
    let r = certificates::brouwer_degree_f_sharp(&w, &Nonlinearity::power(2.0).unwrap(), 0.5);
    assert!(matches!(r, Err(Error::DegenerateBoundary { .. })));
}

#[test]
fn wedge_tightens_with_amplitude() {
    let p = figures::fig3_problem(-10.0).unwrap();
    let c = compute_constants(&p.weight, &p.nonlinearity).unwrap();
    let mut prev = f64::INFINITY;
    for k in 0..=9 {
        let u0 = 2.0 + 0.49 * k as f64 / 9.0;
        let member = figures::fig3_member(&p, u0).unwrap();
        let rep = certificates::wedge_certificate_for(&member, &c, 0.1).unwrap();
        assert!(rep.pass, "u0 = {u0}: {rep:?}");
        let slope = rep.descending.unwrap().extreme_slope;
        assert!(slope <= prev + 1e-12, "u0 = {u0}: {slope} after {prev}");
        prev = slope;
    }
    let small = figures::fig3_member(&p, 0.3).unwrap();
    assert!(!wedge_certificate(&small, c.max_delta(), 0.1).unwrap().pass);
}

#[test]
fn h1_and_h2_find_nothing_for_admissible_problem() {
    let (w, n) = admissible().swap_remove(0);
    let c = compute_constants(&w, &n).unwrap();
    let p = Problem::new(w, n, BoundaryCondition::Neumann);
    let h1 = certificates::probe_h1(&p, certificates::DEFAULT_R, &certificates::theta_grid(), 200).unwrap();
    assert!(h1.passed(), "{}", h1.summary());
    let h2 = certificates::probe_h2(&p, c.big_r, &certificates::alpha_grid(c.alpha0, 20), 200).unwrap();
    assert!(h2.passed(), "{}", h2.summary());
    assert!(h2.summary().contains("no counterexample found at resolution 200"));
}

#[test]
fn vanishing_g_makes_every_constant_a_solution() {
    let n = Nonlinearity::custom(|_| 0.0, None, None, 0.0);
    let p = Problem::new(fig_weight(-4.0), n, BoundaryCondition::Neumann);
    let h1 = certificates::probe_h1(&p, 0.5, &[1.0], 50).unwrap();
    assert!(!h1.passed());
    assert!(h1.hits.iter().all(|h| h.v0 == 0.0 && (h.sup_norm - h.u0).abs() < 1e-14));
}
