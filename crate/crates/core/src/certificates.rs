//! Constructed a-priori constants, numeric probes of the degree hypotheses,
//! the one-dimensional degree of `f#`, and the ∧-shape certificate for large
//! solutions.
//!
//! The probes are falsification searches at a finite resolution. An empty
//! report means no counterexample was found, nothing more.

use rayon::prelude::*;

use crate::bvp::{self, BoundaryCondition, Homotopy, Problem, ScanOptions, DEDUP_RADIUS};
use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::phase_flow::{self, phi, phi_inv, HomotopyParams, PhaseState, Trajectory};
use crate::weight::WeightFunction;

/// Default radius for the small-norm probe when no solution is known.
pub const DEFAULT_R: f64 = 1e-3;

/// Safety factor on the strict lower bound for `α₀`.
pub const ALPHA0_FACTOR: f64 = 1.01;

const R_STAR_XTOL: f64 = 1e-6;
const R_STAR_LIMIT: f64 = 1e12;
const MIN_G_SAMPLES: usize = 17;

/// Constants attached to one positivity interval `[σ_i, τ_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalConstants {
    pub interval: (f64, f64),
    /// `A_i`: smallest `L¹` mass of `a` over windows of a quarter of the interval.
    pub window_l1: f64,
    pub delta: f64,
    /// `γ_i(δ_i)`
    pub gamma: f64,
    /// `‖a⁻‖∞ / γ_i(δ_i)`
    pub k_i: f64,
    pub beta: f64,
}

impl IntervalConstants {
    pub fn length(&self) -> f64 {
        self.interval.1 - self.interval.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TheoremConstants {
    /// `‖a⁻‖∞ / min_i A_i`
    pub k: f64,
    pub intervals: Vec<IntervalConstants>,
    pub epsilon: f64,
    /// `φ(-1 + ε)`, negative.
    pub phi_eps: f64,
    /// Tail estimate of `liminf g/G`.
    pub liminf_estimate: f64,
    pub r_hat: f64,
    pub r_star: f64,
    pub big_r: f64,
    pub r: f64,
    /// `+∞` when only the logarithm is representable.
    pub alpha0: f64,
    pub log_alpha0: f64,
    pub period: f64,
}

impl TheoremConstants {
    pub fn deltas(&self) -> Vec<f64> {
        self.intervals.iter().map(|c| c.delta).collect()
    }

    pub fn betas(&self) -> Vec<f64> {
        self.intervals.iter().map(|c| c.beta).collect()
    }

    pub fn max_delta(&self) -> f64 {
        self.intervals.iter().map(|c| c.delta).fold(0.0, f64::max)
    }

    /// Both growth estimates at `ρ`, for every interval.
    pub fn estimates_hold(&self, n: &Nonlinearity, rho: f64) -> bool {
        estimates_hold(&self.intervals, self.phi_eps, n, rho)
    }

    /// The structural invariants: admissible `δ_i`, `ε` and `β_i`, and the
    /// assembly of `R`.
    pub fn invariants_hold(&self) -> bool {
        let per_interval = self.intervals.iter().all(|c| {
            let l = c.length();
            c.delta > 0.0
                && c.delta < l / 4.0
                && self.epsilon < (l - 4.0 * c.delta) / (l - 2.0 * c.delta)
                && c.beta > 0.0
        });
        let r = self.r_star.max(self.r_hat) + 2.0 * self.max_delta() + self.period;
        per_interval && self.epsilon > 0.0 && self.epsilon < 1.0 && (self.big_r - r).abs() <= 1e-12 * r
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn estimates_hold(intervals: &[IntervalConstants], phi_eps: f64, n: &Nonlinearity, rho: f64) -> bool {
    let log_phi = (-phi_eps).ln();
    intervals.iter().all(|c| {
        let x1 = rho - c.delta;
        let x2 = x1 - c.beta;
        if !(x2 > 0.0) {
            return false;
        }
        let log_gamma = c.gamma.ln();
        let min_log_g = (0..MIN_G_SAMPLES)
            .map(|k| n.log_g(x1 + c.delta * k as f64 / (MIN_G_SAMPLES - 1) as f64))
            .fold(f64::INFINITY, f64::min);
        if !(log_gamma + min_log_g >= log_phi) {
            return false;
        }
        let lhs = n.log_g(x1);
        let forcing = log_phi - log_gamma;
        let rhs = if c.k_i > 0.0 { log_add_exp(c.k_i.ln() + n.log_big_g(x2), forcing) } else { forcing };
        lhs > rhs
    })
}

/// Constants `δ_i`, `ε`, `β_i`, `R*`, `R`, `α₀` for `(w, n)`.
///
/// Fails with [`Error::GrowthConditionUnmet`] when the tail estimate of
/// `g/G` does not exceed `K`.
pub fn compute_constants(w: &WeightFunction, n: &Nonlinearity) -> Result<TheoremConstants> {
    let se = n.check_se_condition(w)?;
    if !se.pass {
        return Err(Error::GrowthConditionUnmet { estimate: se.estimate, threshold: se.threshold });
    }
    let part = w.sign_partition()?;
    let neg = w.neg_sup_norm();
    let liminf = se.estimate;

    let mut intervals = Vec::with_capacity(part.m());
    for (i, &(s, t)) in part.positivity_intervals.iter().enumerate() {
        let idx = i + 1;
        let cap = (t - s) / 4.0;
        let mut chosen = None;
        let mut last_k = f64::INFINITY;
        for k in 1..=52 {
            let delta = cap * (1.0 - 0.5f64.powi(k));
            let gamma = w.gamma_in(&part, idx, delta)?;
            let k_i = neg / gamma;
            last_k = k_i;
            if gamma > 0.0 && liminf > k_i {
                chosen = Some((delta, gamma, k_i));
                break;
            }
        }
        let Some((delta, gamma, k_i)) = chosen else {
            return Err(Error::GrowthConditionUnmet { estimate: liminf, threshold: last_k });
        };
        intervals.push(IntervalConstants {
            interval: (s, t),
            window_l1: w.window_min_l1(idx)?,
            delta,
            gamma,
            k_i,
            beta: 0.0,
        });
    }

    let epsilon = 0.5
        * intervals
            .iter()
            .map(|c| (c.length() - 4.0 * c.delta) / (c.length() - 2.0 * c.delta))
            .fold(1.0, f64::min);
    for c in &mut intervals {
        let half = c.length() / 2.0;
        c.beta = epsilon * (c.delta - half) + half - 2.0 * c.delta;
    }
    let phi_eps = phi(-1.0 + epsilon)?;

    let r_hat = n.r_hat();
    let holds = |rho: f64| estimates_hold(&intervals, phi_eps, n, rho);
    let floor = intervals.iter().map(|c| c.delta + c.beta).fold(r_hat, f64::max);
    let mut lo = floor;
    let mut hi = floor.max(r_hat.max(1.0));
    while !holds(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > R_STAR_LIMIT {
            return Err(Error::Inconclusive(format!("growth estimates still fail at rho = {hi:e}")));
        }
    }
    let r_star = if holds(lo) {
        lo
    } else {
        while hi - lo > R_STAR_XTOL {
            let mid = 0.5 * (lo + hi);
            if holds(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    let max_delta = intervals.iter().map(|c| c.delta).fold(0.0, f64::max);
    let period = w.period();
    let big_r = r_star.max(r_hat) + 2.0 * max_delta + period;

    let forcing_l1: f64 = part.positivity_intervals.iter().map(|(s, t)| t - s).sum();
    let log_max_g = (0..=2000)
        .map(|k| n.log_g(big_r * k as f64 / 2000.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let log_alpha0 = ALPHA0_FACTOR.ln() + w.l1_norm().ln() + log_max_g - forcing_l1.ln();

    Ok(TheoremConstants {
        k: se.threshold,
        intervals,
        epsilon,
        phi_eps,
        liminf_estimate: liminf,
        r_hat,
        r_star,
        big_r,
        r: DEFAULT_R,
        alpha0: log_alpha0.exp(),
        log_alpha0,
        period,
    })
}

/// `r` for the small-norm probe given the smallest known solution norm.
pub fn default_r(smallest_sup_norm: Option<f64>) -> f64 {
    DEFAULT_R * smallest_sup_norm.map_or(1.0, |s| s.min(1.0))
}

/// Degree of `-f#` on `(-r, r)`, where `f#(s) = g(s)∫a` for `s ≥ 0` and `-s`
/// otherwise.
pub fn brouwer_degree_f_sharp(w: &WeightFunction, n: &Nonlinearity, r: f64) -> Result<i32> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain { what: "degree radius r > 0", value: r });
    }
    let f_right = n.g(r) * w.integral(0.0, w.period());
    let f_left = r;
    if f_right == 0.0 || !f_right.is_finite() {
        return Err(Error::DegenerateBoundary { s: r });
    }
    let sign = |x: f64| if x > 0.0 { 1 } else { -1 };
    Ok((sign(-f_right) - sign(-f_left)) / 2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeHit {
    /// `θ` or `α` at which the solution was found.
    pub param: f64,
    pub u0: f64,
    pub v0: f64,
    pub sup_norm: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ProbeReport {
    /// Sup-norm window searched.
    pub window: (f64, f64),
    pub grid: Vec<f64>,
    pub resolution: usize,
    pub hits: Vec<ProbeHit>,
    /// Shots that failed to integrate.
    pub failures: usize,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.hits.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            format!("no counterexample found at resolution {}", self.resolution)
        } else {
            format!("{} solution(s) found in the window at resolution {}", self.hits.len(), self.resolution)
        }
    }
}

fn solutions_in_window(
    problem: &Problem,
    hom: &Homotopy,
    c_range: (f64, f64),
    resolution: usize,
    window: (f64, f64),
) -> Result<(Vec<Trajectory>, usize)> {
    let in_window = |tr: &Trajectory| {
        let s = tr.sup_norm();
        s >= window.0 && s <= window.1
    };
    match problem.bc {
        BoundaryCondition::Neumann => {
            let scan = ScanOptions { c_min: c_range.0, c_max: c_range.1, n_points: resolution.max(2) };
            let (found, failures) = bvp::scan_neumann(problem, Some(hom), &scan)?;
            Ok((found.into_iter().filter(in_window).collect(), failures.len()))
        }
        BoundaryCondition::Periodic => {
            let shoot = |s: PhaseState| {
                phase_flow::integrate(
                    &problem.weight,
                    &problem.nonlinearity,
                    hom.params,
                    hom.forcing,
                    s,
                    (0.0, problem.period()),
                    &problem.flow_options(),
                )
            };
            let nu = resolution.max(2);
            let guesses: Vec<PhaseState> = (0..nu)
                .flat_map(|i| {
                    let u = c_range.0 + (c_range.1 - c_range.0) * i as f64 / (nu - 1) as f64;
                    [-1.0, 0.0, 1.0].map(|v| PhaseState::new(u, v))
                })
                .collect();
            let outcomes: Vec<Result<Trajectory>> = guesses
                .par_iter()
                .map(|&g| bvp::periodic_newton_with(shoot, g).and_then(shoot))
                .collect();
            let mut failures = 0;
            let mut found = Vec::new();
            for o in outcomes {
                match o {
                    Ok(tr) if in_window(&tr) => found.push(tr),
                    Ok(_) => {}
                    Err(_) => failures += 1,
                }
            }
            found.sort_by(|a, b| a.first().u.partial_cmp(&b.first().u).unwrap());
            found.dedup_by(|a, b| {
                (a.first().u - b.first().u).abs() < DEDUP_RADIUS && (a.first().v - b.first().v).abs() < DEDUP_RADIUS
            });
            Ok((found, failures))
        }
    }
}

fn run_probe(
    problem: &Problem,
    grid: &[f64],
    params: impl Fn(f64) -> Result<HomotopyParams>,
    forcing: Option<&WeightFunction>,
    c_range: (f64, f64),
    window: (f64, f64),
    resolution: usize,
) -> Result<ProbeReport> {
    let mut report = ProbeReport { window, grid: grid.to_vec(), resolution, ..Default::default() };
    for &x in grid {
        let hom = Homotopy { params: params(x)?, forcing };
        let (found, failures) = solutions_in_window(problem, &hom, c_range, resolution, window)?;
        report.failures += failures;
        report.hits.extend(found.iter().map(|tr| ProbeHit {
            param: x,
            u0: tr.first().u,
            v0: tr.first().v,
            sup_norm: tr.sup_norm(),
        }));
    }
    Ok(report)
}

/// Searches the `θ`-scaled field for solutions with `‖u‖∞ ∈ [0.9r, 1.1r]`.
pub fn probe_h1(problem: &Problem, r: f64, thetas: &[f64], resolution: usize) -> Result<ProbeReport> {
    if !(r > 0.0) {
        return Err(Error::Domain { what: "probe radius r > 0", value: r });
    }
    let hi = 1.1 * r;
    run_probe(
        problem,
        thetas,
        |theta| HomotopyParams::new(theta, 0.0, problem.lambda),
        None,
        (hi / resolution.max(2) as f64, hi),
        (0.9 * r, hi),
        resolution,
    )
}

/// Searches the forced field `α · 1_{a>0}` for solutions with
/// `‖u‖∞ ∈ [0.95R, 1.05R]`.
pub fn probe_h2(problem: &Problem, big_r: f64, alphas: &[f64], resolution: usize) -> Result<ProbeReport> {
    if !(big_r > 0.0) {
        return Err(Error::Domain { what: "probe radius R > 0", value: big_r });
    }
    let forcing = problem.weight.positivity_indicator()?;
    let hi = 1.05 * big_r;
    let lo = (0.95 * big_r - problem.period()).max(hi / resolution.max(2) as f64);
    run_probe(
        problem,
        alphas,
        |alpha| HomotopyParams::new(1.0, alpha, problem.lambda),
        Some(&forcing),
        (lo, hi),
        (0.95 * big_r, hi),
        resolution,
    )
}

/// Searches the field forced at `α₀` for any solution with `‖u‖∞ ≤ R`.
pub fn probe_h3(problem: &Problem, big_r: f64, alpha0: f64, resolution: usize) -> Result<ProbeReport> {
    if !(big_r > 0.0) {
        return Err(Error::Domain { what: "probe radius R > 0", value: big_r });
    }
    let forcing = problem.weight.positivity_indicator()?;
    run_probe(
        problem,
        &[alpha0],
        |alpha| HomotopyParams::new(1.0, alpha, problem.lambda),
        Some(&forcing),
        (big_r / resolution.max(2) as f64, big_r),
        (0.0, big_r),
        resolution,
    )
}

/// `α` grid of `n` equally spaced values in `[0, α₀]`.
pub fn alpha_grid(alpha0: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![alpha0];
    }
    (0..n).map(|k| alpha0 * k as f64 / (n - 1) as f64).collect()
}

/// `{0.1, 0.2, …, 1}`
pub fn theta_grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeCheck {
    pub from: f64,
    pub to: f64,
    /// Largest `u'` on the descending side, smallest on the ascending side.
    pub extreme_slope: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WedgeReport {
    pub t_hat: f64,
    pub u_hat: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// `u' ≥ 1 - ε` on `[start, t̂ - δ]`, when that interval is non-empty.
    pub ascending: Option<SlopeCheck>,
    /// `u' ≤ -1 + ε` on `[t̂ + δ, end]`, when that interval is non-empty.
    pub descending: Option<SlopeCheck>,
    pub pass: bool,
}

const WEDGE_SAMPLES: usize = 2001;

fn slope_extreme(traj: &Trajectory, from: f64, to: f64, take_max: bool) -> f64 {
    let grid = (0..WEDGE_SAMPLES).map(|k| from + (to - from) * k as f64 / (WEDGE_SAMPLES - 1) as f64);
    let nodes = traj.nodes().iter().map(|&(t, _)| t).filter(|&t| t >= from && t <= to);
    let slopes = grid.chain(nodes).map(|t| phi_inv(traj.eval(t).v));
    if take_max {
        slopes.fold(f64::NEG_INFINITY, f64::max)
    } else {
        slopes.fold(f64::INFINITY, f64::min)
    }
}

/// Slope bounds `±(1 - ε)` away from the maximum point of `traj`.
pub fn wedge_certificate(traj: &Trajectory, delta: f64, epsilon: f64) -> Result<WedgeReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain { what: "wedge epsilon in (0, 1)", value: epsilon });
    }
    if !(delta >= 0.0) {
        return Err(Error::Domain { what: "wedge delta >= 0", value: delta });
    }
    let (start, end) = (traj.t_start(), traj.t_end());
    if end - start < 2.0 * delta {
        return Err(Error::Inconclusive(format!(
            "trajectory of length {} is shorter than 2 delta = {}",
            end - start,
            2.0 * delta
        )));
    }
    let (u_hat, t_hat) = traj.max_u();
    let descending = (t_hat + delta < end).then(|| {
        let s = slope_extreme(traj, t_hat + delta, end, true);
        SlopeCheck { from: t_hat + delta, to: end, extreme_slope: s, pass: s <= -1.0 + epsilon }
    });
    let ascending = (t_hat - delta > start).then(|| {
        let s = slope_extreme(traj, start, t_hat - delta, false);
        SlopeCheck { from: start, to: t_hat - delta, extreme_slope: s, pass: s >= 1.0 - epsilon }
    });
    let pass = (ascending.is_some() || descending.is_some())
        && ascending.is_none_or(|c| c.pass)
        && descending.is_none_or(|c| c.pass);
    Ok(WedgeReport { t_hat, u_hat, delta, epsilon, ascending, descending, pass })
}

/// [`wedge_certificate`] with `δ = max_i δ_i`.
pub fn wedge_certificate_for(traj: &Trajectory, constants: &TheoremConstants, epsilon: f64) -> Result<WedgeReport> {
    wedge_certificate(traj, constants.max_delta(), epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_flow::FlowOptions;

    fn fig2_weight() -> WeightFunction {
        WeightFunction::step(&[1.0], &[1.0, -10.0], 2.0).unwrap()
    }

    fn fig1(neg: f64) -> Problem {
        Problem::new(
            WeightFunction::step(&[1.0], &[1.0, neg], 2.0).unwrap(),
            Nonlinearity::exp_power(2.0).unwrap(),
            BoundaryCondition::Neumann,
        )
    }

    fn cauchy(problem: &Problem, u0: f64) -> Trajectory {
        phase_flow::integrate(
            &problem.weight,
            &problem.nonlinearity,
            HomotopyParams::default(),
            None,
            PhaseState::new(u0, 0.0),
            (0.0, 2.0),
            &FlowOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn kappa_45_has_constants() {
        let c = compute_constants(&fig2_weight(), &Nonlinearity::power_exp(2.0, 45.0).unwrap()).unwrap();
        assert!((c.k - 40.0).abs() < 1e-12);
        assert!((c.intervals[0].delta - 0.25 * 15.0 / 16.0).abs() < 1e-15);
        assert!(c.invariants_hold());
        assert!(c.estimates_hold(&Nonlinearity::power_exp(2.0, 45.0).unwrap(), c.r_star));
    }

    #[test]
    fn kappa_30_fails_growth_condition() {
        let err = compute_constants(&fig2_weight(), &Nonlinearity::power_exp(2.0, 30.0).unwrap()).unwrap_err();
        match err {
            Error::GrowthConditionUnmet { estimate, threshold } => {
                assert!((threshold - 40.0).abs() < 1e-12);
                assert!(estimate < threshold);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exp_power_r_star_verified_above() {
        let p = fig1(-10.0);
        let c = compute_constants(&p.weight, &p.nonlinearity).unwrap();
        assert!(c.r_star.is_finite() && c.invariants_hold());
        for k in 0..100 {
            assert!(c.estimates_hold(&p.nonlinearity, c.r_star + 10.0 * k as f64 / 99.0));
        }
        assert!(!c.estimates_hold(&p.nonlinearity, c.r_star - 1e-3));
        assert!(c.log_alpha0.is_finite() && c.alpha0 > 0.0);
    }

    #[test]
    fn degree_signs() {
        let p = fig1(-10.0);
        assert_eq!(brouwer_degree_f_sharp(&p.weight, &p.nonlinearity, 0.1).unwrap(), 1);
        let w = WeightFunction::step(&[], &[0.5], 2.0).unwrap();
        assert_eq!(brouwer_degree_f_sharp(&w, &Nonlinearity::power(2.0).unwrap(), 1.0).unwrap(), 0);
        let balanced = WeightFunction::step(&[1.0], &[1.0, -1.0], 2.0).unwrap();
        assert!(matches!(
            brouwer_degree_f_sharp(&balanced, &p.nonlinearity, 0.5),
            Err(Error::DegenerateBoundary { .. })
        ));
    }

    #[test]
    fn wedge_on_large_and_small_solutions() {
        let p = fig1(-4.0);
        let big = wedge_certificate(&cauchy(&p, 2.49), 0.1, 0.01).unwrap();
        assert!(big.pass, "{big:?}");
        assert!(big.descending.unwrap().extreme_slope <= -0.99);
        let small = wedge_certificate(&cauchy(&p, 0.693648), 0.1, 0.1).unwrap();
        assert!(!small.pass);
    }

    #[test]
    fn wedge_constant_and_short() {
        let w = WeightFunction::step(&[], &[0.0], 2.0).unwrap();
        let n = Nonlinearity::power(2.0).unwrap();
        let tr = phase_flow::integrate(
            &w,
            &n,
            HomotopyParams::default(),
            None,
            PhaseState::new(1.0, 0.0),
            (0.0, 2.0),
            &FlowOptions::default(),
        )
        .unwrap();
        let rep = wedge_certificate(&tr, 0.1, 0.1).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.descending.unwrap().extreme_slope, 0.0);
        assert!(matches!(wedge_certificate(&tr, 1.5, 0.1), Err(Error::Inconclusive(_))));
    }

    #[test]
    fn h1_planted_hit() {
        let p = fig1(-4.0);
        let rep = probe_h1(&p, 0.693648, &[1.0], 200).unwrap();
        assert_eq!(rep.hits.len(), 1);
        assert!((rep.hits[0].u0 - 0.6936476).abs() < 1e-6);
    }
}
