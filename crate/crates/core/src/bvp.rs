//! Neumann and periodic problems solved by shooting.
//!
//! Residuals are compared against `max(1, ‖v‖∞)`: large solutions carry
//! momenta far beyond unity, and an absolute threshold would then sit below
//! the rounding level of the state itself.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::phase_flow::{self, FlowOptions, HomotopyParams, PhaseState, Tolerances, Trajectory};
use crate::quad;
use crate::roots::{self, Stop};
use crate::weight::WeightFunction;

/// Threshold on the scaled shooting residual.
pub const ROOT_TOL: f64 = 1e-10;
/// Roots closer than this in `u(0)` are the same solution.
pub const DEDUP_RADIUS: f64 = 1e-8;
/// Cells in the weak-form test partition.
pub const WEAK_CELLS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryCondition {
    Neumann,
    Periodic,
}

impl BoundaryCondition {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryCondition::Neumann => "neumann",
            BoundaryCondition::Periodic => "periodic",
        }
    }
}

/// Continuation parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parameter {
    Lambda,
    Kappa,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::Lambda => "lambda",
            Parameter::Kappa => "kappa",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub weight: WeightFunction,
    pub nonlinearity: Nonlinearity,
    pub bc: BoundaryCondition,
    pub lambda: f64,
    pub tol: Tolerances,
    pub max_step: Option<f64>,
}

impl Problem {
    /// `λ = 1`, default tolerances, maximum step a tenth of the shortest
    /// weight piece.
    pub fn new(weight: WeightFunction, nonlinearity: Nonlinearity, bc: BoundaryCondition) -> Self {
        let shortest = weight.pieces().iter().map(|p| p.end - p.start).fold(f64::INFINITY, f64::min);
        Problem {
            weight,
            nonlinearity,
            bc,
            lambda: 1.0,
            tol: Tolerances::default(),
            max_step: Some(shortest / 10.0),
        }
    }

    pub fn period(&self) -> f64 {
        self.weight.period()
    }

    pub fn homotopy(&self) -> Result<HomotopyParams> {
        HomotopyParams::with_lambda(self.lambda)
    }

    pub fn flow_options(&self) -> FlowOptions {
        FlowOptions { tol: self.tol, max_step: self.max_step, ..Default::default() }
    }

    pub fn param(&self, p: Parameter) -> f64 {
        match p {
            Parameter::Lambda => self.lambda,
            Parameter::Kappa => self.nonlinearity.kappa().unwrap_or(f64::NAN),
        }
    }

    pub fn with_param(&self, p: Parameter, value: f64) -> Result<Problem> {
        let mut out = self.clone();
        match p {
            Parameter::Lambda => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(Error::Domain { what: "lambda > 0", value });
                }
                out.lambda = value;
            }
            Parameter::Kappa => out.nonlinearity = self.nonlinearity.with_kappa(value)?,
        }
        Ok(out)
    }

    /// Integrates from `s0` over `[0, T]`.
    pub fn shoot(&self, s0: PhaseState) -> Result<Trajectory> {
        phase_flow::integrate(
            &self.weight,
            &self.nonlinearity,
            self.homotopy()?,
            None,
            s0,
            (0.0, self.period()),
            &self.flow_options(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolutionCertificate {
    pub bc_residual: f64,
    pub weak_residual: f64,
    pub min_u: f64,
    pub max_abs_slope: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub bc: BoundaryCondition,
    pub sup_norm: f64,
    pub max_point: f64,
    pub certificate: SolutionCertificate,
}

impl Solution {
    pub fn from_trajectory(problem: &Problem, trajectory: Trajectory) -> Solution {
        let certificate = verify_trajectory(problem, &trajectory);
        let (_, max_point) = trajectory.max_u();
        Solution { sup_norm: trajectory.sup_norm(), max_point, bc: problem.bc, trajectory, certificate }
    }

    pub fn u0(&self) -> f64 {
        self.trajectory.first().u
    }

    pub fn v0(&self) -> f64 {
        self.trajectory.first().v
    }

    pub fn is_positive(&self) -> bool {
        self.certificate.min_u > 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub c_min: f64,
    pub c_max: f64,
    pub n_points: usize,
}

impl ScanOptions {
    /// `[10⁻³, 10 + T]` with 600 points per unit of `c`.
    pub fn default_for(problem: &Problem) -> Self {
        let c_max = 10.0 + problem.period();
        ScanOptions { c_min: 1e-3, c_max, n_points: (600.0 * c_max).ceil() as usize }
    }
}

#[derive(Debug, Default)]
pub struct NeumannReport {
    pub solutions: Vec<Solution>,
    /// Scan points where integration failed.
    pub failures: Vec<(f64, Error)>,
}

/// Homotopy field `θ`, `α` and forcing used by the hypothesis probes in place
/// of the plain `λ`-field.
#[derive(Clone, Copy, Debug)]
pub struct Homotopy<'a> {
    pub params: HomotopyParams,
    pub forcing: Option<&'a WeightFunction>,
}

/// `v(T)` for the shot from `(c, 0)`.
pub fn neumann_residual(c: f64, problem: &Problem) -> Result<f64> {
    Ok(neumann_shot(c, problem, None)?.last().v)
}

fn neumann_shot(c: f64, problem: &Problem, hom: Option<&Homotopy>) -> Result<Trajectory> {
    let run = || match hom {
        None => problem.shoot(PhaseState::new(c, 0.0)),
        Some(h) => phase_flow::integrate(
            &problem.weight,
            &problem.nonlinearity,
            h.params,
            h.forcing,
            PhaseState::new(c, 0.0),
            (0.0, problem.period()),
            &problem.flow_options(),
        ),
    };
    run().map_err(|e| Error::Shooting { c, source: Box::new(e) })
}

fn scaled_neumann_residual(tr: &Trajectory) -> f64 {
    tr.last().v.abs() / tr.max_abs_v().max(1.0)
}

/// Scan, bracket and refine every sign change of the Neumann residual.
pub fn solve_neumann(problem: &Problem, scan: &ScanOptions) -> Result<NeumannReport> {
    let (trajectories, failures) = scan_neumann(problem, None, scan)?;
    let solutions = trajectories.into_iter().map(|tr| Solution::from_trajectory(problem, tr)).collect();
    Ok(NeumannReport { solutions, failures })
}

/// Neumann shooting roots for the plain field or a homotopy field, as
/// trajectories sorted by `u(0)`.
pub fn scan_neumann(
    problem: &Problem,
    hom: Option<&Homotopy>,
    scan: &ScanOptions,
) -> Result<(Vec<Trajectory>, Vec<(f64, Error)>)> {
    if !(scan.c_min > 0.0 && scan.c_max > scan.c_min && scan.n_points >= 2) {
        return Err(Error::Domain { what: "scan with 0 < c_min < c_max", value: scan.c_min });
    }
    let n = scan.n_points;
    let grid: Vec<f64> = (0..n)
        .map(|k| {
            if k == n - 1 {
                scan.c_max
            } else {
                scan.c_min + (scan.c_max - scan.c_min) * k as f64 / (n - 1) as f64
            }
        })
        .collect();
    let values: Vec<Result<f64>> = grid
        .par_iter()
        .map(|&c| neumann_shot(c, problem, hom).map(|tr| tr.last().v))
        .collect();

    let mut failures = Vec::new();
    let mut brackets = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for (&c, r) in grid.iter().zip(values) {
        match r {
            Ok(r) => {
                if r == 0.0 {
                    brackets.push((c, c, r, r));
                } else if let Some((pc, pr)) = prev {
                    if pr != 0.0 && pr.signum() != r.signum() {
                        brackets.push((pc, c, pr, r));
                    }
                }
                prev = Some((c, r));
            }
            Err(e) => {
                failures.push((c, e));
                prev = None;
            }
        }
    }

    let refined: Vec<Result<Trajectory>> = brackets
        .par_iter()
        .map(|&(a, b, fa, fb)| refine_root(problem, hom, a, b, fa, fb))
        .collect();
    let mut out = Vec::new();
    for r in refined {
        match r {
            Ok(tr) => out.push(tr),
            Err(Error::Shooting { c, source }) => failures.push((c, *source)),
            Err(e) => failures.push((f64::NAN, e)),
        }
    }
    out.sort_by(|x: &Trajectory, y: &Trajectory| x.first().u.partial_cmp(&y.first().u).unwrap());
    out.dedup_by(|x, y| (x.first().u - y.first().u).abs() < DEDUP_RADIUS);
    Ok((out, failures))
}

/// Refines a bracketed root of the Neumann residual.
pub fn refine_neumann(problem: &Problem, a: f64, b: f64, fa: f64, fb: f64) -> Result<Solution> {
    let tr = refine_root(problem, None, a, b, fa, fb)?;
    Ok(Solution::from_trajectory(problem, tr))
}

fn refine_root(problem: &Problem, hom: Option<&Homotopy>, a: f64, b: f64, fa: f64, fb: f64) -> Result<Trajectory> {
    let c = if a == b {
        a
    } else {
        let stop = Stop { xtol: 4.0 * f64::EPSILON * b.abs(), max_iter: 200, accept: &|_, _| false };
        let mut best: Option<(f64, f64)> = None;
        let res = roots::brent(
            |c| {
                let tr = neumann_shot(c, problem, hom)?;
                let s = scaled_neumann_residual(&tr);
                if best.is_none_or(|(_, bs)| s < bs) {
                    best = Some((c, s));
                }
                Ok(tr.last().v)
            },
            a,
            b,
            fa,
            fb,
            &stop,
        );
        match (res, best) {
            (Ok(_), Some((c, _))) | (Err(Error::NoConvergence { .. }), Some((c, _))) => c,
            (Ok((c, _)), None) => c,
            (Err(e), _) => return Err(e),
        }
    };
    let tr = neumann_shot(c, problem, hom)?;
    let residual = scaled_neumann_residual(&tr);
    if residual > ROOT_TOL {
        return Err(Error::NoConvergence { iterations: 200, residual });
    }
    Ok(tr)
}

/// Boundary and weak-form residuals of a trajectory on `[0, T]`.
pub fn verify_trajectory(problem: &Problem, tr: &Trajectory) -> SolutionCertificate {
    let (s0, s1) = (tr.first(), tr.last());
    let v_scale = tr.max_abs_v().max(1.0);
    let bc_residual = match problem.bc {
        BoundaryCondition::Neumann => s0.v.abs().max(s1.v.abs()) / v_scale,
        BoundaryCondition::Periodic => {
            let u_scale = tr.sup_norm().max(1.0);
            ((s1.u - s0.u).abs() / u_scale).max((s1.v - s0.v).abs() / v_scale)
        }
    };
    SolutionCertificate {
        bc_residual,
        weak_residual: weak_residual(problem, tr) / v_scale,
        min_u: tr.min_u(),
        max_abs_slope: tr.max_abs_slope(),
    }
}

/// Certificate for a solution.
pub fn verify_solution(problem: &Problem, sol: &Solution) -> SolutionCertificate {
    verify_trajectory(problem, &sol.trajectory)
}

/// `max_j |∫ (v ψ_j' - f(t, u) ψ_j)|` over hat functions on a uniform
/// partition, unscaled. For periodic problems the two boundary hats are
/// merged into one.
pub fn weak_residual(problem: &Problem, tr: &Trajectory) -> f64 {
    let period = problem.period();
    let h = period / WEAK_CELLS as f64;
    let lambda = problem.lambda;
    let n = &problem.nonlinearity;
    let w = &problem.weight;
    let mut cuts: Vec<f64> = (0..=WEAK_CELLS).map(|j| j as f64 * h).collect();
    cuts.extend(w.breakpoints());
    cuts.extend(tr.nodes().iter().map(|(t, _)| *t).filter(|&t| t > 0.0 && t < period));
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * period);

    // integral over each cell j of v·ψ' and f·ψ for its two hat halves
    let mut rising = vec![0.0; WEAK_CELLS];
    let mut falling = vec![0.0; WEAK_CELLS];
    for seg in cuts.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let j = ((mid / h) as usize).min(WEAK_CELLS - 1);
        let tj = j as f64 * h;
        let integrand = |t: f64, up: bool| {
            let s = tr.eval(t);
            let f = if s.u >= 0.0 { lambda * w.value(t) * n.g(s.u) } else { -s.u };
            let x = (t - tj) / h;
            if up {
                s.v / h - f * x
            } else {
                -s.v / h - f * (1.0 - x)
            }
        };
        rising[j] += quad::gauss8(|t| integrand(t, true), lo, hi);
        falling[j] += quad::gauss8(|t| integrand(t, false), lo, hi);
    }
    let mut worst: f64 = 0.0;
    for j in 1..WEAK_CELLS {
        worst = worst.max((rising[j - 1] + falling[j]).abs());
    }
    match problem.bc {
        BoundaryCondition::Neumann => worst.max(falling[0].abs()).max(rising[WEAK_CELLS - 1].abs()),
        BoundaryCondition::Periodic => worst.max((falling[0] + rising[WEAK_CELLS - 1]).abs()),
    }
}

#[derive(Debug, Default)]
pub struct PeriodicReport {
    pub solutions: Vec<Solution>,
    /// Rotation applied to the weight before shooting.
    pub shift: f64,
    pub rejected: Vec<(PhaseState, Error)>,
}

/// Newton shooting on `S(u₀, v₀) = (u(T) - u₀, v(T) - v₀)`.
///
/// The weight is first rotated so that `t = 0` starts a positivity
/// interval (when there is one); guesses are states at `t = 0` of the original problem and
/// solutions are returned in the original frame.
pub fn solve_periodic(problem: &Problem, guesses: &[PhaseState]) -> Result<PeriodicReport> {
    let (rotated, shift) = match problem.weight.normalize_periodic() {
        Err(Error::NoPositivityInterval) => (problem.weight.clone(), 0.0),
        other => other?,
    };
    let mut inner = problem.clone();
    inner.weight = rotated;
    inner.bc = BoundaryCondition::Periodic;
    let mut outer = problem.clone();
    outer.bc = BoundaryCondition::Periodic;

    let outcomes: Vec<(PhaseState, Result<Solution>)> = guesses
        .par_iter()
        .map(|&g| {
            let run = || -> Result<Solution> {
                let start = if shift > 0.0 {
                    phase_flow::integrate(
                        &outer.weight,
                        &outer.nonlinearity,
                        outer.homotopy()?,
                        None,
                        g,
                        (0.0, shift),
                        &outer.flow_options(),
                    )?
                    .last()
                } else {
                    g
                };
                let fixed = periodic_newton(&inner, start)?;
                let back = if shift > 0.0 {
                    let tr = inner.shoot(fixed)?;
                    tr.eval(problem.period() - shift)
                } else {
                    fixed
                };
                let tr = outer.shoot(back)?;
                Ok(Solution::from_trajectory(&outer, tr))
            };
            (g, run())
        })
        .collect();

    let mut report = PeriodicReport { shift, ..Default::default() };
    for (g, r) in outcomes {
        match r {
            Ok(sol) if sol.certificate.bc_residual <= 1e-8 => report.solutions.push(sol),
            Ok(sol) => report.rejected.push((
                g,
                Error::NoConvergence { iterations: 0, residual: sol.certificate.bc_residual },
            )),
            Err(e) => report.rejected.push((g, e)),
        }
    }
    report.solutions.sort_by(|x, y| {
        (x.u0(), x.v0()).partial_cmp(&(y.u0(), y.v0())).unwrap()
    });
    report
        .solutions
        .dedup_by(|x, y| (x.u0() - y.u0()).abs() < DEDUP_RADIUS && (x.v0() - y.v0()).abs() < DEDUP_RADIUS);
    Ok(report)
}

fn shooting_map<F: Fn(PhaseState) -> Result<Trajectory>>(shoot: &F, x: [f64; 2]) -> Result<[f64; 2]> {
    let end = shoot(PhaseState::new(x[0], x[1]))?.last();
    Ok([end.u - x[0], end.v - x[1]])
}

fn scaled_norm(s: [f64; 2], x: [f64; 2]) -> f64 {
    (s[0] / x[0].abs().max(1.0)).abs().max((s[1] / x[1].abs().max(1.0)).abs())
}

/// Damped Newton iteration for a fixed point of the period map.
pub fn periodic_newton(problem: &Problem, guess: PhaseState) -> Result<PhaseState> {
    periodic_newton_with(|s| problem.shoot(s), guess)
}

/// [`periodic_newton`] for an arbitrary one-period shooting map.
pub fn periodic_newton_with<F>(shoot: F, guess: PhaseState) -> Result<PhaseState>
where
    F: Fn(PhaseState) -> Result<Trajectory>,
{
    const MAX_ITER: usize = 50;
    let mut x = [guess.u, guess.v];
    let mut s = shooting_map(&shoot, x)?;
    let mut norm = scaled_norm(s, x);
    for _ in 0..MAX_ITER {
        if norm < ROOT_TOL {
            return Ok(PhaseState::new(x[0], x[1]));
        }
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let dk = 1e-7 * x[k].abs().max(1.0);
            let mut xp = x;
            xp[k] += dk;
            let sp = shooting_map(&shoot, xp)?;
            jac[0][k] = (sp[0] - s[0]) / dk;
            jac[1][k] = (sp[1] - s[1]) / dk;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let jn2: f64 = jac.iter().flatten().map(|x| x * x).sum();
        if !(det.abs() >= 1e-14 * jn2) || !det.is_finite() {
            return Err(Error::SingularJacobian { u0: x[0], v0: x[1] });
        }
        let dx = [
            -(jac[1][1] * s[0] - jac[0][1] * s[1]) / det,
            -(-jac[1][0] * s[0] + jac[0][0] * s[1]) / det,
        ];
        let mut step = 1.0;
        loop {
            let xn = [x[0] + step * dx[0], x[1] + step * dx[1]];
            let trial = shooting_map(&shoot, xn).ok().map(|sn| (sn, scaled_norm(sn, xn)));
            if let Some((sn, nn)) = trial {
                if nn < (1.0 - 1e-4 * step) * norm || nn < ROOT_TOL {
                    x = xn;
                    s = sn;
                    norm = nn;
                    break;
                }
            }
            step *= 0.5;
            if step < 1.0 / 1024.0 {
                return Err(Error::NoConvergence { iterations: MAX_ITER, residual: norm });
            }
        }
    }
    if norm < ROOT_TOL {
        Ok(PhaseState::new(x[0], x[1]))
    } else {
        Err(Error::NoConvergence { iterations: MAX_ITER, residual: norm })
    }
}

/// Seeds for [`solve_periodic`]: the given Neumann starts plus a coarse grid
/// over `(0, c_max] × [-3, 3]`.
pub fn periodic_guesses(neumann: &[Solution], c_max: f64, nu: usize, nv: usize) -> Vec<PhaseState> {
    let mut out: Vec<PhaseState> = neumann.iter().map(|s| s.trajectory.first()).collect();
    for i in 1..=nu {
        for j in 0..nv {
            let u = c_max * i as f64 / nu as f64;
            let v = if nv == 1 { 0.0 } else { -3.0 + 6.0 * j as f64 / (nv - 1) as f64 };
            out.push(PhaseState::new(u, v));
        }
    }
    out
}
