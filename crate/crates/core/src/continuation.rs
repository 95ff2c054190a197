//! Pseudo-arclength continuation of Neumann solutions in `λ` or `κ`.
//!
//! Points live in the plane `(p̃, u₀)` with `p̃ = param / (p_max - p_min)`.
//! The corrector solves the shooting residual together with the arclength
//! constraint by a 2×2 Newton iteration with finite-difference derivatives.

use std::io::Write;

use crate::bvp::{self, Parameter, Problem, Solution, ROOT_TOL};
use crate::error::{Error, Result};
use crate::phase_flow::PhaseState;

pub const DEFAULT_STEP: f64 = 0.02;
pub const DEFAULT_CEILING: f64 = 50.0;
const MAX_CORRECTOR_ITER: usize = 10;
const EASY_ITER: usize = 3;
const MAX_POINTS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchPoint {
    pub param: f64,
    pub u0: f64,
    pub sup_norm: f64,
    pub bc_residual: f64,
    pub weak_residual: f64,
    /// Arclength step used to reach this point (zero for the start).
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    RangeExit,
    Ceiling,
    StepUnderflow(String),
    MaxPoints,
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub parameter: Parameter,
    pub range: (f64, f64),
    pub points: Vec<BranchPoint>,
    pub folds: Vec<usize>,
    /// Sign of the initial parameter direction.
    pub direction: f64,
    pub termination: Termination,
}

#[derive(Clone, Copy, Debug)]
pub struct ContinuationOptions {
    pub step: f64,
    pub ceiling: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions { step: DEFAULT_STEP, ceiling: DEFAULT_CEILING }
    }
}

struct Tracer<'a> {
    problem: &'a Problem,
    parameter: Parameter,
    width: f64,
}

impl Tracer<'_> {
    fn at(&self, pn: f64) -> Result<Problem> {
        self.problem.with_param(self.parameter, pn * self.width)
    }

    /// Residual `v(T)` and its scale `max(1, ‖v‖∞)`.
    fn residual(&self, pn: f64, c: f64) -> Result<(f64, f64)> {
        let tr = self.at(pn)?.shoot(PhaseState::new(c, 0.0))?;
        Ok((tr.last().v, tr.max_abs_v().max(1.0)))
    }

    /// `(F, F_p, F_c)` by forward differences.
    fn derivatives(&self, pn: f64, c: f64) -> Result<(f64, f64, f64, f64)> {
        let (f, scale) = self.residual(pn, c)?;
        let dp = 1e-7 * pn.abs().max(1e-3);
        let dc = 1e-7 * c.abs().max(1.0);
        let (fp, _) = self.residual(pn + dp, c)?;
        let (fc, _) = self.residual(pn, c + dc)?;
        Ok((f, (fp - f) / dp, (fc - f) / dc, scale))
    }

    fn point(&self, pn: f64, c: f64, step: f64) -> Result<(BranchPoint, Solution)> {
        let problem = self.at(pn)?;
        let sol = Solution::from_trajectory(&problem, problem.shoot(PhaseState::new(c, 0.0))?);
        let pt = BranchPoint {
            param: pn * self.width,
            u0: c,
            sup_norm: sol.sup_norm,
            bc_residual: sol.certificate.bc_residual,
            weak_residual: sol.certificate.weak_residual,
            step,
        };
        Ok((pt, sol))
    }

    /// Newton in `u₀` at fixed parameter.
    fn solve_fixed(&self, pn: f64, seed: f64) -> Result<f64> {
        let mut c = seed;
        for it in 0..40 {
            let (f, scale) = self.residual(pn, c)?;
            if f.abs() <= ROOT_TOL * 0.1 * scale {
                return Ok(c);
            }
            let dc = 1e-7 * c.abs().max(1.0);
            let (f2, _) = self.residual(pn, c + dc)?;
            let d = (f2 - f) / dc;
            if d == 0.0 || !d.is_finite() {
                if f == 0.0 {
                    return Ok(c);
                }
                return Err(Error::NoConvergence { iterations: it, residual: f.abs() / scale });
            }
            let mut delta = -f / d;
            let cap = 0.25 * c.abs().max(0.1);
            delta = delta.clamp(-cap, cap);
            c += delta;
            if delta.abs() <= 1e-14 * c.abs().max(1.0) {
                let (f, scale) = self.residual(pn, c)?;
                if f.abs() <= ROOT_TOL * scale {
                    return Ok(c);
                }
            }
        }
        Err(Error::NoConvergence { iterations: 40, residual: f64::NAN })
    }

    /// Pseudo-arclength corrector from the predictor `x`; returns the point
    /// and the iteration count.
    fn correct(&self, x_prev: [f64; 2], t: [f64; 2], ds: f64) -> Result<([f64; 2], usize)> {
        let mut x = [x_prev[0] + ds * t[0], x_prev[1] + ds * t[1]];
        let mut scale0 = None;
        for it in 1..=MAX_CORRECTOR_ITER {
            let (f, fp, fc, scale) = self.derivatives(x[0], x[1])?;
            let s = *scale0.get_or_insert(scale);
            let (f, fp, fc) = (f / s, fp / s, fc / s);
            let n = t[0] * (x[0] - x_prev[0]) + t[1] * (x[1] - x_prev[1]) - ds;
            let dx = if fp == 0.0 && fc == 0.0 {
                if f != 0.0 {
                    return Err(Error::SingularJacobian { u0: x[1], v0: 0.0 });
                }
                [-n * t[0], -n * t[1]]
            } else {
                let det = fp * t[1] - fc * t[0];
                if det == 0.0 || !det.is_finite() {
                    return Err(Error::SingularJacobian { u0: x[1], v0: 0.0 });
                }
                [-(f * t[1] - fc * n) / det, -(fp * n - f * t[0]) / det]
            };
            x = [x[0] + dx[0], x[1] + dx[1]];
            let small = dx[0].abs() <= 1e-11 * x[0].abs().max(1.0) && dx[1].abs() <= 1e-11 * x[1].abs().max(1.0);
            if small || f.abs() <= 1e-3 * ROOT_TOL {
                let (f, scale) = self.residual(x[0], x[1])?;
                if f.abs() <= ROOT_TOL * scale {
                    return Ok((x, it));
                }
            }
        }
        Err(Error::NoConvergence { iterations: MAX_CORRECTOR_ITER, residual: f64::NAN })
    }

    fn initial_tangent(&self, pn: f64, c: f64, direction: f64) -> Result<[f64; 2]> {
        let (_, fp, fc, _) = self.derivatives(pn, c)?;
        let t = if fc == 0.0 { [1.0, 0.0] } else { [1.0, -fp / fc] };
        let norm = t[0].hypot(t[1]);
        let sign = if direction < 0.0 { -1.0 } else { 1.0 };
        Ok([sign * t[0] / norm, sign * t[1] / norm])
    }
}

/// Traces the branch through `start` (a certified solution at parameter
/// value `start_param`) until it leaves `range`, exceeds the ceiling, or the
/// step underflows. `direction` picks the initial sign of the parameter
/// change.
pub fn trace_branch(
    problem: &Problem,
    parameter: Parameter,
    start_param: f64,
    start_u0: f64,
    range: (f64, f64),
    direction: f64,
    opts: &ContinuationOptions,
) -> Result<Branch> {
    let (p_min, p_max) = range;
    if !(p_max > p_min) {
        return Err(Error::Domain { what: "continuation range", value: p_max - p_min });
    }
    if !(opts.step > 0.0) {
        return Err(Error::Domain { what: "continuation step > 0", value: opts.step });
    }
    let tracer = Tracer { problem, parameter, width: p_max - p_min };
    let (lo, hi) = (p_min / tracer.width, p_max / tracer.width);
    let pn0 = start_param / tracer.width;
    let c0 = tracer.solve_fixed(pn0, start_u0)?;
    let (first, _) = tracer.point(pn0, c0, 0.0)?;
    let mut branch = Branch {
        parameter,
        range,
        points: vec![first],
        folds: Vec::new(),
        direction: direction.signum(),
        termination: Termination::MaxPoints,
    };
    let mut x = [pn0, c0];
    let mut t = tracer.initial_tangent(pn0, c0, direction)?;
    let (ds_min, ds_max) = (opts.step / 64.0, 4.0 * opts.step);
    let mut ds = opts.step;
    let mut easy = 0;

    while branch.points.len() < MAX_POINTS {
        let pred = x[0] + ds * t[0];
        if pred < lo || pred > hi {
            let bound = if pred < lo { lo } else { hi };
            let frac = (bound - x[0]) / (pred - x[0]);
            let seed = x[1] + frac * ds * t[1];
            match tracer.solve_fixed(bound, seed) {
                Ok(c) => {
                    let step = (bound - x[0]).hypot(c - x[1]);
                    if step <= 1.5 * ds {
                        branch.points.push(tracer.point(bound, c, step)?.0);
                        branch.termination = Termination::RangeExit;
                        break;
                    }
                }
                Err(_) => {}
            }
            ds *= 0.5;
            if ds < ds_min {
                branch.termination = Termination::StepUnderflow(format!("no endpoint solve near {}", bound * tracer.width));
                break;
            }
            continue;
        }
        match tracer.correct(x, t, ds) {
            Ok((xn, iters)) if (xn[0] - x[0]).hypot(xn[1] - x[1]) <= 1.5 * ds && xn[1] > 0.0 => {
                let (pt, _) = tracer.point(xn[0], xn[1], ds)?;
                let d = [xn[0] - x[0], xn[1] - x[1]];
                let norm = d[0].hypot(d[1]);
                t = [d[0] / norm, d[1] / norm];
                x = xn;
                branch.points.push(pt);
                if pt.sup_norm > opts.ceiling {
                    branch.termination = Termination::Ceiling;
                    break;
                }
                if iters <= EASY_ITER {
                    easy += 1;
                    if easy >= 5 {
                        ds = (2.0 * ds).min(ds_max);
                        easy = 0;
                    }
                } else {
                    easy = 0;
                }
            }
            outcome => {
                easy = 0;
                ds *= 0.5;
                if ds < ds_min {
                    let reason = match outcome {
                        Err(e) => e.to_string(),
                        Ok(_) => "corrector left the arclength ball".to_string(),
                    };
                    branch.termination = Termination::StepUnderflow(reason);
                    break;
                }
            }
        }
    }
    branch.folds = fold_indices(&branch.points);
    Ok(branch)
}

fn fold_indices(points: &[BranchPoint]) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 1..points.len().saturating_sub(1) {
        let d1 = points[i].param - points[i - 1].param;
        let d2 = points[i + 1].param - points[i].param;
        if d1 * d2 < 0.0 {
            out.push(i);
        }
    }
    out
}

/// Folds refined by a quadratic `param(u₀)` through the three straddling
/// points; the vertex is the fold estimate.
pub fn detect_folds(b: &Branch) -> Vec<(f64, f64)> {
    fold_indices(&b.points)
        .into_iter()
        .map(|i| {
            let (p, q, r) = (&b.points[i - 1], &b.points[i], &b.points[i + 1]);
            quadratic_vertex([(p.u0, p.param), (q.u0, q.param), (r.u0, r.param)]).unwrap_or((q.param, q.u0))
        })
        .collect()
}

/// Vertex `(y*, x*)` of the parabola `y(x)` through three points.
fn quadratic_vertex(pts: [(f64, f64); 3]) -> Option<(f64, f64)> {
    let [(x0, y0), (x1, y1), (x2, y2)] = pts;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    let b = d01 - a * (x0 + x1);
    if a == 0.0 || !a.is_finite() || !b.is_finite() {
        return None;
    }
    let xs = -b / (2.0 * a);
    let ys = y0 + (xs - x0) * (d01 + a * (xs - x1));
    Some((ys, xs))
}

impl Branch {
    /// Two traces from the same start in opposite directions, ordered from
    /// the far end of `backward` to the far end of `forward`.
    pub fn joined(backward: &Branch, forward: &Branch) -> Branch {
        let mut points: Vec<BranchPoint> = backward.points.iter().rev().cloned().collect();
        points.extend(forward.points.iter().skip(1).cloned());
        let folds = fold_indices(&points);
        Branch {
            parameter: forward.parameter,
            range: forward.range,
            points,
            folds,
            direction: forward.direction,
            termination: forward.termination.clone(),
        }
    }

    /// Every solution of the branch at `param`, one per crossing, seeded
    /// from linear interpolation between neighbouring points.
    pub fn solve_at(&self, problem: &Problem, param: f64) -> Result<Vec<Solution>> {
        let tracer = Tracer { problem, parameter: self.parameter, width: self.range.1 - self.range.0 };
        let pn = param / tracer.width;
        let mut out: Vec<Solution> = Vec::new();
        for w in self.points.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let (lo, hi) = (a.param.min(b.param), a.param.max(b.param));
            if param < lo || param > hi || (param == b.param && b.param != self.points[self.points.len() - 1].param) {
                continue;
            }
            let s = if b.param == a.param { 0.5 } else { (param - a.param) / (b.param - a.param) };
            let seed = a.u0 + s * (b.u0 - a.u0);
            let c = tracer.solve_fixed(pn, seed)?;
            let (_, sol) = tracer.point(pn, c, 0.0)?;
            if !out.iter().any(|o| (o.u0() - c).abs() < bvp::DEDUP_RADIUS) {
                out.push(sol);
            }
        }
        out.sort_by(|x, y| x.u0().partial_cmp(&y.u0()).unwrap());
        Ok(out)
    }

    pub fn u0_range(&self) -> (f64, f64) {
        self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.u0), hi.max(p.u0)))
    }

    /// CSV `arclength_index,param,u0,sup_norm,bc_residual,is_fold`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "arclength_index,param,u0,sup_norm,bc_residual,is_fold")?;
        for (i, p) in self.points.iter().enumerate() {
            let fold = self.folds.contains(&i);
            writeln!(out, "{},{:?},{:?},{:?},{:?},{}", i, p.param, p.u0, p.sup_norm, p.bc_residual, fold as u8)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BlowupRow {
    pub lambda: f64,
    pub u0: f64,
    pub sup_norm: f64,
}

#[derive(Clone, Debug)]
pub struct BlowupReport {
    pub rows: Vec<BlowupRow>,
    pub truncated: Option<String>,
}

/// Follows the `λ` branch from `(start_lambda, start_u0)` down to the
/// smallest requested value and reports `‖u_λ‖∞` along the sequence.
pub fn blowup_probe(problem: &Problem, start_lambda: f64, start_u0: f64, lambdas: &[f64]) -> Result<BlowupReport> {
    if lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Domain { what: "lambda sequence > 0", value: lambdas.iter().copied().fold(f64::NAN, f64::min) });
    }
    let min = lambdas.iter().copied().fold(start_lambda, f64::min);
    let max = lambdas.iter().copied().fold(start_lambda, f64::max);
    if min == max {
        let p = problem.with_param(Parameter::Lambda, start_lambda)?;
        let tracer = Tracer { problem: &p, parameter: Parameter::Lambda, width: 1.0 };
        let c = tracer.solve_fixed(start_lambda, start_u0)?;
        let (pt, _) = tracer.point(start_lambda, c, 0.0)?;
        let rows = lambdas.iter().map(|&l| BlowupRow { lambda: l, u0: pt.u0, sup_norm: pt.sup_norm }).collect();
        return Ok(BlowupReport { rows, truncated: None });
    }
    let branch = trace_branch(problem, Parameter::Lambda, start_lambda, start_u0, (min, max), -1.0, &ContinuationOptions {
        ceiling: f64::INFINITY,
        ..Default::default()
    })?;
    let truncated = match &branch.termination {
        Termination::RangeExit => None,
        other => Some(format!("{other:?}")),
    };
    let mut rows = Vec::new();
    for &l in lambdas {
        match branch.solve_at(problem, l) {
            Ok(sols) if !sols.is_empty() => {
                let s = &sols[sols.len() - 1];
                rows.push(BlowupRow { lambda: l, u0: s.u0(), sup_norm: s.sup_norm });
            }
            _ => rows.push(BlowupRow { lambda: l, u0: f64::NAN, sup_norm: f64::NAN }),
        }
    }
    Ok(BlowupReport { rows, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::BoundaryCondition;
    use crate::nonlinearity::Nonlinearity;
    use crate::weight::WeightFunction;

    fn fig1() -> Problem {
        Problem::new(
            WeightFunction::step(&[1.0], &[1.0, -4.0], 2.0).unwrap(),
            Nonlinearity::exp_power(2.0).unwrap(),
            BoundaryCondition::Neumann,
        )
    }

    #[test]
    fn parabola_vertex() {
        let pts: Vec<BranchPoint> = [0.7, 0.9, 1.15, 1.4]
            .iter()
            .map(|&u: &f64| BranchPoint {
                param: (u - 1.0).powi(2),
                u0: u,
                sup_norm: u,
                bc_residual: 0.0,
                weak_residual: 0.0,
                step: 0.1,
            })
            .collect();
        let b = Branch {
            parameter: Parameter::Lambda,
            range: (0.0, 1.0),
            points: pts,
            folds: vec![],
            direction: -1.0,
            termination: Termination::RangeExit,
        };
        let f = detect_folds(&b);
        assert_eq!(f.len(), 1);
        assert!(f[0].0.abs() < 1e-12 && (f[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_lambda_branch() {
        let p = fig1();
        let b = trace_branch(&p, Parameter::Lambda, 3.0, 0.2829, (0.5, 3.0), -1.0, &ContinuationOptions::default()).unwrap();
        assert_eq!(b.termination, Termination::RangeExit);
        assert!(detect_folds(&b).is_empty());
        assert!(b.points.iter().all(|q| q.bc_residual < 1e-9 && q.weak_residual < 1e-6));
        for (l, u) in [(2.0, 0.4074591866), (1.0, 0.6936476186), (0.5, 1.007387157)] {
            let s = b.solve_at(&p, l).unwrap();
            assert_eq!(s.len(), 1);
            assert!((s[0].u0() - u).abs() < 1e-6, "{l}: {}", s[0].u0());
        }
        let last = b.points.last().unwrap();
        assert_eq!(last.param, 0.5);
        for w in b.points.windows(2) {
            let d = (w[1].param - w[0].param) / 2.5;
            assert!(d.hypot(w[1].u0 - w[0].u0) <= 1.5 * w[1].step + 1e-12);
        }
    }

    #[test]
    fn degenerate_nonlinearity_gives_flat_branch() {
        let mut p = fig1();
        p.nonlinearity = Nonlinearity::custom(|_| 0.0, None, None, 0.0);
        let b = trace_branch(&p, Parameter::Lambda, 1.0, 0.7, (0.5, 2.0), 1.0, &ContinuationOptions::default()).unwrap();
        assert_eq!(b.termination, Termination::RangeExit);
        assert!(b.points.iter().all(|q| q.u0 == 0.7));
    }

    #[test]
    fn blowup_constant_lambda() {
        let r = blowup_probe(&fig1(), 1.0, 0.69, &[1.0, 1.0]).unwrap();
        assert_eq!(r.rows[0].sup_norm, r.rows[1].sup_norm);
    }
}
