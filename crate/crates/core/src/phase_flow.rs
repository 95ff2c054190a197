//! The equation as a first-order system in `(u, v)` with `v = φ(u')`:
//!
//! ```text
//! u' = φ⁻¹(v),   v' = -θ [f(t, u) + α w(t)],
//! f(t, u) = λ a(t) g(u) for u >= 0,   f(t, u) = -u for u < 0.
//! ```
//!
//! Integration uses the Dormand–Prince 5(4) pair with its continuous
//! extension. Every piece boundary and sign change of the weight is a node,
//! so no step ever straddles a discontinuity of the vector field.

use std::io::Write;

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::weight::WeightFunction;

/// `φ(s) = s / √(1 - s²)`.
pub fn phi(s: f64) -> Result<f64> {
    if !(s.abs() < 1.0) {
        return Err(Error::Domain { what: "phi", value: s });
    }
    Ok(s / ((1.0 - s) * (1.0 + s)).sqrt())
}

/// Largest `f64` below one.
pub const SLOPE_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

/// `φ⁻¹(v) = v / √(1 + v²)`, clamped to `±SLOPE_MAX` so that the result
/// stays strictly inside `(-1, 1)` even when it rounds to one.
#[inline]
pub fn phi_inv(v: f64) -> f64 {
    (v / 1f64.hypot(v)).clamp(-SLOPE_MAX, SLOPE_MAX)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseState {
    pub u: f64,
    /// Momentum `φ(u')`.
    pub v: f64,
}

impl PhaseState {
    pub fn new(u: f64, v: f64) -> Self {
        PhaseState { u, v }
    }

    pub fn slope(&self) -> f64 {
        phi_inv(self.v)
    }
}

/// Vector-field scaling `θ`, forcing strength `α` and weight multiplier `λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomotopyParams {
    pub theta: f64,
    pub alpha: f64,
    pub lambda: f64,
}

impl HomotopyParams {
    pub fn new(theta: f64, alpha: f64, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Domain { what: "theta in [0, 1]", value: theta });
        }
        if !(alpha >= 0.0) {
            return Err(Error::Domain { what: "alpha >= 0", value: alpha });
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain { what: "lambda > 0", value: lambda });
        }
        Ok(HomotopyParams { theta, alpha, lambda })
    }

    pub fn with_lambda(lambda: f64) -> Result<Self> {
        Self::new(1.0, 0.0, lambda)
    }
}

impl Default for HomotopyParams {
    fn default() -> Self {
        HomotopyParams { theta: 1.0, alpha: 0.0, lambda: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rel: 1e-10, abs: 1e-12 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowOptions {
    pub tol: Tolerances,
    /// Upper bound on `|h|`; `None` means only breakpoints limit the step.
    pub max_step: Option<f64>,
    /// Fixed step (rounded down so that breakpoints are hit exactly);
    /// disables error control.
    pub fixed_step: Option<f64>,
    /// Extend the weight periodically outside `[0, T]`.
    pub periodic: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { tol: Tolerances::default(), max_step: None, fixed_step: None, periodic: false }
    }
}

impl FlowOptions {
    pub fn with_tol(rel: f64, abs: f64) -> Self {
        FlowOptions { tol: Tolerances { rel, abs }, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest normalized local error estimate among accepted steps.
    pub max_error: f64,
}

/// One accepted step and its interpolation coefficients.
#[derive(Clone, Copy, Debug)]
struct DenseStep {
    t0: f64,
    h: f64,
    r: [[f64; 2]; 5],
}

impl DenseStep {
    fn lo(&self) -> f64 {
        self.t0.min(self.t0 + self.h)
    }

    fn eval(&self, t: f64) -> [f64; 2] {
        let th = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let r = &self.r;
        let mut y = [0.0; 2];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

/// An integrated solution with nodes in increasing time and a dense
/// interpolant on `[t_start, t_end]`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    nodes: Vec<(f64, PhaseState)>,
    steps: Vec<DenseStep>,
    pub stats: Stats,
}

impl Trajectory {
    pub fn nodes(&self) -> &[(f64, PhaseState)] {
        &self.nodes
    }

    pub fn t_start(&self) -> f64 {
        self.nodes[0].0
    }

    pub fn t_end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].0
    }

    pub fn first(&self) -> PhaseState {
        self.nodes[0].1
    }

    pub fn last(&self) -> PhaseState {
        self.nodes[self.nodes.len() - 1].1
    }

    /// Dense-output state at `t`, clamped to the covered interval.
    pub fn eval(&self, t: f64) -> PhaseState {
        if self.steps.is_empty() {
            return self.nodes[0].1;
        }
        let t = t.clamp(self.t_start(), self.t_end());
        let k = self.steps.partition_point(|s| s.lo() <= t).saturating_sub(1);
        let y = self.steps[k].eval(t);
        PhaseState { u: y[0], v: y[1] }
    }

    /// `n + 1` uniform samples from `t_start` to `t_end`.
    pub fn samples(&self, n: usize) -> Vec<(f64, PhaseState)> {
        let n = n.max(1);
        let (a, b) = (self.t_start(), self.t_end());
        (0..=n)
            .map(|k| {
                let t = if k == n { b } else { a + (b - a) * k as f64 / n as f64 };
                (t, self.eval(t))
            })
            .collect()
    }

    /// `(max u, argmax)` over nodes and dense samples inside each step.
    pub fn max_u(&self) -> (f64, f64) {
        self.scan(|s| s.u)
    }

    pub fn min_u(&self) -> f64 {
        -self.scan(|s| -s.u).0
    }

    pub fn sup_norm(&self) -> f64 {
        self.scan(|s| s.u.abs()).0
    }

    pub fn max_abs_v(&self) -> f64 {
        self.scan(|s| s.v.abs()).0
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.scan(|s| s.slope().abs()).0
    }

    fn scan(&self, f: impl Fn(&PhaseState) -> f64) -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, self.t_start());
        for &(t, s) in &self.nodes {
            let x = f(&s);
            if x > best.0 {
                best = (x, t);
            }
        }
        for st in &self.steps {
            for k in 1..8 {
                let t = st.t0 + st.h * k as f64 / 8.0;
                let y = st.eval(t);
                let x = f(&PhaseState { u: y[0], v: y[1] });
                if x > best.0 {
                    best = (x, t);
                }
            }
        }
        best
    }

    /// Copy with `u` shifted by `du` everywhere; a perturbed candidate for
    /// certificate checks.
    pub fn shifted(&self, du: f64) -> Trajectory {
        let mut out = self.clone();
        for (_, s) in &mut out.nodes {
            s.u += du;
        }
        for st in &mut out.steps {
            st.r[0][0] += du;
        }
        out
    }

    /// Copy with time translated by `dt`.
    pub fn translated(&self, dt: f64) -> Trajectory {
        let mut out = self.clone();
        for (t, _) in &mut out.nodes {
            *t += dt;
        }
        for st in &mut out.steps {
            st.t0 += dt;
        }
        out
    }

    /// Concatenates a trajectory ending at time `t` with one starting there.
    pub fn join(left: &Trajectory, right: &Trajectory) -> Trajectory {
        let mut nodes = left.nodes.clone();
        nodes.extend_from_slice(&right.nodes[1..]);
        let mut steps = left.steps.clone();
        steps.extend_from_slice(&right.steps);
        let stats = Stats {
            accepted: left.stats.accepted + right.stats.accepted,
            rejected: left.stats.rejected + right.stats.rejected,
            evaluations: left.stats.evaluations + right.stats.evaluations,
            max_error: left.stats.max_error.max(right.stats.max_error),
        };
        Trajectory { nodes, steps, stats }
    }

    /// CSV `t,u,uprime,v` on `n + 1` uniform samples.
    pub fn write_csv<W: Write>(&self, mut out: W, n: usize) -> Result<()> {
        writeln!(out, "t,u,uprime,v")?;
        for (t, s) in self.samples(n) {
            writeln!(out, "{:?},{:?},{:?},{:?}", t, s.u, s.slope(), s.v)?;
        }
        Ok(())
    }
}

/// First integral `√(1+v²) + λ a G(u)` on a piece where `a ≡ a_const` and
/// `α = 0`. For `u < 0` the extension `-u` gives `√(1+v²) - u²/2`.
pub fn energy(s: PhaseState, n: &Nonlinearity, a_const: f64, lambda: f64) -> f64 {
    let kinetic = 1f64.hypot(s.v);
    if s.u < 0.0 {
        return kinetic - 0.5 * s.u * s.u;
    }
    kinetic + lambda * a_const * n.big_g(s.u).unwrap_or(f64::NAN)
}

/// Stretch of time on which the vector field is smooth.
struct Segment<'a> {
    start: f64,
    end: f64,
    offset: f64,
    a: &'a crate::weight::Profile,
    forcing: f64,
}

fn build_segments<'a>(
    w: &'a WeightFunction,
    forcing: Option<&WeightFunction>,
    t0: f64,
    t1: f64,
    periodic: bool,
) -> Result<Vec<Segment<'a>>> {
    let period = w.period();
    let (lo, hi) = (t0.min(t1), t0.max(t1));
    let slack = 1e-12 * period;
    if !periodic && (lo < -slack || hi > period + slack) {
        return Err(Error::InvalidSpan { t0, t1, reason: format!("outside [0, {period}] without periodic extension") });
    }
    let mut base = w.breakpoints();
    if let Some(f) = forcing {
        base.extend(f.breakpoints());
        base.sort_by(|a, b| a.partial_cmp(b).unwrap());
        base.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * period);
    }
    let k_lo = if periodic { (lo / period).floor() as i64 } else { 0 };
    let k_hi = if periodic { (hi / period).ceil() as i64 } else { 1 };
    let mut cuts = vec![lo, hi];
    for k in k_lo..k_hi.max(k_lo + 1) {
        let off = k as f64 * period;
        cuts.extend(base.iter().map(|b| b + off).filter(|&x| x > lo && x < hi));
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * period.max(hi - lo));
    if cuts.len() < 2 {
        cuts = vec![lo, hi];
    }
    let mut segs = Vec::with_capacity(cuts.len());
    for c in cuts.windows(2) {
        let mid = 0.5 * (c[0] + c[1]);
        let offset = if periodic { (mid / period).floor() * period } else { 0.0 };
        let local = (mid - offset).clamp(0.0, period);
        let piece = &w.pieces()[w.piece_index(local)];
        let fv = forcing.map_or(0.0, |f| f.value(local));
        segs.push(Segment { start: c[0], end: c[1], offset, a: &piece.profile, forcing: fv });
    }
    if t1 < t0 {
        segs.reverse();
        for s in &mut segs {
            std::mem::swap(&mut s.start, &mut s.end);
        }
    }
    Ok(segs)
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Field<'a> {
    n: &'a Nonlinearity,
    hp: HomotopyParams,
}

impl Field<'_> {
    #[inline]
    fn eval(&self, seg: &Segment, t: f64, y: [f64; 2]) -> [f64; 2] {
        let (u, v) = (y[0], y[1]);
        let f = if u >= 0.0 { self.hp.lambda * seg.a.eval(t - seg.offset) * self.n.g(u) } else { -u };
        [phi_inv(v), -self.hp.theta * (f + self.hp.alpha * seg.forcing)]
    }
}

#[inline]
fn axpy(y: [f64; 2], h: f64, terms: &[(f64, [f64; 2])]) -> [f64; 2] {
    let mut out = y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Integrates from `s0` at `t_span.0` to `t_span.1` (either direction).
pub fn integrate(
    w: &WeightFunction,
    n: &Nonlinearity,
    hp: HomotopyParams,
    forcing: Option<&WeightFunction>,
    s0: PhaseState,
    t_span: (f64, f64),
    opts: &FlowOptions,
) -> Result<Trajectory> {
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(Error::InvalidSpan { t0, t1, reason: "non-finite endpoint".into() });
    }
    if !(opts.tol.rel > 0.0 && opts.tol.abs > 0.0) {
        return Err(Error::InvalidSpan { t0, t1, reason: "tolerances must be positive".into() });
    }
    let mut nodes = vec![(t0, s0)];
    let mut steps = Vec::new();
    let mut stats = Stats::default();
    if t0 == t1 {
        return Ok(Trajectory { nodes, steps, stats });
    }
    let segs = build_segments(w, forcing, t0, t1, opts.periodic)?;
    let field = Field { n, hp };
    let span = (t1 - t0).abs();
    let dir = (t1 - t0).signum();
    let h_max = opts.max_step.unwrap_or(f64::INFINITY);
    let mut y = [s0.u, s0.v];
    let mut h_abs = f64::NAN;

    for seg in &segs {
        let mut t = seg.start;
        let mut k1 = field.eval(seg, t, y);
        stats.evaluations += 1;
        let len = (seg.end - seg.start).abs();
        if len == 0.0 {
            continue;
        }
        let fixed_h = opts.fixed_step.map(|h| {
            let m = (len / h).ceil().max(1.0);
            len / m
        });
        if h_abs.is_nan() {
            h_abs = initial_step(&field, seg, t, y, k1, dir, opts).max(1e-10 * span).min(h_max).min(len);
            stats.evaluations += 1;
        }
        loop {
            let remaining = (seg.end - t).abs();
            if remaining <= 1e-14 * span.max(1.0) * 0.01 {
                break;
            }
            let mut h_try = match fixed_h {
                Some(h) => h.min(remaining),
                None => h_abs.min(h_max).min(remaining),
            };
            let last = h_try >= remaining * (1.0 - 1e-12) || remaining - h_try < 1e-3 * h_try;
            if last {
                h_try = remaining;
            }
            if fixed_h.is_none() && h_try < 1e-14 * span {
                return Err(Error::StepUnderflow { t, h: h_try });
            }
            let h = dir * h_try;
            let k2 = field.eval(seg, t + C2 * h, axpy(y, h, &[(A21, k1)]));
            let k3 = field.eval(seg, t + C3 * h, axpy(y, h, &[(A31, k1), (A32, k2)]));
            let k4 = field.eval(seg, t + C4 * h, axpy(y, h, &[(A41, k1), (A42, k2), (A43, k3)]));
            let k5 = field.eval(seg, t + C5 * h, axpy(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
            let k6 = field.eval(seg, t + h, axpy(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]));
            let y1 = axpy(y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
            let t_new = if last { seg.end } else { t + h };
            let k7 = field.eval(seg, t_new, y1);
            stats.evaluations += 6;
            let finite = y1.iter().chain(k7.iter()).all(|x| x.is_finite());
            let mut err = 0.0;
            if finite {
                for i in 0..2 {
                    let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                    let sc = opts.tol.abs + opts.tol.rel * y[i].abs().max(y1[i].abs());
                    err += (e / sc).powi(2);
                }
                err = (err / 2.0).sqrt();
            }
            if fixed_h.is_none() && (!finite || err > 1.0) {
                if !finite && h_try <= 1e-12 * span {
                    return Err(Error::BlowUp { t_last: t });
                }
                stats.rejected += 1;
                let fac = if finite { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.1 };
                h_abs = h_try * fac;
                if h_abs < 1e-14 * span {
                    return Err(if finite { Error::StepUnderflow { t, h: h_abs } } else { Error::BlowUp { t_last: t } });
                }
                continue;
            }
            if !finite {
                return Err(Error::BlowUp { t_last: t });
            }
            let mut r = [[0.0; 2]; 5];
            for i in 0..2 {
                let dy = y1[i] - y[i];
                let bspl = h * k1[i] - dy;
                r[0][i] = y[i];
                r[1][i] = dy;
                r[2][i] = bspl;
                r[3][i] = dy - h * k7[i] - bspl;
                r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            steps.push(DenseStep { t0: t, h: t_new - t, r });
            stats.accepted += 1;
            stats.max_error = stats.max_error.max(err);
            t = t_new;
            y = y1;
            k1 = k7;
            nodes.push((t, PhaseState { u: y[0], v: y[1] }));
            if fixed_h.is_none() {
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || fac < 1.0 {
                    h_abs = h_try * fac;
                }
            }
            if last {
                break;
            }
        }
    }
    if dir < 0.0 {
        nodes.reverse();
        steps.reverse();
    }
    Ok(Trajectory { nodes, steps, stats })
}

fn initial_step(field: &Field, seg: &Segment, t: f64, y: [f64; 2], f0: [f64; 2], dir: f64, opts: &FlowOptions) -> f64 {
    let sc = |i: usize, yv: [f64; 2]| opts.tol.abs + opts.tol.rel * yv[i].abs();
    let norm = |x: [f64; 2], yv: [f64; 2]| (((x[0] / sc(0, yv)).powi(2) + (x[1] / sc(1, yv)).powi(2)) / 2.0).sqrt();
    let d0 = norm(y, y);
    let d1 = norm(f0, y);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let len = (seg.end - seg.start).abs();
    let h0 = h0.min(len);
    let y1 = axpy(y, dir * h0, &[(1.0, f0)]);
    let f1 = field.eval(seg, t + dir * h0, y1);
    let d2 = norm([f1[0] - f0[0], f1[1] - f0[1]], y) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
    (100.0 * h0).min(h1).min(len)
}

/// Mismatch between the start of `fwd` and the end of the backward run
/// `back`, per component relative to `max(1, sup |component|)` along `fwd`.
pub fn reversal_error(fwd: &Trajectory, back: &Trajectory) -> f64 {
    let (a, b) = (fwd.first(), back.first());
    let su = fwd.sup_norm().max(1.0);
    let sv = fwd.max_abs_v().max(1.0);
    ((a.u - b.u).abs() / su).max((a.v - b.v).abs() / sv)
}

/// Integrates backward from `t_mid` to `t_span.0` and forward to
/// `t_span.1`, returning one trajectory over the whole span.
pub fn integrate_two_sided(
    w: &WeightFunction,
    n: &Nonlinearity,
    hp: HomotopyParams,
    s_mid: PhaseState,
    t_mid: f64,
    t_span: (f64, f64),
    opts: &FlowOptions,
) -> Result<Trajectory> {
    let left = integrate(w, n, hp, None, s_mid, (t_mid, t_span.0), opts)?;
    let right = integrate(w, n, hp, None, s_mid, (t_mid, t_span.1), opts)?;
    Ok(Trajectory::join(&left, &right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn symmetric() -> (WeightFunction, Nonlinearity) {
        (
            WeightFunction::step(&[1.0, 3.0], &[-4.0, 1.0, -4.0], 4.0).unwrap(),
            Nonlinearity::exp_power(2.0).unwrap(),
        )
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi(0.0).unwrap(), 0.0);
        assert!((phi(0.6).unwrap() - 0.75).abs() < 1e-15);
        assert!((phi(-0.8).unwrap() + 4.0 / 3.0).abs() < 1e-15);
        assert!(phi(1.0).is_err() && phi(-1.5).is_err());
        assert!((phi_inv(0.75) - 0.6).abs() < 1e-15);
        assert_eq!(phi_inv(0.0), 0.0);
        let s = phi_inv(1e9);
        assert!(s < 1.0 && s == SLOPE_MAX);
        assert_eq!(phi_inv(-1e200), -SLOPE_MAX);
    }

    #[test]
    fn homotopy_params_validated() {
        assert!(HomotopyParams::new(1.5, 0.0, 1.0).is_err());
        assert!(HomotopyParams::new(0.5, -1.0, 1.0).is_err());
        assert!(HomotopyParams::new(0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn free_motion_is_affine() {
        let w = WeightFunction::step(&[], &[0.0], 1.0).unwrap();
        let n = Nonlinearity::power(2.0).unwrap();
        let tr = integrate(&w, &n, HomotopyParams::default(), None, PhaseState::new(1.0, 0.5), (0.0, 1.0), &FlowOptions::default())
            .unwrap();
        let end = tr.last();
        assert!((end.u - (1.0 + phi_inv(0.5))).abs() < 1e-13);
        assert_eq!(end.v, 0.5);
        let mid = tr.eval(0.37);
        assert!((mid.u - (1.0 + 0.37 * phi_inv(0.5))).abs() < 1e-13);
    }

    #[test]
    fn zero_nonlinearity_keeps_momentum() {
        let w = WeightFunction::step(&[0.5], &[3.0, -2.0], 1.0).unwrap();
        let n = Nonlinearity::custom(|_| 0.0, None, None, 0.0);
        let tr = integrate(&w, &n, HomotopyParams::default(), None, PhaseState::new(2.0, -0.3), (0.0, 1.0), &FlowOptions::default())
            .unwrap();
        assert_eq!(tr.last().v, -0.3);
        assert!((tr.last().u - (2.0 + phi_inv(-0.3))).abs() < 1e-13);
    }

    #[test]
    fn cauchy_member_meets_neumann_condition() {
        let (w, n) = symmetric();
        let tr = integrate(&w, &n, HomotopyParams::default(), None, PhaseState::new(0.693648, 0.0), (2.0, 4.0), &FlowOptions::default())
            .unwrap();
        assert!((tr.last().u - 0.267815).abs() < 5e-4, "{:?}", tr.last());
        assert!(tr.last().v.abs() < 1e-3);
    }

    #[test]
    fn breakpoints_are_nodes() {
        let (w, n) = symmetric();
        let tr = integrate(&w, &n, HomotopyParams::default(), None, PhaseState::new(0.5, 0.0), (0.0, 4.0), &FlowOptions::default())
            .unwrap();
        for b in [0.0, 1.0, 3.0, 4.0] {
            assert!(tr.nodes().iter().any(|(t, _)| *t == b), "{b}");
        }
        assert!(tr.nodes().windows(2).all(|p| p[1].0 > p[0].0));
    }

    #[test]
    fn reversal_and_dense_endpoints() {
        let (w, n) = symmetric();
        let hp = HomotopyParams::default();
        let opts = FlowOptions::default();
        for s0 in [PhaseState::new(0.5, 0.0), PhaseState::new(1.2, 0.3)] {
            let fwd = integrate(&w, &n, hp, None, s0, (0.0, 4.0), &opts).unwrap();
            let back = integrate(&w, &n, hp, None, fwd.last(), (4.0, 0.0), &opts).unwrap();
            assert!(reversal_error(&fwd, &back) < 1e-8);
        }
        let s0 = PhaseState::new(0.5, 0.0);
        let fwd = integrate(&w, &n, hp, None, s0, (0.0, 4.0), &opts).unwrap();
        let back = integrate(&w, &n, hp, None, fwd.last(), (4.0, 0.0), &opts).unwrap();
        let s = back.first();
        assert!((s.u - s0.u).abs() < 1e-8 && (s.v - s0.v).abs() < 1e-8);
        assert_eq!(back.t_start(), 0.0);
        for &(t, st) in fwd.nodes() {
            let d = fwd.eval(t);
            assert!((d.u - st.u).abs() <= 1e-13 * st.u.abs().max(1.0));
        }
    }

    #[test]
    fn energy_conserved_on_constant_piece() {
        let w = WeightFunction::step(&[], &[1.0], 2.0).unwrap();
        let n = Nonlinearity::power(2.0).unwrap();
        assert_eq!(energy(PhaseState::new(0.0, 0.0), &n, 1.0, 1.0), 1.0);
        assert!((energy(PhaseState::new(1.0, 0.0), &n, 1.0, 1.0) - 4.0 / 3.0).abs() < 1e-15);
        let s0 = PhaseState::new(1.5, 0.0);
        let tr = integrate(&w, &n, HomotopyParams::default(), None, s0, (0.0, 2.0), &FlowOptions::default()).unwrap();
        let e0 = energy(s0, &n, 1.0, 1.0);
        for &(_, s) in tr.nodes() {
            assert!((energy(s, &n, 1.0, 1.0) - e0).abs() < 1e-9);
        }
    }

    #[test]
    fn negative_extension_is_harmonic() {
        let w = WeightFunction::step(&[], &[1.0], 1.0).unwrap();
        let n = Nonlinearity::power(2.0).unwrap();
        let s0 = PhaseState::new(-0.1, 0.0);
        let tr = integrate(&w, &n, HomotopyParams::default(), None, s0, (0.0, 1.0), &FlowOptions::default()).unwrap();
        assert!(tr.last().v < 0.0);
        let e0 = energy(s0, &n, 1.0, 1.0);
        assert!((energy(tr.last(), &n, 1.0, 1.0) - e0).abs() < 1e-10);
    }

    #[test]
    fn forcing_and_theta() {
        let w = WeightFunction::step(&[], &[1.0], 1.0).unwrap();
        let ind = w.positivity_indicator().unwrap();
        let n = Nonlinearity::custom(|_| 0.0, None, None, 0.0);
        let hp = HomotopyParams::new(0.5, 2.0, 1.0).unwrap();
        let tr = integrate(&w, &n, hp, Some(&ind), PhaseState::new(1.0, 0.0), (0.0, 1.0), &FlowOptions::default()).unwrap();
        assert!((tr.last().v + 1.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_extension() {
        let w = WeightFunction::step(&[1.0], &[1.0, -10.0], 2.0).unwrap();
        let n = Nonlinearity::power(2.0).unwrap();
        let hp = HomotopyParams::default();
        let s0 = PhaseState::new(0.3, 0.0);
        assert!(integrate(&w, &n, hp, None, s0, (0.0, 4.0), &FlowOptions::default()).is_err());
        let opts = FlowOptions { periodic: true, ..Default::default() };
        let one = integrate(&w, &n, hp, None, s0, (0.0, 2.0), &opts).unwrap();
        let two = integrate(&w, &n, hp, None, s0, (0.0, 4.0), &opts).unwrap();
        let again = integrate(&w, &n, hp, None, one.last(), (0.0, 2.0), &opts).unwrap();
        assert!((two.last().u - again.last().u).abs() < 1e-10);
        assert!(two.nodes().iter().any(|(t, _)| *t == 3.0));
    }

    #[test]
    fn blow_up_reported() {
        let w = WeightFunction::step(&[], &[-1.0], 10.0).unwrap();
        let n = Nonlinearity::custom(|u: f64| (u.powi(4)).exp(), Some(Arc::new(|u: f64| 4.0 * u.powi(3) * u.powi(4).exp())), None, 0.0);
        let r = integrate(&w, &n, HomotopyParams::default(), None, PhaseState::new(3.0, 0.0), (0.0, 10.0), &FlowOptions::default());
        assert!(matches!(r, Err(Error::BlowUp { .. }) | Err(Error::StepUnderflow { .. })), "{r:?}");
    }

    #[test]
    fn csv_header_and_rows() {
        let w = WeightFunction::step(&[], &[0.0], 1.0).unwrap();
        let n = Nonlinearity::power(2.0).unwrap();
        let tr = integrate(&w, &n, HomotopyParams::default(), None, PhaseState::new(0.0, 0.0), (0.0, 1.0), &FlowOptions::default())
            .unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, 4).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,u,uprime,v\n"));
        assert_eq!(s.lines().count(), 6);
    }

    #[test]
    fn two_sided_is_even_for_symmetric_problem() {
        let (w, n) = symmetric();
        let tr = integrate_two_sided(&w, &n, HomotopyParams::default(), PhaseState::new(1.5, 0.0), 2.0, (0.0, 4.0), &FlowOptions::default())
            .unwrap();
        for &t in &[0.0, 0.5, 1.3] {
            assert!((tr.eval(t).u - tr.eval(4.0 - t).u).abs() < 1e-8);
        }
    }
}
