//! Sign-changing weights `a(t)` on `[0, T]`.
//!
//! A [`WeightFunction`] is a finite list of pieces tiling `[0, T]`. Each
//! piece is constant, a smooth closure, or a linearly interpolated sample
//! table. The piecewise structure makes the sign partition decidable and
//! gives the integrator the breakpoints it must not step across.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad;
use crate::roots::{brent, Stop};

/// Grid density used for window minimization and sign detection on
/// non-constant pieces.
pub const GRID_POINTS: usize = 4096;

/// Shared smooth profile `t -> a(t)` evaluated in absolute time.
#[derive(Clone)]
pub struct SmoothFn(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl SmoothFn {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        SmoothFn(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SmoothFn(..)")
    }
}

/// Linear interpolation table; times strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub t: Vec<f64>,
    pub a: Vec<f64>,
}

impl Samples {
    fn eval(&self, t: f64) -> f64 {
        let n = self.t.len();
        if t <= self.t[0] {
            return self.a[0];
        }
        if t >= self.t[n - 1] {
            return self.a[n - 1];
        }
        let k = self.t.partition_point(|&x| x <= t) - 1;
        let w = (t - self.t[k]) / (self.t[k + 1] - self.t[k]);
        self.a[k] + w * (self.a[k + 1] - self.a[k])
    }

    /// Exact integral of the interpolant over `[lo, hi]`.
    fn integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return -self.integral(hi, lo);
        }
        let mut knots = vec![lo];
        knots.extend(self.t.iter().copied().filter(|&x| x > lo && x < hi));
        knots.push(hi);
        knots
            .windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (self.eval(w[0]) + self.eval(w[1])))
            .sum()
    }
}

/// How the weight is represented on one piece.
#[derive(Clone, Debug)]
pub enum Profile {
    Constant(f64),
    Smooth(SmoothFn),
    Sampled(Samples),
}

impl Profile {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Smooth(f) => f.eval(t),
            Profile::Sampled(s) => s.eval(t),
        }
    }

    fn shifted(&self, offset: f64) -> Profile {
        match self {
            Profile::Constant(c) => Profile::Constant(*c),
            Profile::Smooth(f) => {
                let f = f.clone();
                Profile::Smooth(SmoothFn::new(move |t| f.eval(t + offset)))
            }
            Profile::Sampled(s) => Profile::Sampled(Samples {
                t: s.t.iter().map(|x| x - offset).collect(),
                a: s.a.clone(),
            }),
        }
    }

    fn map(&self, g: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static) -> Profile {
        match self {
            Profile::Constant(c) => Profile::Constant(g(*c)),
            Profile::Smooth(f) => {
                let f = f.clone();
                Profile::Smooth(SmoothFn::new(move |t| g(f.eval(t))))
            }
            Profile::Sampled(s) => Profile::Sampled(Samples {
                t: s.t.clone(),
                a: s.a.iter().map(|&x| g(x)).collect(),
            }),
        }
    }
}

/// One tile `[start, end]` of the weight.
#[derive(Clone, Debug)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub profile: Profile,
}

impl Piece {
    pub fn constant(start: f64, end: f64, value: f64) -> Self {
        Piece { start, end, profile: Profile::Constant(value) }
    }

    pub fn smooth<F: Fn(f64) -> f64 + Send + Sync + 'static>(start: f64, end: f64, f: F) -> Self {
        Piece { start, end, profile: Profile::Smooth(SmoothFn::new(f)) }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.profile, Profile::Constant(_))
    }

    fn integral(&self, lo: f64, hi: f64) -> f64 {
        match &self.profile {
            Profile::Constant(c) => c * (hi - lo),
            Profile::Smooth(f) => quad::integrate(|t| f.eval(t), lo, hi, 1e-14, 1e-16),
            Profile::Sampled(s) => s.integral(lo, hi),
        }
    }

    /// Points inside the piece where the sign class (`> 0` versus `<= 0`)
    /// changes, in increasing order.
    fn sign_changes(&self) -> Vec<f64> {
        match &self.profile {
            Profile::Constant(_) => Vec::new(),
            Profile::Sampled(s) => {
                let mut knots = vec![self.start];
                knots.extend(s.t.iter().copied().filter(|&x| x > self.start && x < self.end));
                knots.push(self.end);
                let mut out = Vec::new();
                for w in knots.windows(2) {
                    let (fa, fb) = (s.eval(w[0]), s.eval(w[1]));
                    if (fa > 0.0) != (fb > 0.0) {
                        let r = if fa == fb { w[0] } else { w[0] + fa * (w[1] - w[0]) / (fa - fb) };
                        out.push(r.clamp(w[0], w[1]));
                    }
                }
                out
            }
            Profile::Smooth(f) => {
                let n = GRID_POINTS;
                let h = (self.end - self.start) / n as f64;
                let mut out = Vec::new();
                let mut prev_t = self.start;
                let mut prev = f.eval(prev_t);
                for k in 1..=n {
                    let t = if k == n { self.end } else { self.start + h * k as f64 };
                    let cur = f.eval(t);
                    if (prev > 0.0) != (cur > 0.0) {
                        let stop = Stop { xtol: 1e-14 * (1.0 + t.abs()), max_iter: 200, accept: &|_, fx: f64| fx == 0.0 };
                        let root = brent(|x| Ok(f.eval(x)), prev_t, t, prev, cur, &stop)
                            .map(|r| r.0)
                            .unwrap_or(0.5 * (prev_t + t));
                        out.push(root);
                    }
                    prev_t = t;
                    prev = cur;
                }
                out
            }
        }
    }
}

/// A maximal interval of constant sign class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignSegment {
    pub start: f64,
    pub end: f64,
    pub positive: bool,
}

/// Alternating positivity / negativity decomposition of `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignPartition {
    /// `(σ_i, τ_i)` with `a > 0` a.e. inside.
    pub positivity_intervals: Vec<(f64, f64)>,
    /// Intervals with `a <= 0` a.e. inside.
    pub negativity_intervals: Vec<(f64, f64)>,
    pub segments: Vec<SignSegment>,
}

impl SignPartition {
    pub fn m(&self) -> usize {
        self.positivity_intervals.len()
    }

    /// Index of the positivity interval containing `t`, if any.
    pub fn positivity_index(&self, t: f64) -> Option<usize> {
        self.positivity_intervals.iter().position(|&(s, e)| t >= s && t <= e)
    }
}

/// Piecewise weight `a(t)` on `[0, T]`.
#[derive(Clone, Debug)]
pub struct WeightFunction {
    period: f64,
    pieces: Vec<Piece>,
    /// `A(start_k)` for every piece.
    cumulative: Vec<f64>,
}

impl WeightFunction {
    /// Builds a weight from pieces that tile `[0, T]`.
    pub fn from_pieces(period: f64, pieces: Vec<Piece>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidWeight(format!("period must be positive, got {period}")));
        }
        if pieces.is_empty() {
            return Err(Error::InvalidWeight("no pieces".into()));
        }
        let tol = 1e-12 * period;
        if pieces[0].start.abs() > tol || (pieces[pieces.len() - 1].end - period).abs() > tol {
            return Err(Error::InvalidWeight("pieces must cover [0, T]".into()));
        }
        for (k, p) in pieces.iter().enumerate() {
            if !(p.start < p.end) {
                return Err(Error::InvalidWeight(format!("piece {k} has start >= end")));
            }
            if k > 0 && (p.start - pieces[k - 1].end).abs() > tol {
                return Err(Error::InvalidWeight(format!("gap or overlap before piece {k}")));
            }
            let bounded = match &p.profile {
                Profile::Constant(c) => c.is_finite(),
                Profile::Sampled(s) => {
                    s.t.len() >= 2
                        && s.t.len() == s.a.len()
                        && s.t.windows(2).all(|w| w[0] < w[1])
                        && s.a.iter().all(|x| x.is_finite())
                }
                Profile::Smooth(f) => (0..=64)
                    .map(|j| p.start + (p.end - p.start) * j as f64 / 64.0)
                    .all(|t| f.eval(t).is_finite()),
            };
            if !bounded {
                return Err(Error::InvalidWeight(format!("piece {k} is not a bounded profile")));
            }
        }
        let mut pieces = pieces;
        pieces[0].start = 0.0;
        let last = pieces.len() - 1;
        pieces[last].end = period;
        for k in 1..pieces.len() {
            pieces[k].start = pieces[k - 1].end;
        }
        let mut cumulative = Vec::with_capacity(pieces.len());
        let mut acc = 0.0;
        for p in &pieces {
            cumulative.push(acc);
            acc += p.integral(p.start, p.end);
        }
        Ok(WeightFunction { period, pieces, cumulative })
    }

    /// Piecewise-constant weight: `values[k]` on `[breaks[k-1], breaks[k])`.
    pub fn step(breaks: &[f64], values: &[f64], period: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidWeight("empty values".into()));
        }
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidWeight(format!(
                "expected {} values for {} breaks, got {}",
                breaks.len() + 1,
                breaks.len(),
                values.len()
            )));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidWeight("breaks must be strictly increasing".into()));
        }
        if breaks.iter().any(|&b| !(b > 0.0 && b < period)) {
            return Err(Error::InvalidWeight("breaks must lie inside (0, T)".into()));
        }
        let mut knots = vec![0.0];
        knots.extend_from_slice(breaks);
        knots.push(period);
        let pieces = knots
            .windows(2)
            .zip(values)
            .map(|(w, &v)| Piece::constant(w[0], w[1], v))
            .collect();
        Self::from_pieces(period, pieces)
    }

    /// Single smooth piece on `[0, T]`.
    pub fn smooth<F: Fn(f64) -> f64 + Send + Sync + 'static>(period: f64, f: F) -> Result<Self> {
        Self::from_pieces(period, vec![Piece::smooth(0.0, period, f)])
    }

    /// Sampled weight from a strictly increasing table covering `[0, T]`.
    pub fn sampled(period: f64, t: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t.len() != a.len() {
            return Err(Error::InvalidWeight("sample table needs at least two (t, a) rows".into()));
        }
        if t.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidWeight("sample times must be strictly increasing".into()));
        }
        let tol = 1e-9 * period;
        if t[0].abs() > tol || (t[t.len() - 1] - period).abs() > tol {
            return Err(Error::InvalidWeight("sample times must span [0, T]".into()));
        }
        Self::from_pieces(period, vec![Piece { start: 0.0, end: period, profile: Profile::Sampled(Samples { t, a }) }])
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Index of the piece used at `t` (right-continuous, last piece closed).
    pub fn piece_index(&self, t: f64) -> usize {
        let k = self.pieces.partition_point(|p| p.start <= t);
        k.saturating_sub(1).min(self.pieces.len() - 1)
    }

    /// `a(t)` for `t` in `[0, T]`.
    pub fn value(&self, t: f64) -> f64 {
        let k = self.piece_index(t);
        self.pieces[k].profile.eval(t)
    }

    /// `a(t)` extended by `T`-periodicity.
    pub fn value_periodic(&self, t: f64) -> f64 {
        self.value(t.rem_euclid(self.period))
    }

    /// Antiderivative `A(t) = ∫_0^t a` for `t` in `[0, T]`.
    pub fn antiderivative(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.period);
        let k = self.piece_index(t);
        let p = &self.pieces[k];
        self.cumulative[k] + p.integral(p.start, t)
    }

    /// `∫_lo^hi a` for `lo, hi` in `[0, T]`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        self.antiderivative(hi) - self.antiderivative(lo)
    }

    /// `∫_0^T a(t) dt`.
    pub fn mean_value(&self) -> f64 {
        let last = self.pieces.len() - 1;
        let p = &self.pieces[last];
        self.cumulative[last] + p.integral(p.start, p.end)
    }

    /// Alternating sign decomposition; zero stretches join the negativity
    /// class.
    pub fn sign_partition(&self) -> Result<SignPartition> {
        let mut raw: Vec<SignSegment> = Vec::new();
        for p in &self.pieces {
            let mut knots = vec![p.start];
            knots.extend(p.sign_changes());
            knots.push(p.end);
            for w in knots.windows(2) {
                if w[1] - w[0] <= 1e-14 * self.period {
                    continue;
                }
                let mid = 0.5 * (w[0] + w[1]);
                let positive = p.profile.eval(mid) > 0.0;
                match raw.last_mut() {
                    Some(last) if last.positive == positive => last.end = w[1],
                    _ => raw.push(SignSegment { start: w[0], end: w[1], positive }),
                }
            }
        }
        if let Some(first) = raw.first_mut() {
            first.start = 0.0;
        }
        for k in 1..raw.len() {
            raw[k].start = raw[k - 1].end;
        }
        let positivity_intervals: Vec<_> = raw.iter().filter(|s| s.positive).map(|s| (s.start, s.end)).collect();
        if positivity_intervals.is_empty() {
            return Err(Error::NoPositivityInterval);
        }
        let negativity_intervals = raw.iter().filter(|s| !s.positive).map(|s| (s.start, s.end)).collect();
        Ok(SignPartition { positivity_intervals, negativity_intervals, segments: raw })
    }

    /// Every point the integrator must land on: piece boundaries and sign
    /// changes, including `0` and `T`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.pieces.iter().map(|p| p.start).collect();
        pts.push(self.period);
        for p in &self.pieces {
            pts.extend(p.sign_changes());
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * self.period);
        pts
    }

    /// `‖a‖_{L¹(0,T)}`.
    pub fn l1_norm(&self) -> f64 {
        match self.sign_partition() {
            Ok(part) => part.segments.iter().map(|s| self.integral(s.start, s.end).abs()).sum(),
            // a <= 0 everywhere: no sign change inside, |∫a| is the norm
            Err(_) => self.mean_value().abs(),
        }
    }

    /// Essential supremum of the negative part `a⁻ = -min{a, 0}`.
    pub fn neg_sup_norm(&self) -> f64 {
        let mut best: f64 = 0.0;
        for p in &self.pieces {
            let v = match &p.profile {
                Profile::Constant(c) => -c,
                Profile::Sampled(s) => {
                    let inner = s.t.iter().zip(&s.a).filter(|(t, _)| **t >= p.start && **t <= p.end).map(|(_, a)| -a);
                    inner.chain([-s.eval(p.start), -s.eval(p.end)]).fold(f64::NEG_INFINITY, f64::max)
                }
                Profile::Smooth(f) => -quad::grid_min(|t| f.eval(t), p.start, p.end, GRID_POINTS + 1).1,
            };
            best = best.max(v);
        }
        best
    }

    fn check_index(&self, part: &SignPartition, i: usize) -> Result<(f64, f64)> {
        if i == 0 || i > part.m() {
            return Err(Error::IndexOutOfRange { index: i, count: part.m() });
        }
        Ok(part.positivity_intervals[i - 1])
    }

    /// `γ_i(δ)`: smallest mass of `a` over windows of length `δ` inside the
    /// `i`-th positivity interval (1-based).
    pub fn gamma(&self, i: usize, delta: f64) -> Result<f64> {
        let part = self.sign_partition()?;
        self.gamma_in(&part, i, delta)
    }

    pub(crate) fn gamma_in(&self, part: &SignPartition, i: usize, delta: f64) -> Result<f64> {
        let (sigma, tau) = self.check_index(part, i)?;
        let cap = (tau - sigma) / 4.0;
        if !(delta >= 0.0 && delta <= cap * (1.0 + 1e-12)) {
            return Err(Error::WindowOutOfRange { delta, max: cap });
        }
        let delta = delta.min(cap);
        if delta == 0.0 {
            return Ok(0.0);
        }
        let window = |t: f64| self.antiderivative(t) - self.antiderivative(t - delta);
        Ok(quad::grid_min(window, sigma + delta, tau, GRID_POINTS).1)
    }

    /// `A_i`: minimum of `∫ a` over subwindows of length `(τ_i - σ_i)/4`.
    pub fn window_min_l1(&self, i: usize) -> Result<f64> {
        let part = self.sign_partition()?;
        let (sigma, tau) = self.check_index(&part, i)?;
        self.gamma_in(&part, i, (tau - sigma) / 4.0)
    }

    /// Indicator of the union of the positivity intervals, as a step weight.
    pub fn positivity_indicator(&self) -> Result<WeightFunction> {
        let part = self.sign_partition()?;
        let pieces = part
            .segments
            .iter()
            .map(|s| Piece::constant(s.start, s.end, if s.positive { 1.0 } else { 0.0 }))
            .collect();
        WeightFunction::from_pieces(self.period, pieces)
    }

    /// `b(t) = a((t + shift) mod T)`.
    pub fn rotated(&self, shift: f64) -> Result<WeightFunction> {
        let shift = shift.rem_euclid(self.period);
        if shift == 0.0 {
            return Ok(self.clone());
        }
        let mut pieces = Vec::new();
        // [shift, T] moves to [0, T - shift]
        for p in &self.pieces {
            let (lo, hi) = (p.start.max(shift), p.end);
            if hi - lo > 1e-14 * self.period {
                pieces.push(Piece { start: lo - shift, end: hi - shift, profile: p.profile.shifted(shift) });
            }
        }
        // [0, shift] moves to [T - shift, T]
        let back = self.period - shift;
        for p in &self.pieces {
            let (lo, hi) = (p.start, p.end.min(shift));
            if hi - lo > 1e-14 * self.period {
                pieces.push(Piece { start: lo + back, end: hi + back, profile: p.profile.shifted(-back) });
            }
        }
        WeightFunction::from_pieces(self.period, pieces)
    }

    /// Time shift making the weight positive right after `0` and
    /// non-positive right before `T`, as assumed for periodic problems.
    /// Returns the rotated weight and the applied shift.
    pub fn normalize_periodic(&self) -> Result<(WeightFunction, f64)> {
        let part = self.sign_partition()?;
        if part.negativity_intervals.is_empty() {
            return Err(Error::InvalidWeight("periodic normalization needs a negativity interval".into()));
        }
        let first = part.segments[0];
        let last = part.segments[part.segments.len() - 1];
        let shift = if first.positive && !last.positive {
            return Ok((self.clone(), 0.0));
        } else if !first.positive {
            first.end
        } else {
            // positive at both ends: start at the last positivity interval
            last.start
        };
        Ok((self.rotated(shift)?, shift))
    }

    /// `λ a(t)`.
    pub fn scaled(&self, factor: f64) -> Result<WeightFunction> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece { start: p.start, end: p.end, profile: p.profile.map(move |x| factor * x) })
            .collect();
        WeightFunction::from_pieces(self.period, pieces)
    }

    /// Weight with its negative part multiplied by `factor`.
    pub fn scaled_negative_part(&self, factor: f64) -> Result<WeightFunction> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                start: p.start,
                end: p.end,
                profile: p.profile.map(move |x| if x < 0.0 { factor * x } else { x }),
            })
            .collect();
        WeightFunction::from_pieces(self.period, pieces)
    }
}

/// Same as [`WeightFunction::step`].
pub fn build_step_weight(breaks: &[f64], values: &[f64], period: f64) -> Result<WeightFunction> {
    WeightFunction::step(breaks, values, period)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> WeightFunction {
        build_step_weight(&[1.0], &[1.0, -10.0], 2.0).unwrap()
    }

    #[test]
    fn step_weight_values() {
        let w = fig1();
        assert_eq!(w.value(0.5), 1.0);
        assert_eq!(w.value(1.0), -10.0);
        assert_eq!(w.value(2.0), -10.0);
        assert_eq!(w.value_periodic(2.5), 1.0);
        let c = build_step_weight(&[], &[-1.0], 1.0).unwrap();
        assert_eq!(c.value(0.3), -1.0);
    }

    #[test]
    fn step_weight_rejects_bad_input() {
        assert!(build_step_weight(&[1.0, 0.5], &[1.0, 2.0, 3.0], 2.0).is_err());
        assert!(build_step_weight(&[], &[], 2.0).is_err());
        assert!(build_step_weight(&[1.0], &[1.0], 2.0).is_err());
        assert!(build_step_weight(&[2.5], &[1.0, 2.0], 2.0).is_err());
    }

    #[test]
    fn fig1_partition() {
        let p = fig1().sign_partition().unwrap();
        assert_eq!(p.m(), 1);
        assert_eq!(p.positivity_intervals, vec![(0.0, 1.0)]);
        assert_eq!(p.negativity_intervals, vec![(1.0, 2.0)]);
    }

    #[test]
    fn positive_constant_partition() {
        let w = build_step_weight(&[], &[1.0], 1.0).unwrap();
        let p = w.sign_partition().unwrap();
        assert_eq!(p.positivity_intervals, vec![(0.0, 1.0)]);
        assert!(p.negativity_intervals.is_empty());
    }

    #[test]
    fn zero_piece_joins_negativity() {
        let w = build_step_weight(&[1.0, 2.0, 3.0, 4.0], &[-1.0, 2.0, 0.0, 3.0, -1.0], 5.0).unwrap();
        let p = w.sign_partition().unwrap();
        assert_eq!(p.m(), 2);
        assert_eq!(p.positivity_intervals, vec![(1.0, 2.0), (3.0, 4.0)]);
        assert_eq!(p.negativity_intervals, vec![(0.0, 1.0), (2.0, 3.0), (4.0, 5.0)]);
    }

    #[test]
    fn no_positivity_is_an_error() {
        let w = build_step_weight(&[], &[-1.0], 1.0).unwrap();
        assert_eq!(w.sign_partition(), Err(Error::NoPositivityInterval));
    }

    #[test]
    fn mean_values() {
        assert_eq!(fig1().mean_value(), -9.0);
        assert_eq!(build_step_weight(&[], &[0.0], 3.0).unwrap().mean_value(), 0.0);
        assert_eq!(build_step_weight(&[1.0], &[2.0, -1.0], 4.0).unwrap().mean_value(), -1.0);
    }

    #[test]
    fn window_constants_for_step_weight() {
        let w = fig1();
        assert!((w.window_min_l1(1).unwrap() - 0.25).abs() < 1e-12);
        assert!((w.gamma(1, 0.25).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(w.gamma(1, 0.0).unwrap(), 0.0);
        assert!(w.gamma(1, 0.3).is_err());
        assert!(w.window_min_l1(2).is_err());
        let c = build_step_weight(&[], &[3.0], 2.0).unwrap();
        assert!((c.window_min_l1(1).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn linear_weight_windows() {
        // a(t) = t on [0, 1]
        let w = WeightFunction::smooth(1.0, |t| t).unwrap();
        let p = w.sign_partition().unwrap();
        assert_eq!(p.positivity_intervals.len(), 1);
        assert!((w.window_min_l1(1).unwrap() - 1.0 / 32.0).abs() < 1e-10);
        assert!((w.gamma(1, 0.125).unwrap() - 1.0 / 128.0).abs() < 1e-10);
    }

    #[test]
    fn neg_sup_norms() {
        assert_eq!(fig1().neg_sup_norm(), 10.0);
        assert_eq!(build_step_weight(&[], &[2.0], 1.0).unwrap().neg_sup_norm(), 0.0);
        assert_eq!(build_step_weight(&[1.0, 2.0], &[-3.0, 1.0, -7.0], 3.0).unwrap().neg_sup_norm(), 7.0);
        let s = WeightFunction::smooth(1.0, |t| (2.0 * std::f64::consts::PI * t).sin()).unwrap();
        assert!((s.neg_sup_norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn periodic_normalization() {
        let (w, s) = fig1().normalize_periodic().unwrap();
        assert_eq!(s, 0.0);
        assert_eq!(w.value(0.5), 1.0);
        let w = build_step_weight(&[1.0, 3.0], &[-10.0, 1.0, -10.0], 4.0).unwrap();
        let (n, s) = w.normalize_periodic().unwrap();
        assert_eq!(s, 1.0);
        let p = n.sign_partition().unwrap();
        assert_eq!(p.positivity_intervals, vec![(0.0, 2.0)]);
        assert_eq!(n.value(3.5), -10.0);
        let w = build_step_weight(&[1.0, 3.0], &[1.0, -10.0, 1.0], 4.0).unwrap();
        let (n, s) = w.normalize_periodic().unwrap();
        assert_eq!(s, 3.0);
        assert_eq!(n.sign_partition().unwrap().positivity_intervals, vec![(0.0, 2.0)]);
        assert!((n.mean_value() - w.mean_value()).abs() < 1e-12);
    }

    #[test]
    fn sampled_weight() {
        let w = WeightFunction::sampled(2.0, vec![0.0, 1.0, 2.0], vec![1.0, -1.0, -1.0]).unwrap();
        assert!((w.mean_value() - (-1.0)).abs() < 1e-14);
        let p = w.sign_partition().unwrap();
        assert_eq!(p.positivity_intervals.len(), 1);
        assert!((p.positivity_intervals[0].1 - 0.5).abs() < 1e-14);
        assert!(WeightFunction::sampled(2.0, vec![0.0, 1.0, 0.5], vec![1.0; 3]).is_err());
    }

    #[test]
    fn l1_norm_and_indicator() {
        let w = fig1();
        assert_eq!(w.l1_norm(), 11.0);
        let ind = w.positivity_indicator().unwrap();
        assert_eq!(ind.value(0.5), 1.0);
        assert_eq!(ind.value(1.5), 0.0);
        assert_eq!(ind.mean_value(), 1.0);
    }
}
