//! Nonlinearities `g(u)` on `[0, ∞)`, their primitives, and numeric probes
//! of the growth hypotheses at zero and at infinity.
//!
//! Values that overflow `f64` are handled through [`Nonlinearity::log_g`]
//! and [`Nonlinearity::log_big_g`]. The latter never uses an asymptotic
//! expansion: it integrates `exp(log g(s) - log g(u))`, which is bounded by
//! one for monotone `g`, and adds `log g(u)` back.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad;
use crate::weight::WeightFunction;

/// Upper end of the tail sampled by [`Nonlinearity::check_se_condition`].
pub const SE_TAIL_UMAX: f64 = 1000.0;

/// Above this `κu` the series for the `u^p e^{κu}` primitive is replaced by
/// integration by parts (integer `p`) or the scaled quadrature.
const SERIES_LIMIT: f64 = 40.0;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonlinearityKind {
    /// `u^p`
    Power,
    /// `e^{u^p} - 1`
    ExpPower,
    /// `u^p e^{κu}`
    PowerExp,
    Custom,
}

impl NonlinearityKind {
    pub fn name(self) -> &'static str {
        match self {
            NonlinearityKind::Power => "power",
            NonlinearityKind::ExpPower => "exp_power",
            NonlinearityKind::PowerExp => "power_exp",
            NonlinearityKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "power" => Some(NonlinearityKind::Power),
            "exp_power" => Some(NonlinearityKind::ExpPower),
            "power_exp" => Some(NonlinearityKind::PowerExp),
            _ => None,
        }
    }
}

#[derive(Clone)]
struct CustomFns {
    g: ScalarFn,
    g_prime: Option<ScalarFn>,
    big_g: Option<ScalarFn>,
}

/// A nonlinearity `scale · g(u)`.
#[derive(Clone)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    p: f64,
    kappa: f64,
    scale: f64,
    r_hat: f64,
    custom: Option<CustomFns>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("kind", &self.kind)
            .field("p", &self.p)
            .field("kappa", &self.kappa)
            .field("scale", &self.scale)
            .field("r_hat", &self.r_hat)
            .finish()
    }
}

/// Result of the probes at `u → 0⁺`.
#[derive(Clone, Debug)]
pub struct ZeroDiagnostic {
    /// `(u, g(u)/u)` on `u = 10⁻¹ … 10⁻⁸`.
    pub q_tail: Vec<(f64, f64)>,
    /// `(u, wide, narrow)`: `sup |g(ωu)/g(u) - 1|` over `ω ∈ [0.9, 1.1]`
    /// and `ω ∈ [0.99, 1.01]`.
    pub oscillation_tail: Vec<(f64, f64, f64)>,
    pub superlinear: bool,
    pub regular_oscillation: bool,
    pub pass: bool,
}

/// Tail estimates of `g/G` and `g'/g`.
#[derive(Clone, Copy, Debug)]
pub struct GrowthTail {
    /// Minimum of `g/G` over the last sampled decade.
    pub g_over_big_g: f64,
    /// Minimum of `g'/g` over the last sampled decade.
    pub log_derivative: f64,
    /// `g/G` and `g'/g` at `u_max`.
    pub at_end: (f64, f64),
    /// Whether `g'/g` is still increasing at the end of the tail.
    pub increasing: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SeCheck {
    /// `‖a⁻‖∞ / min_i A_i`
    pub threshold: f64,
    pub estimate: f64,
    pub derivative_estimate: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct NonexistenceDiagnostic {
    pub eta: f64,
    /// `sup |g'|/g^η` over the last sampled decade.
    pub limsup_estimate: f64,
    /// Growth factor of `|g'|/g^η` across the last decade.
    pub decade_growth: f64,
    /// The bounded-ratio condition appears to hold.
    pub holds: bool,
}

fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

impl Nonlinearity {
    /// Catalogue nonlinearity; `scale` multiplies `g` (defaults to 1).
    pub fn make_builtin(kind: NonlinearityKind, p: f64, kappa: Option<f64>, scale: Option<f64>) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidNonlinearity(format!("p must exceed 1, got {p}")));
        }
        let scale = scale.unwrap_or(1.0);
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidNonlinearity(format!("scale must be positive, got {scale}")));
        }
        let kappa = match kind {
            NonlinearityKind::PowerExp => match kappa {
                Some(k) if k.is_finite() && k > 0.0 => k,
                Some(k) => return Err(Error::InvalidNonlinearity(format!("kappa must be positive, got {k}"))),
                None => return Err(Error::InvalidNonlinearity("power_exp requires kappa".into())),
            },
            NonlinearityKind::Custom => {
                return Err(Error::InvalidNonlinearity("use Nonlinearity::custom".into()));
            }
            _ => 0.0,
        };
        Ok(Nonlinearity { kind, p, kappa, scale, r_hat: 0.0, custom: None })
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::make_builtin(NonlinearityKind::Power, p, None, None)
    }

    pub fn exp_power(p: f64) -> Result<Self> {
        Self::make_builtin(NonlinearityKind::ExpPower, p, None, None)
    }

    pub fn power_exp(p: f64, kappa: f64) -> Result<Self> {
        Self::make_builtin(NonlinearityKind::PowerExp, p, Some(kappa), None)
    }

    /// User-supplied `g` with optional derivative and primitive. `r_hat` is
    /// the point beyond which `g` is non-decreasing.
    pub fn custom<G>(g: G, g_prime: Option<ScalarFn>, big_g: Option<ScalarFn>, r_hat: f64) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Nonlinearity {
            kind: NonlinearityKind::Custom,
            p: f64::NAN,
            kappa: f64::NAN,
            scale: 1.0,
            r_hat,
            custom: Some(CustomFns { g: Arc::new(g), g_prime, big_g }),
        }
    }

    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn kappa(&self) -> Option<f64> {
        (self.kind == NonlinearityKind::PowerExp).then_some(self.kappa)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn r_hat(&self) -> f64 {
        self.r_hat
    }

    /// Copy with a different `κ` (only meaningful for `power_exp`).
    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::make_builtin(self.kind, self.p, Some(kappa), Some(self.scale))
    }

    /// Copy with `g` multiplied by `scale`.
    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        let mut out = self.clone();
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidNonlinearity(format!("scale must be positive, got {scale}")));
        }
        out.scale = scale;
        Ok(out)
    }

    /// `g(u)`; zero for `u <= 0` on builtins.
    #[inline]
    pub fn g(&self, u: f64) -> f64 {
        if let Some(c) = &self.custom {
            return self.scale * (c.g)(u);
        }
        if u <= 0.0 {
            return 0.0;
        }
        let base = match self.kind {
            NonlinearityKind::Power => u.powf(self.p),
            NonlinearityKind::ExpPower => u.powf(self.p).exp_m1(),
            NonlinearityKind::PowerExp => u.powf(self.p) * (self.kappa * u).exp(),
            NonlinearityKind::Custom => unreachable!(),
        };
        self.scale * base
    }

    /// `g'(u)`: closed form, user derivative, or central differences.
    pub fn g_prime(&self, u: f64) -> f64 {
        if let Some(c) = &self.custom {
            if let Some(gp) = &c.g_prime {
                return self.scale * gp(u);
            }
            let h = 1e-6 * u.abs().max(1.0);
            let lo = (u - h).max(0.0);
            return self.scale * ((c.g)(u + h) - (c.g)(lo)) / (u + h - lo);
        }
        if u <= 0.0 {
            return 0.0;
        }
        let p = self.p;
        let base = match self.kind {
            NonlinearityKind::Power => p * u.powf(p - 1.0),
            NonlinearityKind::ExpPower => p * u.powf(p - 1.0) * u.powf(p).exp(),
            NonlinearityKind::PowerExp => (self.kappa * u.powf(p) + p * u.powf(p - 1.0)) * (self.kappa * u).exp(),
            NonlinearityKind::Custom => unreachable!(),
        };
        self.scale * base
    }

    /// `ln g(u)`, finite beyond the `f64` overflow threshold of `g`.
    pub fn log_g(&self, u: f64) -> f64 {
        if self.custom.is_some() {
            return self.g(u).ln();
        }
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let p = self.p;
        let base = match self.kind {
            NonlinearityKind::Power => p * u.ln(),
            NonlinearityKind::ExpPower => {
                let up = u.powf(p);
                up + (-(-up).exp_m1()).ln()
            }
            NonlinearityKind::PowerExp => p * u.ln() + self.kappa * u,
            NonlinearityKind::Custom => unreachable!(),
        };
        self.scale.ln() + base
    }

    /// `g'(u) / g(u)` evaluated without forming either factor.
    pub fn log_derivative(&self, u: f64) -> f64 {
        if self.custom.is_some() {
            let (g, gp) = (self.g(u), self.g_prime(u));
            if g.is_finite() && gp.is_finite() && g > 0.0 {
                return gp / g;
            }
            let h = 1e-6 * u.abs().max(1.0);
            return (self.log_g(u + h) - self.log_g(u - h)) / (2.0 * h);
        }
        let p = self.p;
        match self.kind {
            NonlinearityKind::Power => p / u,
            NonlinearityKind::ExpPower => {
                let up = u.powf(p);
                p * u.powf(p - 1.0) / (-(-up).exp_m1())
            }
            NonlinearityKind::PowerExp => p / u + self.kappa,
            NonlinearityKind::Custom => unreachable!(),
        }
    }

    /// Primitive `G(u) = ∫_0^u g`, with relative accuracy about `1e-10`.
    pub fn big_g(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::Domain { what: "G", value: u });
        }
        Ok(self.big_g_unchecked(u))
    }

    fn big_g_unchecked(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        if let Some(c) = &self.custom {
            if let Some(gg) = &c.big_g {
                return self.scale * gg(u);
            }
            return self.scale * quad::integrate(|s| (c.g)(s), 0.0, u, 1e-13, 0.0);
        }
        let p = self.p;
        let base = match self.kind {
            NonlinearityKind::Power => u.powf(p + 1.0) / (p + 1.0),
            NonlinearityKind::ExpPower => {
                if u.powf(p) > 700.0 {
                    return self.log_big_g(u).exp();
                }
                quad::integrate(|s| s.powf(p).exp_m1(), 0.0, u, 1e-13, 0.0)
            }
            NonlinearityKind::PowerExp => {
                let ku = self.kappa * u;
                if ku <= SERIES_LIMIT {
                    power_exp_series(p, self.kappa, u)
                } else if p.fract() == 0.0 && p <= 8.0 {
                    power_exp_by_parts(p as u32, self.kappa, u)
                } else {
                    return self.log_big_g(u).exp();
                }
            }
            NonlinearityKind::Custom => unreachable!(),
        };
        self.scale * base
    }

    /// `ln G(u)`.
    pub fn log_big_g(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let direct_ok = match self.kind {
            NonlinearityKind::ExpPower => u.powf(self.p) <= 700.0,
            NonlinearityKind::PowerExp => {
                self.kappa * u <= SERIES_LIMIT || (self.p.fract() == 0.0 && self.p <= 8.0 && self.kappa * u <= 700.0)
            }
            _ => true,
        };
        if direct_ok {
            let g = self.big_g_unchecked(u);
            if g.is_finite() && g > 0.0 && g < 1e300 {
                return g.ln();
            }
        }
        self.log_g(u) + self.scaled_tail_integral(u).ln()
    }

    /// `ln G(u)` through the scaled quadrature regardless of magnitude.
    pub fn log_big_g_by_quadrature(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.log_g(u) + self.scaled_tail_integral(u).ln()
    }

    /// `∫_0^u exp(ln g(s) - ln g(u)) ds`, marched leftward from `u` in
    /// doubling windows until the integrand is negligible.
    fn scaled_tail_integral(&self, u: f64) -> f64 {
        let lu = self.log_g(u);
        let slope = self.log_derivative(u).abs().max(1e-3);
        let mut width = (1.0 / slope).min(u);
        let mut hi = u;
        let mut total = 0.0;
        let floor = 1e-16 * width;
        // The exponent difference carries rounding of order ε·|ln g(u)|.
        let rel = 1e-13f64.max(64.0 * f64::EPSILON * lu.abs());
        loop {
            let lo = (hi - width).max(0.0);
            let piece = quad::integrate(|s| (self.log_g(s) - lu).exp(), lo, hi, rel, floor);
            total += piece;
            if lo == 0.0 {
                break;
            }
            let edge = (self.log_g(lo) - lu).exp();
            if piece <= 1e-18 * total && edge * lo <= 1e-18 * total {
                break;
            }
            hi = lo;
            width *= 2.0;
        }
        total
    }

    /// `g(u) / G(u)`, through logarithms when either factor overflows.
    pub fn g_over_big_g(&self, u: f64) -> f64 {
        let g = self.g(u);
        let gg = self.big_g_unchecked(u);
        if g.is_finite() && gg.is_finite() && gg > 0.0 && g > 0.0 && gg < 1e300 {
            return g / gg;
        }
        (self.log_g(u) - self.log_big_g(u)).exp()
    }

    /// `q(u) = g(u)/u` with `q(0) = 0`.
    pub fn q(&self, u: f64) -> f64 {
        if u == 0.0 {
            0.0
        } else {
            self.g(u) / u
        }
    }

    /// Superlinearity and regular oscillation at zero.
    pub fn check_zero_conditions(&self) -> ZeroDiagnostic {
        let us: Vec<f64> = (1..=8).map(|k| 10f64.powi(-k)).collect();
        let q_tail: Vec<(f64, f64)> = us.iter().map(|&u| (u, self.q(u))).collect();
        let first = q_tail[0].1;
        let last = q_tail[q_tail.len() - 1].1;
        let monotone = q_tail.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9));
        let superlinear = monotone && last.is_finite() && last < 0.5 * first;

        let probe = |u: f64, eta: f64| {
            let gu = self.g(u);
            (0..21)
                .map(|j| {
                    let omega = 1.0 - eta + 2.0 * eta * j as f64 / 20.0;
                    (self.g(omega * u) / gu - 1.0).abs()
                })
                .fold(0.0, f64::max)
        };
        let oscillation_tail: Vec<(f64, f64, f64)> = us.iter().map(|&u| (u, probe(u, 0.1), probe(u, 0.01))).collect();
        let regular_oscillation = oscillation_tail[5..]
            .iter()
            .all(|&(_, wide, narrow)| wide.is_finite() && wide <= 1.0 && narrow <= 0.5 * wide.max(1e-300));
        ZeroDiagnostic { q_tail, oscillation_tail, superlinear, regular_oscillation, pass: superlinear && regular_oscillation }
    }

    /// Liminf estimates of `g/G` and `g'/g` from a geometric grid on
    /// `[u_max/100, u_max]`: the minimum over the last decade.
    pub fn growth_ratio_tail(&self, u_max: f64) -> Result<GrowthTail> {
        if !(u_max >= 10.0) {
            return Err(Error::Domain { what: "growth_ratio_tail (u_max >= 10)", value: u_max });
        }
        let grid = geometric_grid(u_max / 100.0, u_max, 201);
        let tail = &grid[100..];
        let ratios: Vec<f64> = tail.iter().map(|&u| self.g_over_big_g(u)).collect();
        let derivs: Vec<f64> = tail.iter().map(|&u| self.log_derivative(u)).collect();
        let n = derivs.len();
        Ok(GrowthTail {
            g_over_big_g: ratios.iter().copied().fold(f64::INFINITY, f64::min),
            log_derivative: derivs.iter().copied().fold(f64::INFINITY, f64::min),
            at_end: (ratios[n - 1], derivs[n - 1]),
            increasing: derivs[n - 1] > derivs[n - 2],
        })
    }

    /// Compares the tail of `g/G` with `K = ‖a⁻‖∞ / min_i A_i`.
    pub fn check_se_condition(&self, w: &WeightFunction) -> Result<SeCheck> {
        let threshold = se_threshold(w)?;
        let tail = self.growth_ratio_tail(SE_TAIL_UMAX)?;
        let margin = tail.g_over_big_g - threshold;
        Ok(SeCheck {
            threshold,
            estimate: tail.g_over_big_g,
            derivative_estimate: tail.log_derivative,
            margin,
            pass: margin > 0.0,
        })
    }

    /// Probe of `limsup |g'|/g^η < ∞` on `[10, 1000]`.
    pub fn check_nonexistence_condition(&self, eta: f64) -> Result<NonexistenceDiagnostic> {
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::Domain { what: "eta in [0, 1)", value: eta });
        }
        let grid = geometric_grid(10.0, 1000.0, 201);
        let log_ratio = |u: f64| self.log_derivative(u).abs().ln() + (1.0 - eta) * self.log_g(u);
        let tail: Vec<f64> = grid[100..].iter().map(|&u| log_ratio(u)).collect();
        let limsup = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let decade_growth = (tail[tail.len() - 1] - tail[0]).exp();
        Ok(NonexistenceDiagnostic {
            eta,
            limsup_estimate: limsup.exp(),
            decade_growth,
            holds: limsup.is_finite() && decade_growth <= 1.05,
        })
    }

    /// Largest relative mismatch between a central difference of `G` and
    /// `g` over the given points.
    pub fn primitive_consistency(&self, points: &[f64]) -> f64 {
        points
            .iter()
            .map(|&u| {
                let h = 1e-5 * u.max(1e-3);
                let d = (self.big_g_unchecked(u + h) - self.big_g_unchecked(u - h)) / (2.0 * h);
                let g = self.g(u);
                (d - g).abs() / g.abs().max(1e-300)
            })
            .fold(0.0, f64::max)
    }
}

/// `K = ‖a⁻‖∞ / min_i A_i`.
pub fn se_threshold(w: &WeightFunction) -> Result<f64> {
    let part = w.sign_partition()?;
    let mut min_a = f64::INFINITY;
    for i in 1..=part.m() {
        min_a = min_a.min(w.window_min_l1(i)?);
    }
    Ok(w.neg_sup_norm() / min_a)
}

/// `∫_0^u s^p e^{κs} ds = Σ κⁿ u^{p+n+1} / (n! (p+n+1))`, all terms positive.
fn power_exp_series(p: f64, kappa: f64, u: f64) -> f64 {
    let x = kappa * u;
    let mut term = 1.0; // xⁿ / n!
    let mut sum = 0.0;
    let mut n = 0.0;
    loop {
        let add = term / (p + n + 1.0);
        sum += add;
        if add < 1e-17 * sum && n > x {
            break;
        }
        n += 1.0;
        term *= x / n;
    }
    u.powf(p + 1.0) * sum
}

/// Integration by parts for integer `p`.
fn power_exp_by_parts(p: u32, kappa: f64, u: f64) -> f64 {
    let mut acc = 0.0;
    let mut coef = 1.0; // p!/(p-k)!
    for k in 0..=p {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * coef * u.powi((p - k) as i32) / kappa.powi(k as i32 + 1);
        coef *= (p - k) as f64;
    }
    let fact: f64 = (1..=p).map(|j| j as f64).product();
    let tail = if p % 2 == 0 { fact } else { -fact } / kappa.powi(p as i32 + 1);
    acc * (kappa * u).exp() - tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn builtin_values() {
        let n = Nonlinearity::power(2.0).unwrap();
        assert_eq!(n.g(3.0), 9.0);
        assert!((n.big_g(3.0).unwrap() - 9.0).abs() < 1e-12);
        let n = Nonlinearity::exp_power(2.0).unwrap();
        assert!((n.g(1.0) - (E - 1.0)).abs() < 1e-12);
        let n = Nonlinearity::power_exp(2.0, 1.0).unwrap();
        assert!((n.g(1.0) - E).abs() < 1e-12);
        assert!((n.big_g(1.0).unwrap() - (E - 2.0)).abs() < 1e-13);
        let n = Nonlinearity::power(3.0).unwrap();
        assert_eq!(n.big_g(2.0).unwrap(), 4.0);
    }

    #[test]
    fn rejects_linear_and_missing_kappa() {
        assert!(Nonlinearity::power(1.0).is_err());
        assert!(Nonlinearity::exp_power(0.5).is_err());
        assert!(Nonlinearity::make_builtin(NonlinearityKind::PowerExp, 2.0, None, None).is_err());
        assert!(Nonlinearity::power(2.0).unwrap().big_g(-1.0).is_err());
    }

    #[test]
    fn primitive_at_zero() {
        for n in [
            Nonlinearity::power(2.5).unwrap(),
            Nonlinearity::exp_power(2.0).unwrap(),
            Nonlinearity::power_exp(2.0, 3.0).unwrap(),
        ] {
            assert_eq!(n.big_g(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn series_and_parts_agree_at_switch() {
        for &(p, k) in &[(2u32, 1.0), (3, 5.0), (2, 45.0)] {
            let u = SERIES_LIMIT / k;
            let a = power_exp_series(p as f64, k, u);
            let b = power_exp_by_parts(p, k, u);
            assert!((a - b).abs() <= 1e-12 * a, "{p} {k}: {a} vs {b}");
        }
    }

    #[test]
    fn log_domain_matches_direct() {
        for n in [
            Nonlinearity::exp_power(2.0).unwrap(),
            Nonlinearity::power_exp(2.0, 5.0).unwrap(),
            Nonlinearity::power_exp(2.5, 1.0).unwrap(),
        ] {
            for &u in &[0.5, 2.0, 5.0, 10.0, 20.0] {
                let g = n.big_g(u).unwrap();
                if !g.is_finite() || g > 1e300 {
                    continue;
                }
                let scaled = n.log_g(u) + n.scaled_tail_integral(u).ln();
                assert!((scaled - g.ln()).abs() <= 1e-10 * g.ln().abs().max(1.0), "{n:?} u={u}");
                assert!((n.log_g(u) - n.g(u).ln()).abs() <= 1e-12 * n.g(u).ln().abs().max(1.0));
            }
        }
    }

    #[test]
    fn zero_conditions() {
        let d = Nonlinearity::power(2.0).unwrap().check_zero_conditions();
        assert!(d.pass);
        let at = d.q_tail.iter().find(|(u, _)| (*u - 1e-4).abs() < 1e-18).unwrap();
        assert!((at.1 - 1e-4).abs() < 1e-16);
        let wide = d.oscillation_tail[3].1;
        assert!(wide <= 0.21 + 1e-12);
        assert!(Nonlinearity::exp_power(2.0).unwrap().check_zero_conditions().pass);
        let lin = Nonlinearity::custom(|u| u, None, None, 0.0).check_zero_conditions();
        assert!(!lin.pass && !lin.superlinear);
    }

    #[test]
    fn growth_tails() {
        let t = Nonlinearity::power_exp(2.0, 5.0).unwrap().growth_ratio_tail(200.0).unwrap();
        assert!((t.g_over_big_g - 5.0).abs() < 0.05);
        assert!((t.log_derivative - 5.0).abs() < 0.05);
        let t = Nonlinearity::power(2.0).unwrap().growth_ratio_tail(1e6).unwrap();
        assert!((t.g_over_big_g - 3e-6).abs() < 1e-9);
        let t = Nonlinearity::exp_power(2.0).unwrap().growth_ratio_tail(50.0).unwrap();
        assert!((t.at_end.1 - 100.0).abs() < 1e-6);
        assert!(t.increasing && t.log_derivative >= 10.0 - 1e-9);
        assert!(Nonlinearity::power(2.0).unwrap().growth_ratio_tail(5.0).is_err());
    }

    #[test]
    fn nonexistence_probe() {
        let d = Nonlinearity::power(2.0).unwrap().check_nonexistence_condition(0.5).unwrap();
        assert!(d.holds && (d.limsup_estimate - 2.0).abs() < 1e-9);
        let d = Nonlinearity::exp_power(2.0).unwrap().check_nonexistence_condition(0.5).unwrap();
        assert!(!d.holds);
        let lin = Nonlinearity::custom(|u| u, Some(Arc::new(|_| 1.0)), None, 0.0);
        assert!(lin.check_nonexistence_condition(0.0).unwrap().holds);
        assert!(lin.check_nonexistence_condition(1.0).is_err());
    }

    #[test]
    fn custom_primitive_by_quadrature() {
        let n = Nonlinearity::custom(|u: f64| u * u, None, None, 0.0);
        assert!((n.big_g(3.0).unwrap() - 9.0).abs() < 1e-11);
        assert!(n.primitive_consistency(&[0.5, 1.0, 2.0]) < 1e-6);
    }
}
