#![allow(dead_code)]

use minkbvp::bvp::{BoundaryCondition, Problem};
use minkbvp::{Nonlinearity, WeightFunction};
use rand::Rng;

pub fn catalogue() -> Vec<Nonlinearity> {
    vec![
        Nonlinearity::power(2.0).unwrap(),
        Nonlinearity::power(3.0).unwrap(),
        Nonlinearity::exp_power(2.0).unwrap(),
        Nonlinearity::power_exp(2.0, 1.0).unwrap(),
        Nonlinearity::power_exp(2.0, 10.0).unwrap(),
    ]
}

pub fn fig_weight(neg: f64) -> WeightFunction {
    WeightFunction::step(&[1.0], &[1.0, neg], 2.0).unwrap()
}

pub fn fig1_problem(neg: f64) -> Problem {
    Problem::new(fig_weight(neg), Nonlinearity::exp_power(2.0).unwrap(), BoundaryCondition::Neumann)
}

/// Step weight with `pieces` pieces on `[0, T]`, at least one positive value
/// and mean of the requested sign.
pub fn random_step_weight<R: Rng>(rng: &mut R, negative_mean: bool) -> WeightFunction {
    loop {
        let period = rng.gen_range(1.0..4.0);
        let pieces = rng.gen_range(2..=5);
        let mut breaks: Vec<f64> = (0..pieces - 1).map(|_| rng.gen_range(0.05..0.95) * period).collect();
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if breaks.windows(2).any(|w| w[1] - w[0] < 0.02 * period) {
            continue;
        }
        let mut values: Vec<f64> = (0..pieces).map(|_| rng.gen_range(-10.0..5.0)).collect();
        if values.iter().all(|&v| v <= 0.0) {
            values[rng.gen_range(0..pieces)] = rng.gen_range(0.5..5.0);
        }
        let Ok(w) = WeightFunction::step(&breaks, &values, period) else { continue };
        let mean = w.mean_value();
        if negative_mean && mean < -1e-3 {
            return w;
        }
        if !negative_mean && mean >= 0.0 && w.neg_sup_norm() > 0.0 {
            return w;
        }
        if !negative_mean && mean < 0.0 {
            let shift = -mean + rng.gen_range(0.0..0.5);
            let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
            if shifted.iter().any(|&v| v < 0.0) {
                if let Ok(w) = WeightFunction::step(&breaks, &shifted, period) {
                    if w.mean_value() >= 0.0 {
                        return w;
                    }
                }
            }
        }
    }
}

/// Trigonometric weight `c₀ + Σ c_k sin(2πkt/T + φ_k)` negative at `t = 0`.
pub fn random_smooth_weight<R: Rng>(rng: &mut R) -> (f64, Box<dyn Fn(f64) -> f64 + Send + Sync>) {
    loop {
        let period = rng.gen_range(1.0..4.0);
        let c0 = rng.gen_range(-0.5..0.3);
        let terms: Vec<(f64, f64)> =
            (1..=3).map(|_| (rng.gen_range(-1.5..1.5), rng.gen_range(0.0..std::f64::consts::TAU))).collect();
        let f = move |t: f64| {
            c0 + terms
                .iter()
                .enumerate()
                .map(|(k, (c, ph))| c * (std::f64::consts::TAU * (k + 1) as f64 * t / period + ph).sin())
                .sum::<f64>()
        };
        if f(0.0) < -0.1 {
            let n = 2000;
            let pos = (0..n).filter(|&i| f(period * i as f64 / n as f64) > 0.0).count();
            if pos > 50 {
                return (period, Box::new(f));
            }
        }
    }
}

/// Brute-force positivity intervals of `f` on `[0, T]` from `n` samples with
/// bisection refinement; assumes `f(0) < 0`.
pub fn brute_positivity(f: &dyn Fn(f64) -> f64, period: f64, n: usize) -> Vec<(f64, f64)> {
    let refine = |mut a: f64, mut b: f64| {
        let up = f(b) > 0.0;
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if (f(m) > 0.0) == up {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    };
    let mut out = Vec::new();
    let mut start = None;
    let h = period / n as f64;
    for i in 1..=n {
        let (t0, t1) = ((i - 1) as f64 * h, i as f64 * h);
        let (p0, p1) = (f(t0) > 0.0, f(t1) > 0.0);
        if !p0 && p1 {
            start = Some(refine(t0, t1));
        }
        if p0 && !p1 {
            if let Some(s) = start.take() {
                out.push((s, refine(t0, t1)));
            }
        }
    }
    out
}

/// `min over t ∈ [σ+δ, τ]` of `∫_{t-δ}^t f`, from a midpoint-rule
/// antiderivative on `n` cells; `f` is never sampled at `σ` or `τ`.
pub fn brute_window_min(f: &dyn Fn(f64) -> f64, sigma: f64, tau: f64, delta: f64, n: usize) -> f64 {
    let h = (tau - sigma) / n as f64;
    let mut cum = vec![0.0; n + 1];
    for i in 1..=n {
        cum[i] = cum[i - 1] + h * f(sigma + (i as f64 - 0.5) * h);
    }
    let at = |t: f64| {
        let x = ((t - sigma) / h).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n - 1);
        let frac = x - i as f64;
        cum[i] + frac * h * f(sigma + (i as f64 + 0.5 * frac) * h)
    };
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let t = sigma + i as f64 * h;
        if t < sigma + delta - 1e-15 {
            continue;
        }
        best = best.min(cum[i] - at(t - delta));
    }
    best.min(cum[n] - at(tau - delta))
}

/// Degree of `-f#` on `(-r, r)` by walking a sign table on a grid that
/// avoids `0`.
pub fn sign_table_degree(w: &WeightFunction, n: &Nonlinearity, r: f64) -> i32 {
    let total = w.integral(0.0, w.period());
    let minus_f_sharp = |s: f64| if s >= 0.0 { -n.g(s) * total } else { s };
    let m = 1001;
    let pts: Vec<f64> = (0..m).map(|k| -r + 2.0 * r * (k as f64 + 0.5) / m as f64).collect();
    let mut signs: Vec<i32> = vec![minus_f_sharp(-r).signum() as i32];
    signs.extend(pts.iter().map(|&s| {
        let v = minus_f_sharp(s);
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    }));
    signs.push(minus_f_sharp(r).signum() as i32);
    let nonzero: Vec<i32> = signs.into_iter().filter(|&s| s != 0).collect();
    nonzero.windows(2).map(|p| (p[1] - p[0]) / 2).sum()
}
