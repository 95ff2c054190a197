//! Safeguarded bisection/secant root refinement (Brent's method).

use crate::error::{Error, Result};

/// Stopping rule for [`brent`]: stop when `accept(x, f(x))` holds or the
/// bracket shrinks below `xtol`.
pub struct Stop<'a> {
    pub xtol: f64,
    pub max_iter: usize,
    pub accept: &'a dyn Fn(f64, f64) -> bool,
}

/// Refines a root of `f` inside `[a, b]`, where `f(a)` and `f(b)` have
/// opposite signs. `fa`/`fb` are the already known endpoint values.
pub fn brent<F>(mut f: F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, stop: &Stop) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok((a, fa));
    }
    if fb == 0.0 {
        return Ok((b, fb));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { a, b });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..stop.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * stop.xtol;
        let xm = 0.5 * (c - b);
        if (stop.accept)(b, fb) || xm.abs() <= tol1 || fb == 0.0 {
            return Ok((b, fb));
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
    }
    if (stop.accept)(b, fb) {
        Ok((b, fb))
    } else {
        Err(Error::NoConvergence { iterations: stop.max_iter, residual: fb.abs() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let stop = Stop { xtol: 1e-15, max_iter: 100, accept: &|_, fx: f64| fx.abs() < 1e-15 };
        let (x, _) = brent(|x| Ok(x * x - 2.0), 0.0, 2.0, -2.0, 2.0, &stop).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_missing_sign_change() {
        let stop = Stop { xtol: 1e-12, max_iter: 10, accept: &|_, _| false };
        assert!(brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 2.0, 2.0, &stop).is_err());
    }

    #[test]
    fn handles_steep_exponential() {
        let stop = Stop { xtol: 1e-14, max_iter: 200, accept: &|_, _| false };
        let f = |x: f64| Ok((30.0 * x).exp() - 1e6);
        let (x, _) = brent(f, 0.0, 2.0, f(0.0).unwrap(), f(2.0).unwrap(), &stop).unwrap();
        assert!((x - 1e6f64.ln() / 30.0).abs() < 1e-12);
    }
}
