//! Quadrature and scalar minimization helpers shared by the weight and
//! nonlinearity modules.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Eight-point Gauss–Legendre nodes and weights on [-1, 1].
pub const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Kronrod estimate, error estimate and the same rule applied to `|f|`.
fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut kabs = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        let s = f1 + f2;
        k += WGK[j] * s;
        kabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h, kabs * h.abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel: f64, abs: f64, depth: u32) -> f64 {
    let (k, err, kabs) = kronrod15(f, a, b);
    let noise = 50.0 * f64::EPSILON * kabs;
    if err <= abs.max(rel * k.abs()).max(noise) || depth == 0 || (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
        return k;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, rel, 0.5 * abs, depth - 1) + adapt(f, m, b, rel, 0.5 * abs, depth - 1)
}

/// Adaptive Gauss–Kronrod (7/15) integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel: f64, abs: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    adapt(&f, a, b, rel, abs, 40)
}

/// Fixed eight-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss8<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    GAUSS8.iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// Golden-section minimization of a unimodal function on `[a, b]`,
/// returning `(argmin, min)`. The endpoints are included in the comparison.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let (fa0, fb0) = (f(a), f(b));
    let (a0, b0) = (a, b);
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc < fd { (c, fc) } else { (d, fd) };
    if fa0 < best.1 {
        best = (a0, fa0);
    }
    if fb0 < best.1 {
        best = (b0, fb0);
    }
    best
}

/// Grid scan followed by golden-section refinement around the best grid
/// cell. Suited to continuous functions with finitely many local minima.
pub fn grid_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> (f64, f64) {
    if b <= a {
        return (a, f(a));
    }
    let n = n.max(2);
    let h = (b - a) / (n - 1) as f64;
    let mut best = (a, f(a));
    let mut best_k = 0;
    for k in 1..n {
        let x = if k == n - 1 { b } else { a + h * k as f64 };
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
            best_k = k;
        }
    }
    let lo = if best_k == 0 { a } else { a + h * (best_k - 1) as f64 };
    let hi = if best_k + 1 >= n { b } else { a + h * (best_k + 1) as f64 };
    let refined = golden_min(&f, lo, hi.min(b), 1e-13 * (1.0 + b.abs()));
    if refined.1 < best.1 {
        refined
    } else {
        best
    }
}
