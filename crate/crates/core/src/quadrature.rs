//! Adaptive Gauss-Kronrod (7/15) quadrature.

use num_traits::Float;

use crate::scalar::Real;

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

const MAX_DEPTH: u32 = 30;

fn kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kron = kron + pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[j / 2]);
        }
    }
    (kron * radius, Float::abs((kron - gauss) * radius))
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    if a == b {
        return T::zero();
    }
    if b < a {
        return -integrate(f, b, a, tol);
    }
    recurse(&f, a, b, tol, 0)
}

fn recurse<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T, depth: u32) -> T {
    let (value, err) = kronrod(f, a, b);
    // Past the roundoff floor further splitting only burns time.
    let floor = T::epsilon() * T::lit(100.0) * Float::abs(value);
    let mid = T::lit(0.5) * (a + b);
    if !Float::is_finite(err) || err <= tol || err <= floor || depth >= MAX_DEPTH || mid <= a || mid >= b {
        return value;
    }
    let half_tol = T::lit(0.5) * tol;
    recurse(f, a, mid, half_tol, depth + 1) + recurse(f, mid, b, half_tol, depth + 1)
}

/// Integrates over `[a, b]` split into `panels` equal pieces first; useful when
/// the integrand's mass is concentrated in a small part of a long interval.
pub fn integrate_panels<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, panels: usize, tol: T) -> T {
    let width = (b - a) / T::from_count(panels);
    let panel_tol = tol / T::from_count(panels);
    (0..panels)
        .map(|k| {
            let lo = a + width * T::from_count(k);
            let hi = if k + 1 == panels { b } else { lo + width };
            recurse(&f, lo, hi, panel_tol, 0)
        })
        .fold(T::zero(), |acc, v| acc + v)
}
