//! Weighted empirical measures on the half-line and distances between them.
//!
//! Distances between two empirical measures only need ordered-field
//! arithmetic and are exact for rational inputs. Distances to a continuous
//! law integrate `|F_emp - F|` piecewise between atoms, splitting at the
//! crossing point where the law's CDF passes through the empirical level.

use num_traits::Float;

use crate::error::{domain, Result};
use crate::quadrature;
use crate::scalar::{Real, Scalar};

#[derive(Clone, Debug, PartialEq)]
enum Weights<T> {
    Uniform(T),
    Explicit(Vec<T>),
}

/// Probability measure with finitely many atoms on `[0, ∞)`, stored sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure<T> {
    points: Vec<T>,
    weights: Weights<T>,
}

impl<T: Scalar> EmpiricalMeasure<T> {
    pub fn new(points: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if points.is_empty() {
            return domain("empirical measure needs at least one atom");
        }
        if points.len() != weights.len() {
            return domain(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            ));
        }
        check_points(&points)?;
        if let Some(w) = weights.iter().find(|w| !(**w >= T::zero())) {
            return domain(format!("negative or undefined weight {w:?}"));
        }
        let total = weights.iter().fold(T::zero(), |acc, &w| acc + w);
        if (total - T::one()).magnitude() > T::weight_slack() {
            return domain(format!("weights sum to {total:?}, not 1"));
        }
        let mut pairs: Vec<(T, T)> = points.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("points are ordered"));
        let (points, weights) = pairs.into_iter().unzip();
        Ok(Self {
            points,
            weights: Weights::Explicit(weights),
        })
    }

    /// Equal-weight measure over the given samples.
    pub fn uniform(mut points: Vec<T>) -> Result<Self> {
        if points.is_empty() {
            return domain("empirical measure needs at least one atom");
        }
        check_points(&points)?;
        points.sort_by(|a, b| a.partial_cmp(b).expect("points are ordered"));
        let w = T::one() / T::from_count(points.len());
        Ok(Self {
            points,
            weights: Weights::Uniform(w),
        })
    }

    pub fn point_mass(x: T) -> Result<Self> {
        Self::uniform(vec![x])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weight(&self, i: usize) -> T {
        match &self.weights {
            Weights::Uniform(w) => *w,
            Weights::Explicit(ws) => ws[i],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.points
            .iter()
            .enumerate()
            .map(move |(i, &x)| (x, self.weight(i)))
    }

    /// Integral of `f` against the measure.
    pub fn expect(&self, f: impl Fn(T) -> T) -> T {
        self.iter().fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }

    pub fn mean(&self) -> T {
        self.expect(|x| x)
    }

    pub fn min(&self) -> T {
        self.points[0]
    }

    pub fn max(&self) -> T {
        self.points[self.points.len() - 1]
    }
}

impl<T: Real> EmpiricalMeasure<T> {
    pub fn cdf(&self, x: T) -> T {
        let k = self.points.partition_point(|&p| p <= x);
        match &self.weights {
            Weights::Uniform(w) => *w * T::from_count(k),
            Weights::Explicit(ws) => ws[..k].iter().fold(T::zero(), |a, &w| a + w),
        }
    }

    /// Left-continuous generalized inverse of the CDF.
    pub fn quantile(&self, p: T) -> T {
        let mut acc = T::zero();
        for (x, w) in self.iter() {
            acc = acc + w;
            if acc >= p {
                return x;
            }
        }
        self.max()
    }
}

fn check_points<T: Scalar>(points: &[T]) -> Result<()> {
    match points.iter().find(|x| !(**x >= T::zero())) {
        Some(x) => domain(format!("atom {x:?} is not on the half-line [0, inf)")),
        None => Ok(()),
    }
}

/// Walks the merged atoms of two measures, yielding `(x, F_a(x), F_b(x))`
/// once per distinct location.
fn merged_cdfs<T: Scalar>(
    a: &EmpiricalMeasure<T>,
    b: &EmpiricalMeasure<T>,
) -> Vec<(T, T, T)> {
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (T::zero(), T::zero());
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        let x = match (a.points.get(i), b.points.get(j)) {
            (Some(&p), Some(&q)) => {
                if q < p {
                    q
                } else {
                    p
                }
            }
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a.points[i] == x {
            fa = fa + a.weight(i);
            i += 1;
        }
        while j < b.len() && b.points[j] == x {
            fb = fb + b.weight(j);
            j += 1;
        }
        out.push((x, fa, fb));
    }
    out
}

/// Wasserstein-1 distance on the line, `∫ |F_a - F_b|`.
pub fn w1<T: Scalar>(a: &EmpiricalMeasure<T>, b: &EmpiricalMeasure<T>) -> T {
    let steps = merged_cdfs(a, b);
    steps
        .windows(2)
        .fold(T::zero(), |acc, pair| {
            let (x0, fa, fb) = pair[0];
            acc + (fa - fb).magnitude() * (pair[1].0 - x0)
        })
}

/// Kolmogorov-Smirnov distance, `sup |F_a - F_b|`.
pub fn ks<T: Scalar>(a: &EmpiricalMeasure<T>, b: &EmpiricalMeasure<T>) -> T {
    merged_cdfs(a, b)
        .into_iter()
        .fold(T::zero(), |acc, (_, fa, fb)| acc.larger((fa - fb).magnitude()))
}

/// Wasserstein-1 distance for the bounded ground metric `min(1, |x - y|)`.
///
/// Solved through the dual: maximize `Σ (a_k - b_k) f_k` over `f` with values
/// in `[0, 1]` and `|f_{k+1} - f_k| <= x_{k+1} - x_k`. The value function of
/// that chain is concave and piecewise linear in the last coordinate, so it
/// is carried exactly as a breakpoint list. Quadratic in the atom count.
pub fn w1_truncated<T: Scalar>(a: &EmpiricalMeasure<T>, b: &EmpiricalMeasure<T>) -> T {
    let steps = merged_cdfs(a, b);
    let mut prev = (T::zero(), T::zero());
    let mut value: Vec<(T, T)> = Vec::new();
    for (k, &(x, fa, fb)) in steps.iter().enumerate() {
        let w = (fa - prev.0) - (fb - prev.1);
        prev = (fa, fb);
        if k == 0 {
            value = vec![(T::zero(), T::zero()), (T::one(), T::zero())];
        } else {
            let gap = x - steps[k - 1].0;
            value = window_max(&value, gap);
        }
        for bp in &mut value {
            bp.1 = bp.1 + w * bp.0;
        }
    }
    value
        .iter()
        .fold(value[0].1, |acc, &(_, v)| acc.larger(v))
}

/// `U(f) = max { V(g) : |g - f| <= gap, g in [0, 1] }` for concave
/// piecewise-linear `V` on `[0, 1]`.
fn window_max<T: Scalar>(v: &[(T, T)], gap: T) -> Vec<(T, T)> {
    let (star, &(xs, vs)) = v
        .iter()
        .enumerate()
        .fold((0, &v[0]), |best, (k, bp)| if bp.1 > best.1 .1 { (k, bp) } else { best });
    let mut shifted: Vec<(T, T)> = Vec::with_capacity(v.len() + 2);
    shifted.extend(v[..star].iter().map(|&(x, y)| (x - gap, y)));
    shifted.push((xs - gap, vs));
    shifted.push((xs + gap, vs));
    shifted.extend(v[star + 1..].iter().map(|&(x, y)| (x + gap, y)));
    clip_unit(&shifted)
}

fn clip_unit<T: Scalar>(v: &[(T, T)]) -> Vec<(T, T)> {
    let eval = |t: T| -> T {
        if t <= v[0].0 {
            return v[0].1;
        }
        for pair in v.windows(2) {
            let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
            if t <= x1 {
                if x1 == x0 {
                    return y1;
                }
                return y0 + (y1 - y0) * (t - x0) / (x1 - x0);
            }
        }
        v[v.len() - 1].1
    };
    let (lo, hi) = (T::zero(), T::one());
    let mut out = vec![(lo, eval(lo))];
    out.extend(v.iter().copied().filter(|&(x, _)| x > lo && x < hi));
    out.push((hi, eval(hi)));
    out.dedup_by(|b, a| a.0 == b.0);
    out
}

/// A law on `[0, ∞)` known through its CDF.
pub trait ContinuousLaw<T: Real> {
    fn cdf(&self, x: T) -> T;

    /// A point beyond which `1 - F` is negligible at double precision.
    fn support_cutoff(&self) -> T;

    /// `∫_a^b F(s) ds`.
    fn cdf_integral(&self, a: T, b: T) -> T {
        quadrature::integrate(|s| self.cdf(s), a, b, T::lit(1e-13))
    }

    /// `∫_a^∞ (1 - F(s)) ds`.
    fn tail_integral(&self, a: T) -> T {
        let hi = self.support_cutoff();
        if a >= hi {
            return T::zero();
        }
        quadrature::integrate_panels(|s| T::one() - self.cdf(s), a, hi, 64, T::lit(1e-13))
    }
}

/// A law given by a CDF closure, integrated numerically.
pub struct CdfFn<F, T> {
    pub cdf: F,
    pub cutoff: T,
}

impl<T: Real, F: Fn(T) -> T> ContinuousLaw<T> for CdfFn<F, T> {
    fn cdf(&self, x: T) -> T {
        (self.cdf)(x)
    }
    fn support_cutoff(&self) -> T {
        self.cutoff
    }
}

/// Wasserstein-1 distance between an empirical measure and a continuous law.
pub fn w1_to_law<T: Real, L: ContinuousLaw<T> + ?Sized>(a: &EmpiricalMeasure<T>, law: &L) -> T {
    let mut total = law.cdf_integral(T::zero(), a.min());
    let mut level = T::zero();
    let n = a.len();
    for k in 0..n {
        level = level + a.weight(k);
        if k + 1 == n {
            break;
        }
        let (lo, hi) = (a.points[k], a.points[k + 1]);
        if hi > lo {
            total = total + interval_gap(law, level, lo, hi);
        }
    }
    total + law.tail_integral(a.max())
}

/// `∫_lo^hi |c - F|` for monotone `F`.
fn interval_gap<T: Real, L: ContinuousLaw<T> + ?Sized>(law: &L, c: T, lo: T, hi: T) -> T {
    let (f_lo, f_hi) = (law.cdf(lo), law.cdf(hi));
    let width = hi - lo;
    if f_lo >= c {
        return Float::max(law.cdf_integral(lo, hi) - c * width, T::zero());
    }
    if f_hi <= c {
        return Float::max(c * width - law.cdf_integral(lo, hi), T::zero());
    }
    let (mut l, mut r) = (lo, hi);
    for _ in 0..200 {
        let m = T::lit(0.5) * (l + r);
        if m <= l || m >= r {
            break;
        }
        if law.cdf(m) < c {
            l = m;
        } else {
            r = m;
        }
    }
    let s = T::lit(0.5) * (l + r);
    Float::max(c * (s - lo) - law.cdf_integral(lo, s), T::zero())
        + Float::max(law.cdf_integral(s, hi) - c * (hi - s), T::zero())
}

/// Kolmogorov-Smirnov distance between an empirical measure and a continuous law.
pub fn ks_to_law<T: Real, L: ContinuousLaw<T> + ?Sized>(a: &EmpiricalMeasure<T>, law: &L) -> T {
    let mut before = T::zero();
    let mut sup = T::zero();
    for (x, w) in a.iter() {
        let f = law.cdf(x);
        let after = before + w;
        sup = Float::max(sup, Float::max(Float::abs(f - before), Float::abs(f - after)));
        before = after;
    }
    sup
}
