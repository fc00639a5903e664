//! Closed-form quantities for Brownian motion with drift −1 killed at 0.
//!
//! The quasi-stationary laws form the family
//!
//! ```text
//! π_½(dx) = x e^{-x} dx
//! π_λ(dx) = M_λ e^{-x} sinh(βx) dx,   β = √(1 − 2λ),  M_λ = 2λ/β,   0 < λ < ½
//! ```
//!
//! and a particle started from `π_λ` survives to time `t` with probability
//! exactly `e^{-λt}`. Hitting times from a point are inverse-Gaussian.

use num_traits::Float;
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::measures::ContinuousLaw;
use crate::sampler::Sampler;
use crate::scalar::Real;
use crate::special::{ln_one_minus_exp, log_norm_cdf};

/// Eigenvalue of the minimal quasi-stationary law.
pub const LAMBDA_MIN: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QsdParams<T> {
    lambda: T,
    beta: T,
    norm_const: T,
}

impl<T: Real> QsdParams<T> {
    pub fn new(lambda: T) -> Result<Self> {
        let half = T::lit(0.5);
        if !(lambda > T::zero() && lambda <= half) {
            return domain(format!(
                "no quasi-stationary law with eigenvalue {lambda}: need 0 < lambda <= 1/2"
            ));
        }
        if lambda == half {
            return Ok(Self {
                lambda,
                beta: T::zero(),
                norm_const: T::one(),
            });
        }
        let beta = Float::sqrt(T::one() - T::lit(2.0) * lambda);
        Ok(Self {
            lambda,
            beta,
            norm_const: T::lit(2.0) * lambda / beta,
        })
    }

    /// The minimal law `π_½`, density `x e^{-x}`.
    pub fn minimal() -> Self {
        Self::new(T::lit(LAMBDA_MIN)).expect("1/2 is in range")
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn norm_const(&self) -> T {
        self.norm_const
    }

    pub fn is_minimal(&self) -> bool {
        self.beta == T::zero()
    }

    pub fn density(&self, x: T) -> Result<T> {
        if !(x >= T::zero()) {
            return domain(format!("density evaluated at {x} < 0"));
        }
        Ok(self.density_unchecked(x))
    }

    pub(crate) fn density_unchecked(&self, x: T) -> T {
        if self.is_minimal() {
            self.norm_const * x * Float::exp(-x)
        } else {
            // e^{-x} sinh(βx) without overflow far out in the tail.
            let half = T::lit(0.5) * self.norm_const;
            -half * Float::exp(-(T::one() - self.beta) * x) * Float::exp_m1(-T::lit(2.0) * self.beta * x)
        }
    }

    /// Mean `1/λ`, which is also the expected killing time under the law.
    pub fn mean(&self) -> T {
        T::one() / self.lambda
    }

    /// Exponential rate of the upper tail, `-(1 - β)`.
    pub fn tail_rate(&self) -> T {
        -(T::one() - self.beta)
    }

    /// `P(X > x)`.
    pub fn tail(&self, x: T) -> T {
        if self.is_minimal() {
            Float::exp(-x) * (T::one() + x)
        } else {
            let (lo, hi) = (T::one() - self.beta, T::one() + self.beta);
            T::lit(0.5) * self.norm_const * (Float::exp(-lo * x) / lo - Float::exp(-hi * x) / hi)
        }
    }

    /// `E[min(X, x)] = ∫_0^x P(X > s) ds`.
    fn partial_mean(&self, x: T) -> T {
        if self.is_minimal() {
            T::lit(2.0) - Float::exp(-x) * (T::lit(2.0) + x)
        } else {
            let (lo, hi) = (T::one() - self.beta, T::one() + self.beta);
            T::lit(0.5)
                * self.norm_const
                * (-Float::exp_m1(-lo * x) / (lo * lo) + Float::exp_m1(-hi * x) / (hi * hi))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<T>> {
        if n == 0 {
            return domain("sample size must be at least 1");
        }
        Ok((0..n).map(|_| self.draw(rng)).collect())
    }
}

impl<T: Real> Sampler<T> for QsdParams<T> {
    /// Gamma(2, 1) as a sum of two exponentials when λ = ½; otherwise an
    /// `Exp(1 − β)` proposal accepted with probability `1 − e^{-2βx}`.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        if self.is_minimal() {
            let u = T::open_uniform(rng) * T::open_uniform(rng);
            return -Float::ln(u);
        }
        let rate = T::one() - self.beta;
        loop {
            let x = -Float::ln(T::open_uniform(rng)) / rate;
            if T::uniform(rng) < -Float::exp_m1(T::lit(-2.0) * self.beta * x) {
                return x;
            }
        }
    }
}

impl<T: Real> ContinuousLaw<T> for QsdParams<T> {
    fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            T::zero()
        } else {
            T::one() - self.tail(x)
        }
    }

    fn support_cutoff(&self) -> T {
        T::lit(45.0) / (T::one() - self.beta)
    }

    fn cdf_integral(&self, a: T, b: T) -> T {
        (b - a) - (self.partial_mean(b) - self.partial_mean(a))
    }

    fn tail_integral(&self, a: T) -> T {
        self.mean() - self.partial_mean(a)
    }
}

/// Starting point and horizon for a survival probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurvivalQuery<T> {
    pub x0: T,
    pub t: T,
}

impl<T: Real> SurvivalQuery<T> {
    pub fn new(x0: T, t: T) -> Result<Self> {
        if !(x0 > T::zero()) {
            return domain(format!("starting point {x0} must be positive"));
        }
        if !(t >= T::zero()) {
            return domain(format!("time {t} must be non-negative"));
        }
        Ok(Self { x0, t })
    }
}

/// `ln P_x(τ > t)`.
///
/// With `a = (x − t)/√t` and `b = −(x + t)/√t`,
/// `P_x(τ > t) = Φ(a) − e^{2x} Φ(b) = Φ(a) (1 − e^{2x + ln Φ(b) − ln Φ(a)})`,
/// evaluated entirely in log space.
pub fn log_survival_prob<T: Real>(q: SurvivalQuery<T>) -> T {
    let (x, t) = (q.x0.as_f64(), q.t.as_f64());
    if t == 0.0 {
        return T::zero();
    }
    let s = t.sqrt();
    let log_a = log_norm_cdf((x - t) / s);
    let log_b = log_norm_cdf(-(x + t) / s);
    T::lit(log_a + ln_one_minus_exp((2.0 * x + log_b - log_a).min(0.0)))
}

pub fn survival_prob<T: Real>(q: SurvivalQuery<T>) -> T {
    Float::exp(log_survival_prob(q))
}

/// `E_x[e^{zτ}] = exp(−x(√(1 − 2z) − 1))`, finite for `z <= ½`.
pub fn hitting_mgf<T: Real>(x: T, z: T) -> Result<T> {
    if !(x > T::zero()) {
        return domain(format!("starting point {x} must be positive"));
    }
    if !(z <= T::lit(0.5)) {
        return domain(format!("exponential moment of order {z} > 1/2 is infinite"));
    }
    Ok(Float::exp(-x * (Float::sqrt(T::one() - T::lit(2.0) * z) - T::one())))
}

/// `G1(x) = E_x[τ] = x`.
pub fn green_g1<T: Real>(x: T) -> Result<T> {
    if !(x >= T::zero()) {
        return domain(format!("Green kernel evaluated at {x} < 0"));
    }
    Ok(x)
}

/// Distance past the largest grid point where the decaying solution is pinned.
pub const GREEN_MARGIN: f64 = 20.0;
const GREEN_STEP: f64 = 5e-3;

/// `Gf(x) = E_x[∫_0^τ f(X_s) ds]` on a grid.
///
/// Solves `½u'' − u' = −f`, `u(0) = 0`, keeping only the solution without an
/// `e^{2x}` component. Writing `v = u'`, the admissible `v` is the one that
/// stays bounded, which is found by integrating `v' = 2v − 2f` backwards from
/// `X_max = max(grid) + 20` with `v(X_max) = f(X_max)` (RK4, the growing mode
/// decays in that direction), accumulating `w(x) = ∫_x^{X_max} v` alongside.
/// Then `u(x) = w(0) − w(x)`.
pub fn green_apply<T: Real, F: Fn(T) -> T>(f: F, grid: &[T]) -> Result<Vec<T>> {
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    if !(grid[0] > T::zero()) {
        return domain(format!("grid point {} is not positive", grid[0]));
    }
    if let Some(w) = grid.windows(2).find(|w| !(w[1] > w[0])) {
        return domain(format!("grid is not strictly increasing at {} -> {}", w[0], w[1]));
    }
    let two = T::lit(2.0);
    let rhs = |x: T, v: T| (two * v - two * f(x), -v);
    let mut x = grid[grid.len() - 1] + T::lit(GREEN_MARGIN);
    let mut v = f(x);
    let mut w = T::zero();
    let mut w_at = vec![T::zero(); grid.len()];
    let targets = grid.iter().rev().copied().chain(std::iter::once(T::zero()));
    for (k, target) in targets.enumerate() {
        let span = x - target;
        let steps = Float::ceil(span / T::lit(GREEN_STEP)).to_usize().unwrap_or(0).max(1);
        let h = -span / T::from_count(steps);
        for _ in 0..steps {
            let (k1v, k1w) = rhs(x, v);
            let half = T::lit(0.5) * h;
            let (k2v, k2w) = rhs(x + half, v + half * k1v);
            let (k3v, k3w) = rhs(x + half, v + half * k2v);
            let (k4v, k4w) = rhs(x + h, v + h * k3v);
            let sixth = h / T::lit(6.0);
            v = v + sixth * (k1v + two * k2v + two * k3v + k4v);
            w = w + sixth * (k1w + two * k2w + two * k3w + k4w);
            x = x + h;
        }
        x = target;
        if k < grid.len() {
            w_at[grid.len() - 1 - k] = w;
        }
    }
    Ok(w_at.into_iter().map(|wk| w - wk).collect())
}

/// `T_y(π_λ) = y/λ`: survival under a quasi-stationary law is exactly exponential.
pub fn t_y_qsd<T: Real>(q: &QsdParams<T>, y: T) -> Result<T> {
    if !(y >= T::zero()) {
        return domain(format!("log-survival level {y} must be non-negative"));
    }
    Ok(y / q.lambda)
}

/// `T_y(δ_x)`: the time at which `−ln P_x(τ > t)` reaches `y`, by bisection to 1e-8.
pub fn t_y_pointmass<T: Real>(x: T, y: T) -> Result<T> {
    if !(x > T::zero()) {
        return domain(format!("starting point {x} must be positive"));
    }
    if !(y >= T::zero()) {
        return domain(format!("log-survival level {y} must be non-negative"));
    }
    if y == T::zero() {
        return Ok(T::zero());
    }
    let (x, y) = (x.as_f64(), y.as_f64());
    let neg_log = |t: f64| -log_survival_prob(SurvivalQuery { x0: x, t });
    let mut hi = 1.0;
    while neg_log(hi) < y {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Domain(format!("no finite T_y for y = {y}")));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if neg_log(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(T::lit(0.5 * (lo + hi)))
}

/// Default share of the upper order statistics used by [`tail_rate`].
pub const DEFAULT_TAIL_FRACTION: f64 = 0.05;
pub const MIN_TAIL_SAMPLES: usize = 1000;

/// Exponential rate of the upper tail of a sample.
///
/// Regresses `ln P̂(X >= x_(k))` on `x_(k)` and `ln x_(k)` over the top
/// `fit_fraction` order statistics and returns the coefficient of `x`. The
/// `ln x` column absorbs polynomial prefactors such as the `x e^{-x}` of the
/// minimal law, which would otherwise bias a finite window.
pub fn tail_rate<T: Real>(samples: &[T], fit_fraction: T) -> Result<T> {
    if samples.len() < MIN_TAIL_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "tail fit needs at least {MIN_TAIL_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(fit_fraction > T::zero() && fit_fraction <= T::lit(0.5)) {
        return domain(format!("fit fraction {fit_fraction} must lie in (0, 0.5]"));
    }
    let mut sorted: Vec<f64> = samples.iter().map(|x| x.as_f64()).collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite samples"));
    let n = sorted.len();
    let k = ((fit_fraction.as_f64() * n as f64).ceil() as usize).max(3);
    let top = &sorted[..k];
    if top[0] == top[k - 1] || !(top[k - 1] > 0.0) {
        return Err(Error::DegenerateFit(
            "upper order statistics are all equal or non-positive".into(),
        ));
    }
    let rows: Vec<[f64; 3]> = top.iter().map(|&x| [1.0, x, x.ln()]).collect();
    let ys: Vec<f64> = (0..k).map(|i| ((i + 1) as f64 / n as f64).ln()).collect();
    let coef = least_squares3(&rows, &ys)
        .ok_or_else(|| Error::DegenerateFit("singular tail regression".into()))?;
    Ok(T::lit(coef[1]))
}

/// Normal-equation solve for a three-column least-squares problem.
fn least_squares3(rows: &[[f64; 3]], ys: &[f64]) -> Option<[f64; 3]> {
    // Centre the non-constant columns for conditioning.
    let n = rows.len() as f64;
    let mean = |j: usize| rows.iter().map(|r| r[j]).sum::<f64>() / n;
    let (m1, m2, my) = (mean(1), mean(2), ys.iter().sum::<f64>() / n);
    let (mut s11, mut s12, mut s22, mut s1y, mut s2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (r, &y) in rows.iter().zip(ys) {
        let (a, b, c) = (r[1] - m1, r[2] - m2, y - my);
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        s1y += a * c;
        s2y += b * c;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det.abs() > 1e-12 * s11 * s22) {
        return None;
    }
    let b1 = (s1y * s22 - s2y * s12) / det;
    let b2 = (s2y * s11 - s1y * s12) / det;
    Some([my - b1 * m1 - b2 * m2, b1, b2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{ks_to_law, EmpiricalMeasure};
    use crate::quadrature::{integrate, integrate_panels};
    use crate::rng::seeded;
    use crate::stats::{mean, sample_variance};

    fn q(l: f64) -> QsdParams<f64> {
        QsdParams::new(l).unwrap()
    }

    /// Killed transition density by the method of images, an independent
    /// route to the survival probability.
    fn image_density(x: f64, y: f64, t: f64) -> f64 {
        let g = |z: f64| (-z * z / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt();
        g(y - x + t) - (2.0 * x).exp() * g(y + x + t)
    }

    #[test]
    fn constructor_examples() {
        let m = q(0.5);
        assert_eq!((m.beta(), m.norm_const()), (0.0, 1.0));
        let p = q(0.375);
        assert!((p.beta() - 0.5).abs() < 1e-15);
        assert!((p.norm_const() - 1.5).abs() < 1e-15);
        assert!(QsdParams::new(0.6).is_err());
        assert!(QsdParams::new(0.0).is_err());
        assert!(QsdParams::new(-0.1).is_err());
        assert!(QsdParams::new(f64::NAN).is_err());
    }

    #[test]
    fn density_examples() {
        assert!((q(0.5).density(1.0).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
        let exact = 1.5 * (-1.0f64).exp() * 0.5f64.sinh();
        assert!((q(0.375).density(1.0).unwrap() - exact).abs() < 1e-15);
        assert!((exact - 0.287_550).abs() < 1e-6);
        for l in [0.1, 0.375, 0.5] {
            assert_eq!(q(l).density(0.0).unwrap(), 0.0);
        }
        assert!(q(0.5).density(-1.0).is_err());
    }

    fn normalization_grid() -> impl Iterator<Item = QsdParams<f64>> {
        (0..50).map(|k| q(0.1 + 0.4 * k as f64 / 49.0))
    }

    #[test]
    fn normalization_by_quadrature() {
        // On (0, 200] the omitted tail is below 1e-8 once λ >= 0.1.
        for p in normalization_grid() {
            let mass = integrate_panels(|x| p.density_unchecked(x), 0.0, 200.0, 400, 1e-12);
            assert!((mass - 1.0).abs() < 1e-8, "lambda {} mass {mass}", p.lambda());
        }
        // Heavier tails need the law's own cutoff.
        for l in [0.01, 0.05] {
            let p = q(l);
            let hi = p.support_cutoff();
            let mass = integrate_panels(|x| p.density_unchecked(x), 0.0, hi, 400, 1e-10);
            assert!((mass - 1.0).abs() < 1e-8, "lambda {l} mass {mass}");
        }
    }

    #[test]
    fn closed_form_cdf_integrals_match_quadrature() {
        for l in [0.125, 0.375, 0.5] {
            let p = q(l);
            let num = integrate(|s| p.cdf(s), 0.3, 4.0, 1e-13);
            assert!((p.cdf_integral(0.3, 4.0) - num).abs() < 1e-11);
            let tail = integrate_panels(|s| 1.0 - p.cdf(s), 2.0, 400.0, 400, 1e-12);
            assert!((p.tail_integral(2.0) - tail).abs() < 1e-9);
            let m = integrate_panels(|s| s * p.density_unchecked(s), 0.0, 400.0, 400, 1e-12);
            assert!((p.mean() - m).abs() < 1e-9);
        }
    }

    #[test]
    fn eigen_decay() {
        for l in [0.125, 0.25, 0.375, 0.5] {
            let p = q(l);
            for t in [1.0, 2.0, 5.0] {
                let s = integrate_panels(
                    |x: f64| {
                        if x == 0.0 {
                            0.0
                        } else {
                            survival_prob(SurvivalQuery { x0: x, t }) * p.density_unchecked(x)
                        }
                    },
                    0.0,
                    300.0,
                    600,
                    1e-11,
                );
                assert!((s - (-l * t).exp()).abs() < 1e-6, "lambda {l} t {t}: {s}");
            }
        }
    }

    #[test]
    fn survival_examples() {
        assert_eq!(survival_prob(SurvivalQuery::new(1.0, 0.0).unwrap()), 1.0);
        let s = survival_prob(SurvivalQuery::new(1.0, 1.0).unwrap());
        let images = integrate_panels(|y| image_density(1.0, y, 1.0), 0.0, 20.0, 40, 1e-13);
        assert!((s - images).abs() < 1e-10);
        assert!((s - 0.331_898).abs() < 1e-6, "{s}");
        let far = survival_prob(SurvivalQuery::new(50.0, 1.0).unwrap());
        assert!(far.is_finite() && (1.0 - 1e-15..=1.0).contains(&far));
        assert!(log_survival_prob(SurvivalQuery::new(700.0, 3.0).unwrap()).is_finite());
        assert!(SurvivalQuery::new(0.0, 1.0).is_err());
        assert!(SurvivalQuery::new(1.0, -1.0).is_err());
    }

    #[test]
    fn survival_is_monotone() {
        let xs = [0.1, 0.5, 1.0, 2.0, 5.0, 20.0];
        let ts = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0];
        for &x in &xs {
            for w in ts.windows(2) {
                let a = survival_prob(SurvivalQuery { x0: x, t: w[0] });
                let b = survival_prob(SurvivalQuery { x0: x, t: w[1] });
                assert!(b <= a, "x {x}: S({}) = {a} < S({}) = {b}", w[0], w[1]);
            }
        }
        for &t in &ts {
            for w in xs.windows(2) {
                let a = survival_prob(SurvivalQuery { x0: w[0], t });
                let b = survival_prob(SurvivalQuery { x0: w[1], t });
                assert!(b >= a);
            }
        }
    }

    #[test]
    fn long_time_survival_against_images() {
        // Cancellation-prone regime for the naive difference.
        for t in [10.0, 13.0, 25.0] {
            let s = survival_prob(SurvivalQuery { x0: 1.0, t });
            let images = integrate_panels(|y| image_density(1.0, y, t), 0.0, 60.0, 120, 1e-16);
            assert!((s / images - 1.0).abs() < 1e-6, "t {t}: {s} vs {images}");
        }
    }

    #[test]
    fn mgf_examples() {
        assert_eq!(hitting_mgf(1.0, 0.0).unwrap(), 1.0);
        assert!((hitting_mgf(1.0, 0.5).unwrap() - std::f64::consts::E).abs() < 1e-15);
        let v = hitting_mgf(2.0, -1.0).unwrap();
        assert!((v - (-2.0 * (3f64.sqrt() - 1.0)).exp()).abs() < 1e-15);
        assert!((v - 0.231_28).abs() < 1e-5);
        assert!(hitting_mgf(1.0, 0.51).is_err());
        assert!(hitting_mgf(0.0, 0.1).is_err());
    }

    #[test]
    fn mgf_derivative_is_mean_hitting_time() {
        let h = 1e-5;
        for x in [0.5, 1.0, 2.0] {
            let d = (hitting_mgf(x, h).unwrap() - hitting_mgf(x, -h).unwrap()) / (2.0 * h);
            assert!((d - green_g1(x).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn green_g1_examples() {
        assert_eq!(green_g1(0.0).unwrap(), 0.0);
        assert_eq!(green_g1(1.0).unwrap(), 1.0);
        assert_eq!(green_g1(2.5).unwrap(), 2.5);
        assert!(green_g1(-0.1).is_err());
    }

    #[test]
    fn green_apply_closed_forms() {
        let grid: Vec<f64> = (1..=40).map(|k| 0.25 * k as f64).collect();
        let ones = green_apply(|_| 1.0, &grid).unwrap();
        for (x, u) in grid.iter().zip(&ones) {
            assert!((u / x - 1.0).abs() < 1e-6, "{x}: {u}");
        }
        let zeros = green_apply(|_| 0.0, &grid).unwrap();
        assert!(zeros.iter().all(|&u| u == 0.0));
        let e = green_apply(|x: f64| (-x).exp(), &grid).unwrap();
        for (x, u) in grid.iter().zip(&e) {
            let exact = 2.0 / 3.0 * (1.0 - (-x).exp());
            assert!((u / exact - 1.0).abs() < 1e-6, "{x}: {u} vs {exact}");
        }
        let at_one = green_apply(|x: f64| (-x).exp(), &[1.0]).unwrap()[0];
        assert!((at_one - 0.421_413_7).abs() < 1e-6);
    }

    #[test]
    fn green_apply_grid_errors() {
        assert!(green_apply(|_| 1.0, &[0.0, 1.0]).is_err());
        assert!(green_apply(|_| 1.0, &[1.0, 1.0]).is_err());
        assert!(green_apply(|_| 1.0, &[2.0, 1.0]).is_err());
        assert!(green_apply(|_| 1.0f64, &[]).unwrap().is_empty());
    }

    #[test]
    fn t_y_examples() {
        assert_eq!(t_y_qsd(&q(0.5), 1.0).unwrap(), 2.0);
        assert_eq!(t_y_qsd(&q(0.3), 0.0).unwrap(), 0.0);
        assert_eq!(t_y_qsd(&q(0.25), 3.0).unwrap(), 12.0);
        assert_eq!(t_y_pointmass(1.0, 0.0).unwrap(), 0.0);
        let t1 = t_y_pointmass(1.0, 1.0).unwrap();
        let s = survival_prob(SurvivalQuery { x0: 1.0, t: t1 });
        assert!((s - (-1.0f64).exp()).abs() < 1e-8);
        assert!(t1 < 1.0);
        assert!((t1 - 0.915_457_7).abs() < 1e-6, "{t1}");
        // Frozen from an independent scipy brentq root of -ln S(1, t) = 10.
        let t10 = t_y_pointmass(1.0, 10.0).unwrap();
        assert!((t10 - 13.341_061_5).abs() < 1e-6, "{t10}");
    }

    #[test]
    fn sampler_moments() {
        let mut rng = seeded(1);
        let n = 1_000_000;
        let xs = q(0.5).sample(n, &mut rng).unwrap();
        let se = (sample_variance(&xs) / n as f64).sqrt();
        assert!((mean(&xs) - 2.0).abs() < 3.0 * se);
        assert!(xs.iter().all(|&x| x > 0.0));
        let one = q(0.2).sample(1, &mut rng).unwrap();
        assert!(one.len() == 1 && one[0] > 0.0);
        assert!(q(0.2).sample(0, &mut rng).is_err());
    }

    #[test]
    fn sampler_ks_against_quadrature_cdf() {
        let mut rng = seeded(2);
        let p = q(0.375);
        let m = EmpiricalMeasure::uniform(p.sample(1_000_000, &mut rng).unwrap()).unwrap();
        // CDF from quadrature of the density, not from the closed-form tail.
        let grid_cdf = |x: f64| integrate(|s| p.density_unchecked(s), 0.0, x, 1e-13);
        let law = crate::measures::CdfFn { cdf: grid_cdf, cutoff: 100.0 };
        let thinned = EmpiricalMeasure::uniform(m.points().iter().step_by(97).copied().collect()).unwrap();
        assert!(ks_to_law(&thinned, &law) < 0.02);
        assert!(ks_to_law(&m, &p) < 0.002);
    }

    #[test]
    fn tail_rate_examples() {
        let mut rng = seeded(3);
        let n = 1_000_000;
        let min = q(0.5).sample(n, &mut rng).unwrap();
        let r = tail_rate(&min, 0.05).unwrap();
        assert!((r + 1.0).abs() < 0.1, "{r}");
        let other = q(0.375).sample(n, &mut rng).unwrap();
        let r = tail_rate(&other, 0.05).unwrap();
        assert!((r + 0.5).abs() < 0.1, "{r}");
        let exp3: Vec<f64> = (0..n)
            .map(|_| -f64::ln(f64::open_uniform(&mut rng)) / 3.0)
            .collect();
        let r = tail_rate(&exp3, 0.05).unwrap();
        assert!((r + 3.0).abs() < 0.2, "{r}");
    }

    #[test]
    fn tail_rate_errors() {
        assert!(tail_rate(&[1.0; 999], 0.05).is_err());
        assert!(matches!(tail_rate(&[1.0; 5000], 0.05), Err(Error::DegenerateFit(_))));
        let xs: Vec<f64> = (1..=2000).map(|k| k as f64).collect();
        assert!(tail_rate(&xs, 0.0).is_err());
        assert!(tail_rate(&xs, 0.6).is_err());
    }
}
