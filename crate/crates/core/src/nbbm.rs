//! Branching Brownian motion with a fixed population of N (N-BBM).
//!
//! Each particle diffuses with unit variance per unit time and branches at
//! rate 1; every branching removes the current minimum, so N never changes.
//! The cloud travels right at a speed approaching `√2` and, seen from its
//! minimum, is compared with the minimal travelling wave `2x e^{−√2x}`.

use num_traits::Float;
use rand::seq::SliceRandom;

use crate::error::{domain, Error, Result};
use crate::measures::{ContinuousLaw, EmpiricalMeasure};
use crate::qsd::QsdParams;
use crate::rng::StreamRng;
use crate::scalar::Real;
use crate::stats::{from_batch_values, EstimatorResult};

/// Largest step for which per-step thinning of the branching clocks is used.
pub const MAX_DT: f64 = 0.01;
/// Sub-windows used for the standard error of a front speed.
pub const SPEED_BATCHES: usize = 20;

#[derive(Clone, Debug)]
pub struct NbbmState<T> {
    positions: Vec<T>,
    time: T,
    branch_count: u64,
    rng: StreamRng,
    branchers: Vec<usize>,
}

impl<T: Real> NbbmState<T> {
    pub fn new(positions: Vec<T>, rng: StreamRng) -> Result<Self> {
        if positions.is_empty() {
            return domain("an N-BBM needs at least one particle");
        }
        if let Some(x) = positions.iter().find(|x| !Float::is_finite(**x)) {
            return domain(format!("position {x} is not finite"));
        }
        Ok(Self {
            positions,
            time: T::zero(),
            branch_count: 0,
            rng,
            branchers: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn branch_count(&self) -> u64 {
        self.branch_count
    }

    pub fn min(&self) -> T {
        self.positions.iter().copied().fold(T::infinity(), Float::min)
    }

    pub fn median(&self) -> T {
        let mut sorted = self.positions.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("positions are finite"));
        let n = sorted.len();
        if n % 2 == 1 {
            sorted[n / 2]
        } else {
            T::lit(0.5) * (sorted[n / 2 - 1] + sorted[n / 2])
        }
    }

    /// Diffuses every particle, then lets each branch with probability
    /// `1 − e^{−dt}`. Branch events run in random order; each copies the
    /// current occupant of the brancher's slot over the minimum.
    pub fn step(&mut self, dt: T) -> Result<()> {
        if !(dt > T::zero() && dt <= T::lit(MAX_DT)) {
            return domain(format!("N-BBM step {dt} must lie in (0, {MAX_DT}]"));
        }
        let sd = Float::sqrt(dt);
        for x in &mut self.positions {
            *x = *x + sd * T::standard_normal(&mut self.rng);
        }
        let p = -Float::exp_m1(-dt);
        self.branchers.clear();
        for i in 0..self.positions.len() {
            if T::uniform(&mut self.rng) < p {
                self.branchers.push(i);
            }
        }
        self.branchers.shuffle(&mut self.rng);
        for k in 0..self.branchers.len() {
            self.branch(self.branchers[k]);
        }
        self.time = self.time + dt;
        Ok(())
    }

    /// Particle `index` branches: a copy of it replaces the current minimum.
    pub fn branch(&mut self, index: usize) {
        let value = self.positions[index];
        let lowest = argmin(&self.positions);
        self.positions[lowest] = value;
        self.branch_count += 1;
    }

    /// Runs for `horizon`, recording the minimum and median every
    /// `sample_every` time units.
    pub fn run(&mut self, horizon: T, dt: T, sample_every: T) -> Result<FrontTrajectory<T>> {
        let steps = Float::round(horizon / dt).to_u64().unwrap_or(0);
        let stride = Float::round(sample_every / dt).to_u64().unwrap_or(1).max(1);
        let mut trajectory = FrontTrajectory::default();
        trajectory.push(self);
        for k in 1..=steps {
            self.step(dt)?;
            if k % stride == 0 {
                trajectory.push(self);
            }
        }
        Ok(trajectory)
    }
}

fn argmin<T: Real>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrontTrajectory<T> {
    pub times: Vec<T>,
    pub min: Vec<T>,
    pub median: Vec<T>,
}

impl<T: Real> FrontTrajectory<T> {
    fn push(&mut self, state: &NbbmState<T>) {
        self.times.push(state.time());
        self.min.push(state.min());
        self.median.push(state.median());
    }
}

/// Least-squares slope of `values` against `times` over the trailing
/// `fit_window`, with a standard error from the spread of the speeds over
/// consecutive sub-windows.
pub fn front_speed<T: Real>(times: &[T], values: &[T], fit_window: T) -> Result<EstimatorResult<T>> {
    if times.len() != values.len() || times.len() < 2 {
        return domain("front speed needs matching times and values of length >= 2");
    }
    let (first, last) = (times[0], times[times.len() - 1]);
    // Accumulated step times fall a hair short of round numbers.
    let slack = T::one() - T::lit(1e-9);
    if !(fit_window > T::zero()) || last - first < T::lit(2.0) * fit_window * slack {
        return domain(format!(
            "trajectory spans {} but twice the fit window is {}",
            last - first,
            T::lit(2.0) * fit_window
        ));
    }
    let start = times.partition_point(|&t| t < last - fit_window);
    let (ts, xs) = (&times[start..], &values[start..]);
    if ts.len() < 2 * SPEED_BATCHES || xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::DegenerateFit(
            "front trajectory is constant or too short over the fit window".into(),
        ));
    }
    let n = T::from_count(ts.len());
    let t_bar = ts.iter().fold(T::zero(), |a, &t| a + t) / n;
    let x_bar = xs.iter().fold(T::zero(), |a, &x| a + x) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&t, &x) in ts.iter().zip(xs) {
        sxy = sxy + (t - t_bar) * (x - x_bar);
        sxx = sxx + (t - t_bar) * (t - t_bar);
    }
    let slope = sxy / sxx;
    let per = ts.len() / SPEED_BATCHES;
    let speeds: Vec<T> = (0..SPEED_BATCHES)
        .map(|b| {
            let (i, j) = (b * per, (b + 1) * per - 1);
            (xs[j] - xs[i]) / (ts[j] - ts[i])
        })
        .collect();
    let spread = from_batch_values(&speeds, None);
    Ok(EstimatorResult::with_t_interval(
        slope,
        spread.std_error,
        SPEED_BATCHES - 1,
        T::from_count(SPEED_BATCHES),
    ))
}

/// The travelling wave `w_c(x) = c π_{1/c²}(c x)` of speed `c ≥ √2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveProfile<T> {
    speed: T,
    qsd: QsdParams<T>,
}

impl<T: Real> WaveProfile<T> {
    pub fn new(speed: T) -> Result<Self> {
        if !(speed >= T::SQRT_2()) || !Float::is_finite(speed) {
            return domain(format!("no travelling wave has speed {speed} < sqrt 2"));
        }
        let lambda = Float::min(T::one() / (speed * speed), T::lit(0.5));
        Ok(Self { speed, qsd: QsdParams::new(lambda)? })
    }

    pub fn minimal() -> Self {
        Self::new(T::SQRT_2()).expect("sqrt 2 is admissible")
    }

    pub fn speed(&self) -> T {
        self.speed
    }

    pub fn density(&self, x: T) -> T {
        if x <= T::zero() {
            T::zero()
        } else {
            self.speed * self.qsd.density(self.speed * x).expect("x is positive")
        }
    }
}

impl<T: Real> ContinuousLaw<T> for WaveProfile<T> {
    fn cdf(&self, x: T) -> T {
        self.qsd.cdf(self.speed * x)
    }

    fn support_cutoff(&self) -> T {
        self.qsd.support_cutoff() / self.speed
    }

    fn cdf_integral(&self, a: T, b: T) -> T {
        self.qsd.cdf_integral(self.speed * a, self.speed * b) / self.speed
    }

    fn tail_integral(&self, a: T) -> T {
        self.qsd.tail_integral(self.speed * a) / self.speed
    }
}

/// Positions seen from the current minimum.
pub fn centered_profile<T: Real>(positions: &[T]) -> Result<EmpiricalMeasure<T>> {
    let low = positions.iter().copied().fold(T::infinity(), Float::min);
    EmpiricalMeasure::uniform(positions.iter().map(|&x| x - low).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::w1;
    use crate::quadrature::integrate_panels;
    use crate::rng::seeded;

    #[test]
    fn step_bounds() {
        let mut s = NbbmState::new(vec![0.0; 5], seeded(1)).unwrap();
        assert!(s.step(0.02).is_err());
        assert!(s.step(0.0).is_err());
        assert!(s.step(0.01).is_ok());
        assert!(NbbmState::<f64>::new(vec![], seeded(1)).is_err());
    }

    #[test]
    fn tiny_steps_rarely_branch() {
        let mut s = NbbmState::new(vec![0.0, 1.0, 2.0], seeded(2)).unwrap();
        for _ in 0..100 {
            s.step(1e-9).unwrap();
        }
        assert_eq!(s.branch_count(), 0);
        assert!((s.positions()[2] - 2.0).abs() < 1e-2);
    }

    #[test]
    fn two_particles_branch_onto_the_upper() {
        let mut s = NbbmState::new(vec![1.0, 5.0], seeded(3)).unwrap();
        s.branch(0);
        assert_eq!(s.positions(), &[1.0, 5.0]);
        s.branch(1);
        assert_eq!(s.positions(), &[5.0, 5.0]);
        assert_eq!(s.branch_count(), 2);
    }

    #[test]
    fn branching_rate_is_one() {
        let mut s = NbbmState::new(vec![0.0; 100], seeded(4)).unwrap();
        s.run(100.0, 1e-3, 1.0).unwrap();
        let rate = s.branch_count() as f64 / (100.0 * 100.0);
        assert!((rate - 1.0).abs() < 0.05, "{rate}");
        assert_eq!(s.n(), 100);
    }

    #[test]
    fn dynamics_commute_with_shifts() {
        let start: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let mut a = NbbmState::new(start.clone(), seeded(5)).unwrap();
        let mut b = NbbmState::new(start.iter().map(|x| x + 7.0).collect(), seeded(5)).unwrap();
        let ta = a.run(5.0, 1e-3, 0.5).unwrap();
        let tb = b.run(5.0, 1e-3, 0.5).unwrap();
        for (x, y) in ta.min.iter().zip(&tb.min) {
            assert!((y - x - 7.0).abs() < 1e-9);
        }
        assert_eq!(a.branch_count(), b.branch_count());
    }

    #[test]
    fn speed_of_a_line() {
        let ts: Vec<f64> = (0..1000).map(|k| k as f64 * 0.1).collect();
        let xs: Vec<f64> = ts.iter().map(|t| 1.3 * t).collect();
        let v = front_speed(&ts, &xs, 40.0).unwrap();
        assert!((v.estimate - 1.3).abs() < 1e-12);
        assert!(v.std_error < 1e-12);
        let flat = vec![2.0; 1000];
        assert!(matches!(front_speed(&ts, &flat, 40.0), Err(Error::DegenerateFit(_))));
        assert!(front_speed(&ts, &xs, 60.0).is_err());
    }

    #[test]
    fn minimal_wave_values() {
        let w = WaveProfile::<f64>::minimal();
        let x = std::f64::consts::FRAC_1_SQRT_2;
        let exact = 2.0 * x * (-1.0f64).exp();
        assert!((w.density(x) - exact).abs() < 1e-14);
        assert!((w.density(x) - 0.520_260_095).abs() < 1e-9);
        assert!(WaveProfile::new(1.0).is_err());
        assert!(WaveProfile::new(1.41).is_err());
    }

    #[test]
    fn waves_have_unit_mass() {
        for c in [std::f64::consts::SQRT_2, 1.5, 2.0, 3.0, 5.0] {
            let w = WaveProfile::new(c).unwrap();
            let hi = w.support_cutoff();
            let mass = integrate_panels(|x| w.density(x), 0.0, hi, 400, 1e-11);
            assert!((mass - 1.0).abs() < 1e-8, "c {c} mass {mass}");
            assert!((w.cdf(hi) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn centered_profiles() {
        let m = centered_profile(&[3.0, 3.0, 3.0]).unwrap();
        assert!(m.points().iter().all(|&x| x == 0.0));
        assert_eq!(w1(&m, &EmpiricalMeasure::point_mass(0.0).unwrap()), 0.0);
        let xs = [0.4, 2.0, -1.0, 5.5];
        let shifted: Vec<f64> = xs.iter().map(|x| x + 7.3).collect();
        let a = centered_profile(&xs).unwrap();
        let b = centered_profile(&shifted).unwrap();
        for (p, q) in a.points().iter().zip(b.points()) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
