//! One-step propagation of a drift −1 Brownian particle absorbed at 0.
//!
//! A step proposes the Gaussian endpoint `x' = x − dt + √dt Z`. Paths that end
//! above 0 may still have touched it; conditional on both endpoints the path
//! is a Brownian bridge (the drift drops out), which hits 0 with probability
//! `exp(−2 x x'/dt)`. Sampling that event makes the step exact in law for a
//! lone particle.

use num_traits::Float;
use rand::Rng;

use crate::error::{domain, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepOutcome<T> {
    Alive(T),
    Killed,
}

impl<T> StepOutcome<T> {
    pub fn is_alive(&self) -> bool {
        matches!(self, StepOutcome::Alive(_))
    }
}

/// Whether the bridge crossing test is applied. `Uncorrected` only checks the
/// endpoint and is kept as a diagnostic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Bridge {
    #[default]
    Corrected,
    Uncorrected,
}

/// Precomputed step constants.
#[derive(Clone, Copy, Debug)]
pub struct Stepper<T> {
    dt: T,
    sqrt_dt: T,
    bridge: Bridge,
}

impl<T: Real> Stepper<T> {
    pub fn new(dt: T) -> Result<Self> {
        Self::with_bridge(dt, Bridge::Corrected)
    }

    pub fn with_bridge(dt: T, bridge: Bridge) -> Result<Self> {
        if !(dt > T::zero() && Float::is_finite(dt)) {
            return domain(format!("time step {dt} must be positive"));
        }
        Ok(Self {
            dt,
            sqrt_dt: Float::sqrt(dt),
            bridge,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Advances a particle at `x > 0`; `None` means it was killed.
    #[inline]
    pub fn advance<R: Rng + ?Sized>(&self, x: T, rng: &mut R) -> Option<T> {
        let next = x - self.dt + self.sqrt_dt * T::standard_normal(rng);
        if next <= T::zero() {
            return None;
        }
        if self.bridge == Bridge::Corrected {
            let exponent = T::lit(2.0) * x * next / self.dt;
            // exp underflows to 0 past ~745 and a uniform draw never falls below it.
            if exponent < T::lit(745.0) && T::uniform(rng) < Float::exp(-exponent) {
                return None;
            }
        }
        Some(next)
    }
}

pub fn step_with_absorption<T: Real, R: Rng + ?Sized>(
    x: T,
    dt: T,
    rng: &mut R,
) -> Result<StepOutcome<T>> {
    if !(x > T::zero()) {
        return domain(format!("position {x} must be positive"));
    }
    let stepper = Stepper::new(dt)?;
    Ok(match stepper.advance(x, rng) {
        Some(y) => StepOutcome::Alive(y),
        None => StepOutcome::Killed,
    })
}

/// Exact draw of the hitting time of 0 from `x`: inverse Gaussian with mean
/// `x` and shape `x²`, by the Michael-Schucany-Haas transformation.
pub fn sample_hitting_time<T: Real, R: Rng + ?Sized>(x: T, rng: &mut R) -> Result<T> {
    if !(x > T::zero()) {
        return domain(format!("position {x} must be positive"));
    }
    let z = T::standard_normal(rng);
    let y = z * z;
    let half = T::lit(0.5);
    // Smaller root x + y/2 − ½√(y² + 4xy), in a cancellation-free form.
    let root = x * x / (x + half * y + half * Float::sqrt(y * y + T::lit(4.0) * x * y));
    if T::uniform(rng) * (x + root) <= x {
        Ok(root)
    } else {
        Ok(x * x / root)
    }
}

/// Fraction of `paths` particles started at `x` still alive at `horizon`.
pub fn stepped_survival<T: Real, R: Rng + ?Sized>(
    x: T,
    horizon: T,
    stepper: &Stepper<T>,
    paths: usize,
    rng: &mut R,
) -> T {
    let steps = Float::round(horizon / stepper.dt()).to_usize().unwrap_or(0);
    let alive = (0..paths)
        .filter(|_| {
            let mut pos = x;
            for _ in 0..steps {
                match stepper.advance(pos, rng) {
                    Some(y) => pos = y,
                    None => return false,
                }
            }
            true
        })
        .count();
    T::from_count(alive) / T::from_count(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsd::{green_apply, hitting_mgf, survival_prob, SurvivalQuery};
    use crate::rng::seeded;
    use crate::stats::{mean, sample_variance};

    fn binomial_se(p: f64, n: usize) -> f64 {
        (p * (1.0 - p) / n as f64).sqrt()
    }

    #[test]
    fn far_particle_survives() {
        let mut rng = seeded(1);
        for _ in 0..100_000 {
            assert!(step_with_absorption(5.0, 1e-6, &mut rng).unwrap().is_alive());
        }
    }

    #[test]
    fn proposal_below_zero_kills() {
        // Any endpoint ≤ 0 kills: with x tiny and dt large almost every step dies.
        let mut rng = seeded(2);
        let killed = (0..10_000)
            .filter(|_| !step_with_absorption(1e-12, 10.0, &mut rng).unwrap().is_alive())
            .count();
        assert!(killed > 9_990);
    }

    #[test]
    fn domain_errors() {
        let mut rng = seeded(3);
        assert!(step_with_absorption(0.0, 0.1, &mut rng).is_err());
        assert!(step_with_absorption(1.0, 0.0, &mut rng).is_err());
        assert!(step_with_absorption(-1.0, 0.1, &mut rng).is_err());
        assert!(sample_hitting_time(0.0, &mut rng).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let run = |seed| {
            let mut rng = seeded(seed);
            (0..1000)
                .map(|_| step_with_absorption(0.3, 0.05, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn stepped_survival_matches_closed_form() {
        let mut rng = seeded(4);
        let stepper = Stepper::new(1e-3).unwrap();
        let n = 200_000;
        let p = stepped_survival(1.0, 1.0, &stepper, n, &mut rng);
        let exact = survival_prob(SurvivalQuery { x0: 1.0, t: 1.0 });
        assert!((p - exact).abs() < 3.0 * binomial_se(exact, n), "{p} vs {exact}");
    }

    #[test]
    fn consistency_across_step_sizes() {
        let mut rng = seeded(5);
        let n = 40_000;
        for x in [0.5, 1.0, 2.0] {
            for t in [0.5, 1.0, 2.0] {
                let exact = survival_prob(SurvivalQuery { x0: x, t });
                let se = binomial_se(exact, n);
                for dt in [1e-2, 5e-3] {
                    let p = stepped_survival(x, t, &Stepper::new(dt).unwrap(), n, &mut rng);
                    assert!((p - exact).abs() < 3.0 * se, "x {x} t {t} dt {dt}: {p} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn uncorrected_scheme_is_biased_and_first_order() {
        let mut rng = seeded(6);
        let n = 100_000;
        let exact = survival_prob(SurvivalQuery { x0: 0.5, t: 1.0 });
        let se = binomial_se(exact, n);
        let coarse = Stepper::with_bridge(1e-2, Bridge::Uncorrected).unwrap();
        let fine = Stepper::with_bridge(1e-3, Bridge::Uncorrected).unwrap();
        let p_coarse = stepped_survival(0.5, 1.0, &coarse, n, &mut rng);
        let p_fine = stepped_survival(0.5, 1.0, &fine, n, &mut rng);
        assert!(p_coarse - exact > 3.0 * se, "{p_coarse} vs {exact}");
        assert!(p_coarse - exact > p_fine - exact);
        let corrected = stepped_survival(0.5, 1.0, &Stepper::new(1e-2).unwrap(), n, &mut rng);
        assert!((corrected - exact).abs() < 3.0 * se);
    }

    #[test]
    fn hitting_time_moments() {
        let mut rng = seeded(7);
        let n = 1_000_000;
        let taus: Vec<f64> = (0..n).map(|_| sample_hitting_time(1.0, &mut rng).unwrap()).collect();
        let m = mean(&taus);
        let v = sample_variance(&taus);
        assert!((m - 1.0).abs() < 0.003, "{m}");
        assert!((v - 1.0).abs() < 0.01, "{v}");
        assert!(taus.iter().all(|&t| t > 0.0));
    }

    #[test]
    fn hitting_time_near_boundary() {
        let mut rng = seeded(8);
        let taus: Vec<f64> = (0..10_000).map(|_| sample_hitting_time(1e-4, &mut rng).unwrap()).collect();
        assert!(mean(&taus) < 1e-3);
    }

    #[test]
    fn hitting_time_laplace_transform() {
        let mut rng = seeded(9);
        let n = 400_000;
        let e: Vec<f64> = (0..n)
            .map(|_| (-sample_hitting_time(2.0, &mut rng).unwrap()).exp())
            .collect();
        let se = (sample_variance(&e) / n as f64).sqrt();
        let target = hitting_mgf(2.0, -1.0).unwrap();
        assert!((mean(&e) - target).abs() < 3.0 * se);
    }

    #[test]
    fn occupation_time_oracle_for_green_kernel() {
        // E_1[∫_0^τ e^{-X_s} ds] by direct path simulation.
        let mut rng = seeded(10);
        let stepper = Stepper::new(1e-3).unwrap();
        let n = 20_000;
        let totals: Vec<f64> = (0..n)
            .map(|_| {
                let mut x = 1.0f64;
                let mut acc = 0.0;
                while let Some(y) = stepper.advance(x, &mut rng) {
                    acc += 0.5 * ((-x).exp() + (-y).exp()) * 1e-3;
                    x = y;
                }
                acc
            })
            .collect();
        let se = (sample_variance(&totals) / n as f64).sqrt();
        let g = green_apply(|x: f64| (-x).exp(), &[1.0]).unwrap()[0];
        // The partial occupation of the killing step is dropped: O(dt) slack.
        assert!((mean(&totals) - g).abs() < 3.0 * se + 2e-3, "{} vs {g}", mean(&totals));
    }
}
