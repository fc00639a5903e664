//! Monte Carlo for a single killed particle: conditioned laws and survival.
//!
//! An ensemble of independent particles is evolved and the dead are simply
//! dropped, so the survivors are an i.i.d. sample of the law conditioned on
//! survival and `ln(n / survivors)` estimates `−ln P_μ(τ > t)`. Particles are
//! partitioned into fixed-size chunks with one random stream each, so results
//! do not depend on the number of worker threads.

use num_traits::Float;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::kernel::Stepper;
use crate::measures::EmpiricalMeasure;
use crate::rng::{ReplicaStreams, StreamRng};
use crate::sampler::Sampler;
use crate::scalar::Real;

pub const MIN_ENSEMBLE: usize = 1000;
/// Below this many survivors distance estimates are mostly noise.
pub const DEGENERACY_THRESHOLD: usize = 100;
const CHUNK: usize = 1 << 16;

#[derive(Clone, Debug)]
struct Chunk<T> {
    particles: Vec<T>,
    rng: StreamRng,
}

/// Survivors of a killed ensemble together with its accumulated log-survival.
#[derive(Clone, Debug)]
pub struct ConditionedEnsemble<T> {
    chunks: Vec<Chunk<T>>,
    log_survival: T,
    time: T,
    initial_count: usize,
    warned: bool,
}

impl<T: Real> ConditionedEnsemble<T> {
    /// Draws `n` initial particles from `mu`.
    pub fn sample<S: Sampler<T>>(mu: &S, n: usize, streams: ReplicaStreams) -> Result<Self> {
        if n < MIN_ENSEMBLE {
            return domain(format!("ensemble size {n} is below the minimum {MIN_ENSEMBLE}"));
        }
        let chunks = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut rng = streams.particle(c);
                let len = CHUNK.min(n - c * CHUNK);
                let particles = mu.draw_n(len, &mut rng);
                Chunk { particles, rng }
            })
            .collect::<Vec<_>>();
        if let Some(x) = chunks
            .iter()
            .flat_map(|c| c.particles.iter())
            .find(|x| !(**x > T::zero()))
        {
            return domain(format!("initial law produced non-positive position {x}"));
        }
        Ok(Self {
            chunks,
            log_survival: T::zero(),
            time: T::zero(),
            initial_count: n,
            warned: false,
        })
    }

    pub fn time(&self) -> T {
        self.time
    }

    /// Estimate of `−ln P_μ(τ > t)`.
    pub fn log_survival(&self) -> T {
        self.log_survival
    }

    pub fn initial_count(&self) -> usize {
        self.initial_count
    }

    pub fn survivors(&self) -> usize {
        self.chunks.iter().map(|c| c.particles.len()).sum()
    }

    pub fn survival_fraction(&self) -> T {
        T::from_count(self.survivors()) / T::from_count(self.initial_count)
    }

    pub fn particles(&self) -> Vec<T> {
        self.chunks
            .iter()
            .flat_map(|c| c.particles.iter().copied())
            .collect()
    }

    pub fn to_measure(&self) -> Result<EmpiricalMeasure<T>> {
        EmpiricalMeasure::uniform(self.particles())
    }

    fn step(&mut self, stepper: &Stepper<T>) -> Result<()> {
        self.chunks.par_iter_mut().for_each(|chunk| {
            let Chunk { particles, rng } = chunk;
            particles.retain_mut(|x| match stepper.advance(*x, rng) {
                Some(y) => {
                    *x = y;
                    true
                }
                None => false,
            });
        });
        self.time = self.time + stepper.dt();
        let alive = self.survivors();
        if alive == 0 {
            return Err(Error::Extinct {
                time: self.time.as_f64(),
            });
        }
        if alive < DEGENERACY_THRESHOLD && !self.warned {
            log::warn!(
                "conditioned ensemble down to {alive} survivors at t = {}",
                self.time
            );
            self.warned = true;
        }
        self.log_survival = Float::ln(T::from_count(self.initial_count) / T::from_count(alive));
        Ok(())
    }

    /// Evolves for `duration`, in steps no longer than `dt` that land exactly
    /// on the end time.
    pub fn advance(&mut self, duration: T, dt: T) -> Result<()> {
        if !(duration >= T::zero()) {
            return domain(format!("duration {duration} must be non-negative"));
        }
        Stepper::new(dt)?;
        if duration == T::zero() {
            return Ok(());
        }
        let steps = Float::ceil(duration / dt).to_usize().unwrap_or(1).max(1);
        let stepper = Stepper::new(duration / T::from_count(steps))?;
        let start = self.time;
        for _ in 0..steps {
            self.step(&stepper)?;
        }
        self.time = start + duration;
        Ok(())
    }

    /// Evolves in steps of `dt` until the log-survival first reaches `y` more
    /// than its current value; the elapsed time estimates `T_y`.
    pub fn advance_log_survival(&mut self, y: T, dt: T) -> Result<T> {
        if !(y >= T::zero()) {
            return domain(format!("log-survival level {y} must be non-negative"));
        }
        let stepper = Stepper::new(dt)?;
        let (start_time, target) = (self.time, self.log_survival + y);
        while self.log_survival < target {
            self.step(&stepper)?;
        }
        Ok(self.time - start_time)
    }
}

/// Samples the conditioned law `θ_t(μ) = L_μ(X_t | τ > t)`.
pub fn flow_theta<T: Real, S: Sampler<T>>(
    mu: &S,
    t: T,
    n: usize,
    dt: T,
    streams: ReplicaStreams,
) -> Result<ConditionedEnsemble<T>> {
    let mut ens = ConditionedEnsemble::sample(mu, n, streams)?;
    ens.advance(t, dt)?;
    Ok(ens)
}

/// Samples `ϑ_y(μ)`, the conditioned law at the time `T_y(μ)` when the
/// log-survival reaches `y`. The ensemble's time is the `T_y` estimate.
pub fn flow_vartheta<T: Real, S: Sampler<T>>(
    mu: &S,
    y: T,
    n: usize,
    dt: T,
    streams: ReplicaStreams,
) -> Result<ConditionedEnsemble<T>> {
    let mut ens = ConditionedEnsemble::sample(mu, n, streams)?;
    ens.advance_log_survival(y, dt)?;
    Ok(ens)
}

/// Decay-rate estimates `−ln Ŝ(t) / t` on an increasing grid of positive times.
pub fn survival_rate_estimate<T: Real, S: Sampler<T>>(
    mu: &S,
    t_grid: &[T],
    n: usize,
    dt: T,
    streams: ReplicaStreams,
) -> Result<Vec<(T, T)>> {
    if t_grid.is_empty() {
        return domain("empty time grid");
    }
    if !(t_grid[0] > T::zero()) {
        return domain(format!("decay rate undefined at t = {}", t_grid[0]));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("time grid must be strictly increasing");
    }
    let mut ens = ConditionedEnsemble::sample(mu, n, streams)?;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        ens.advance(t - ens.time(), dt)?;
        out.push((t, ens.log_survival() / t));
    }
    Ok(out)
}
