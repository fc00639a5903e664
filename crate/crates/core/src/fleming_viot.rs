//! The N-particle Fleming-Viot system.
//!
//! N particles follow independent drift −1 Brownian motions on `(0, ∞)`. When
//! one hits 0 it jumps onto the current position of another particle chosen
//! uniformly at random. Time is discretized with the bridge-corrected kernel;
//! a kill is attributed to the end of its step and resurrects onto the
//! target's end-of-step position.
//!
//! Every particle owns a random stream. The dying particle's own stream
//! decides both the processing order of simultaneous kills and, through the
//! rank of the target's position, which particle it lands on. Relabeling the
//! particles together with their streams therefore relabels the trajectory
//! and leaves every label-free output unchanged.

use std::ops::Range;

use num_traits::Float;
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::kernel::Stepper;
use crate::measures::{w1_to_law, ContinuousLaw, EmpiricalMeasure};
use crate::qsd::{green_apply, LAMBDA_MIN};
use crate::rng::{ReplicaStreams, StreamRng};
use crate::sampler::Sampler;
use crate::scalar::Real;
use crate::stats::{batch_means, from_batch_values, EstimatorResult, MIN_BATCHES};

/// Smallest N for which the long-run jump rate is known to be finite.
pub const FINITE_RATE_MIN_N: usize = 12;
pub const MIN_JUMP_EVENTS: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct JumpEvent<T> {
    pub time: T,
    pub dying_index: usize,
    pub target_index: usize,
    /// All N positions after the step's resurrections, when requested.
    pub positions_snapshot: Option<Vec<T>>,
}

#[derive(Clone, Debug)]
pub struct ParticleSystemState<T> {
    positions: Vec<T>,
    rngs: Vec<StreamRng>,
    time: T,
    jumps: u64,
    dead: Vec<(T, usize)>,
    alive: Vec<bool>,
    ranked: Vec<(T, usize)>,
}

/// `ι_N = −N ln(1 − 1/N)`; the jump rate is at least `λ_min / ι_N`.
pub fn iota(n: usize) -> f64 {
    let n = n as f64;
    -n * (-1.0 / n).ln_1p()
}

pub fn lemma_lower_bound(n: usize) -> f64 {
    LAMBDA_MIN / iota(n)
}

impl<T: Real> ParticleSystemState<T> {
    /// Samples each particle's starting point from `initial` with its own stream.
    pub fn init<S: Sampler<T>>(n: usize, initial: &S, streams: ReplicaStreams) -> Result<Self> {
        let mut rngs: Vec<StreamRng> = (0..n).map(|i| streams.particle(i)).collect();
        let positions = rngs.iter_mut().map(|r| initial.draw(r)).collect();
        Self::with_rngs(positions, rngs)
    }

    pub fn from_positions(positions: Vec<T>, streams: ReplicaStreams) -> Result<Self> {
        let rngs = (0..positions.len()).map(|i| streams.particle(i)).collect();
        Self::with_rngs(positions, rngs)
    }

    /// Explicit positions and per-particle streams.
    pub fn with_rngs(positions: Vec<T>, rngs: Vec<StreamRng>) -> Result<Self> {
        let n = positions.len();
        if n < 2 {
            return domain(format!("a Fleming-Viot system needs N >= 2 particles, got {n}"));
        }
        if rngs.len() != n {
            return domain(format!("{n} particles but {} streams", rngs.len()));
        }
        if let Some(x) = positions.iter().find(|x| !(**x > T::zero() && Float::is_finite(**x))) {
            return domain(format!("initial position {x} must be positive"));
        }
        Ok(Self {
            positions,
            rngs,
            time: T::zero(),
            jumps: 0,
            dead: Vec::new(),
            alive: vec![true; n],
            ranked: Vec::with_capacity(n),
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

    /// Total number of kills so far.
    pub fn jumps(&self) -> u64 {
        self.jumps
    }

    /// `J_t^N`, the kill count divided by N.
    pub fn jump_level(&self) -> T {
        T::lit(self.jumps as f64) / T::from_count(self.n())
    }

    pub fn empirical_measure(&self) -> EmpiricalMeasure<T> {
        EmpiricalMeasure::uniform(self.positions.clone()).expect("positions are positive")
    }

    pub fn step(&mut self, dt: T, snapshots: bool) -> Result<Vec<JumpEvent<T>>> {
        let stepper = Stepper::new(dt)?;
        let mut events = Vec::new();
        self.step_with(&stepper, snapshots, &mut events)?;
        Ok(events)
    }

    /// Advances one step, appending this step's jump events to `events`.
    pub fn step_with(
        &mut self,
        stepper: &Stepper<T>,
        snapshots: bool,
        events: &mut Vec<JumpEvent<T>>,
    ) -> Result<()> {
        self.dead.clear();
        for (i, (x, rng)) in self.positions.iter_mut().zip(self.rngs.iter_mut()).enumerate() {
            match stepper.advance(*x, rng) {
                Some(y) => *x = y,
                None => self.dead.push((T::uniform(rng), i)),
            }
        }
        self.time = self.time + stepper.dt();
        if self.dead.is_empty() {
            return Ok(());
        }
        let n = self.n();
        if self.dead.len() == n {
            return Err(Error::MassExtinction {
                n,
                time: self.time.as_f64(),
            });
        }
        self.dead
            .sort_by(|a, b| a.partial_cmp(b).expect("order keys are finite"));
        for &(_, i) in &self.dead {
            self.alive[i] = false;
        }
        let first_event = events.len();
        for d in 0..self.dead.len() {
            let i = self.dead[d].1;
            self.ranked.clear();
            self.ranked.extend(
                self.positions
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| self.alive[j])
                    .map(|(j, &x)| (x, j)),
            );
            let k = self.rngs[i].random_range(0..self.ranked.len());
            let (_, &mut (x, target), _) = self
                .ranked
                .select_nth_unstable_by(k, |a, b| a.partial_cmp(b).expect("positions are finite"));
            self.positions[i] = x;
            self.alive[i] = true;
            self.jumps += 1;
            events.push(JumpEvent {
                time: self.time,
                dying_index: i,
                target_index: target,
                positions_snapshot: None,
            });
        }
        if snapshots {
            for e in &mut events[first_event..] {
                e.positions_snapshot = Some(self.positions.clone());
            }
        }
        Ok(())
    }

    /// Steps through `horizon`, calling the observer after every step.
    pub fn run<O: Observer<T>>(&mut self, horizon: T, dt: T, observer: &mut O) -> Result<()> {
        if !(horizon >= T::zero()) {
            return domain(format!("horizon {horizon} must be non-negative"));
        }
        let stepper = Stepper::new(dt)?;
        let steps = Float::round(horizon / dt).to_u64().unwrap_or(0);
        let snapshots = observer.wants_snapshots();
        let mut events = Vec::new();
        for _ in 0..steps {
            events.clear();
            self.step_with(&stepper, snapshots, &mut events)?;
            observer.observe(self, &events);
        }
        Ok(())
    }
}

pub trait Observer<T> {
    fn observe(&mut self, state: &ParticleSystemState<T>, events: &[JumpEvent<T>]);

    fn wants_snapshots(&self) -> bool {
        false
    }
}

impl<T, F: FnMut(&ParticleSystemState<T>, &[JumpEvent<T>])> Observer<T> for F {
    fn observe(&mut self, state: &ParticleSystemState<T>, events: &[JumpEvent<T>]) {
        self(state, events)
    }
}

/// Records every jump event, with snapshots if asked.
#[derive(Clone, Debug, Default)]
pub struct JumpLog<T> {
    pub events: Vec<JumpEvent<T>>,
    pub snapshots: bool,
}

impl<T: Real> Observer<T> for JumpLog<T> {
    fn observe(&mut self, _state: &ParticleSystemState<T>, events: &[JumpEvent<T>]) {
        self.events.extend_from_slice(events);
    }
    fn wants_snapshots(&self) -> bool {
        self.snapshots
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationaryConfig<T> {
    pub n_particles: usize,
    pub dt: T,
    pub horizon: T,
    /// Defaults to `max(0.1 horizon, 20)`.
    pub burn_in: Option<T>,
    pub n_batches: usize,
    /// Spacing of the position samples that estimate the time-averaged measure.
    pub sample_every: T,
    /// Keep the configuration of every `varpi_stride`-th jump.
    pub varpi_stride: usize,
}

impl<T: Real> StationaryConfig<T> {
    pub fn new(n_particles: usize, dt: T, horizon: T) -> Self {
        Self {
            n_particles,
            dt,
            horizon,
            burn_in: None,
            n_batches: 25,
            sample_every: T::lit(0.1),
            varpi_stride: 1,
        }
    }

    pub fn resolved_burn_in(&self) -> T {
        self.burn_in
            .unwrap_or_else(|| Float::max(T::lit(0.1) * self.horizon, T::lit(20.0)))
    }
}

/// One batch of the post-burn-in window.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchRecord<T> {
    pub duration: T,
    pub jumps: u64,
    /// Sorted position samples on the thinning schedule.
    pub xi: Vec<T>,
    /// Sorted positions at jump times.
    pub varpi: Vec<T>,
    pub gap_sum: T,
    pub gap_count: usize,
}

impl<T: Real> BatchRecord<T> {
    fn rate(&self, n: usize) -> T {
        T::lit(self.jumps as f64) / (T::from_count(n) * self.duration)
    }
}

#[derive(Clone, Debug)]
pub struct StationarySummary<T> {
    pub n_particles: usize,
    /// Long-run jump rate per particle.
    pub lambda_hat: EstimatorResult<T>,
    /// Time-averaged empirical measure.
    pub xi_hat: EmpiricalMeasure<T>,
    /// Empirical measure averaged over jump times.
    pub varpi_hat: EmpiricalMeasure<T>,
    /// Mean time between consecutive jumps of the whole system.
    pub mean_interjump: EstimatorResult<T>,
    pub burn_in_used: T,
    pub jump_events: usize,
    pub batches: Vec<BatchRecord<T>>,
    /// False for N < 12, where finiteness of the rate is not established.
    pub lambda_finite_guaranteed: bool,
}

pub fn estimate_stationary<T: Real, S: Sampler<T>>(
    config: &StationaryConfig<T>,
    initial: &S,
    streams: ReplicaStreams,
) -> Result<StationarySummary<T>> {
    let state = ParticleSystemState::init(config.n_particles, initial, streams)?;
    estimate_stationary_from(config, state)
}

/// Runs burn-in and the batched measurement window from a prepared state.
pub fn estimate_stationary_from<T: Real>(
    config: &StationaryConfig<T>,
    mut state: ParticleSystemState<T>,
) -> Result<StationarySummary<T>> {
    let n = state.n();
    let dt = config.dt;
    let stepper = Stepper::new(dt)?;
    let burn_in = config.resolved_burn_in();
    if !(burn_in > T::zero() && config.horizon > burn_in) {
        return domain(format!(
            "need horizon > burn_in > 0, got horizon {} and burn_in {burn_in}",
            config.horizon
        ));
    }
    if config.n_batches < MIN_BATCHES {
        return Err(Error::InsufficientData(format!(
            "{} batches requested, at least {MIN_BATCHES} needed",
            config.n_batches
        )));
    }
    let total_steps = Float::round(config.horizon / dt).to_u64().unwrap_or(0);
    let tick_steps = Float::round(config.sample_every / dt).to_u64().unwrap_or(1).max(1);
    let window_steps = Float::round((config.horizon - burn_in) / dt).to_u64().unwrap_or(0);
    let ticks_per_batch = window_steps / tick_steps / config.n_batches as u64;
    if ticks_per_batch < 2 {
        return Err(Error::InsufficientData(format!(
            "post-burn-in window too short for {} batches of at least 2 samples",
            config.n_batches
        )));
    }
    let measured_steps = ticks_per_batch * tick_steps * config.n_batches as u64;
    let burn_steps = total_steps - measured_steps;
    let stride = config.varpi_stride.max(1);

    let mut events = Vec::new();
    for _ in 0..burn_steps {
        events.clear();
        state.step_with(&stepper, false, &mut events)?;
    }
    let burn_in_used = state.time();

    let tick_len = dt * T::lit(tick_steps as f64);
    let mut tick_rates = Vec::with_capacity((ticks_per_batch as usize) * config.n_batches);
    let mut gaps = Vec::new();
    let mut batches = Vec::with_capacity(config.n_batches);
    let mut last_event: Option<T> = None;
    let mut event_count = 0usize;
    for _ in 0..config.n_batches {
        let mut batch = BatchRecord {
            duration: tick_len * T::lit(ticks_per_batch as f64),
            jumps: 0,
            xi: Vec::with_capacity(ticks_per_batch as usize * n),
            varpi: Vec::new(),
            gap_sum: T::zero(),
            gap_count: 0,
        };
        for _ in 0..ticks_per_batch {
            let jumps_before = state.jumps();
            for _ in 0..tick_steps {
                events.clear();
                state.step_with(&stepper, false, &mut events)?;
                for e in &events {
                    if event_count.is_multiple_of(stride) {
                        batch.varpi.extend_from_slice(state.positions());
                    }
                    event_count += 1;
                    if let Some(prev) = last_event {
                        let gap = e.time - prev;
                        gaps.push(gap);
                        batch.gap_sum = batch.gap_sum + gap;
                        batch.gap_count += 1;
                    }
                    last_event = Some(e.time);
                }
            }
            let tick_jumps = state.jumps() - jumps_before;
            batch.jumps += tick_jumps;
            tick_rates.push(T::lit(tick_jumps as f64) / (T::from_count(n) * tick_len));
            batch.xi.extend_from_slice(state.positions());
        }
        sort(&mut batch.xi);
        sort(&mut batch.varpi);
        batches.push(batch);
    }
    if event_count < MIN_JUMP_EVENTS {
        return Err(Error::InsufficientData(format!(
            "only {event_count} jump events after burn-in, need {MIN_JUMP_EVENTS}"
        )));
    }
    if let Some(k) = batches.iter().position(|b| b.gap_count == 0 || b.varpi.is_empty()) {
        return Err(Error::InsufficientData(format!("batch {k} saw no jumps")));
    }

    let lambda_hat = batch_means(&tick_rates, config.n_batches)?;
    let mean_interjump = batch_means(&gaps, config.n_batches)?;
    let xi_hat = EmpiricalMeasure::uniform(batches.iter().flat_map(|b| b.xi.iter().copied()).collect())?;
    let varpi_hat =
        EmpiricalMeasure::uniform(batches.iter().flat_map(|b| b.varpi.iter().copied()).collect())?;
    Ok(StationarySummary {
        n_particles: n,
        lambda_hat,
        xi_hat,
        varpi_hat,
        mean_interjump,
        burn_in_used,
        jump_events: event_count,
        batches,
        lambda_finite_guaranteed: n >= FINITE_RATE_MIN_N,
    })
}

fn sort<T: Real>(xs: &mut [T]) {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("positions are finite"));
}

fn mean_of<T: Real>(xs: &[T], f: impl Fn(T) -> T) -> T {
    xs.iter().fold(T::zero(), |acc, &x| acc + f(x)) / T::from_count(xs.len())
}

/// Both sides of `ξ(f) = λ ϖ(Gf)` with a batch-means z-score for their difference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenIdentity<T> {
    pub lhs: T,
    pub rhs: T,
    pub z_score: T,
}

impl<T: Real> StationarySummary<T> {
    /// Per-batch estimate restricted to a range of batches.
    pub fn lambda_over(&self, range: Range<usize>) -> EstimatorResult<T> {
        let rates: Vec<T> = self.batches[range].iter().map(|b| b.rate(self.n_particles)).collect();
        from_batch_values(&rates, None)
    }

    /// `λ̂ N E[τ_1]`, which should be 1.
    pub fn interjump_identity(&self) -> EstimatorResult<T> {
        let n = T::from_count(self.n_particles);
        let values: Vec<T> = self
            .batches
            .iter()
            .map(|b| b.rate(self.n_particles) * n * b.gap_sum / T::from_count(b.gap_count))
            .collect();
        from_batch_values(&values, None)
    }

    /// `λ̂ ϖ(G1) = λ̂ · mean(ϖ)`, which should be 1.
    pub fn varpi_identity(&self) -> EstimatorResult<T> {
        let values: Vec<T> = self
            .batches
            .iter()
            .map(|b| b.rate(self.n_particles) * mean_of(&b.varpi, |x| x))
            .collect();
        from_batch_values(&values, None)
    }

    /// W1 from the time-averaged measure to `law`, with a standard error from
    /// the spread of the per-batch distances.
    pub fn xi_distance<L: ContinuousLaw<T> + Sync>(&self, law: &L) -> Result<EstimatorResult<T>> {
        let pooled = w1_to_law(&self.xi_hat, law);
        let per_batch = self
            .batches
            .iter()
            .map(|b| Ok(w1_to_law(&EmpiricalMeasure::uniform(b.xi.clone())?, law)))
            .collect::<Result<Vec<T>>>()?;
        let spread = from_batch_values(&per_batch, None);
        Ok(EstimatorResult::with_t_interval(
            pooled,
            spread.std_error,
            per_batch.len() - 1,
            T::from_count(per_batch.len()),
        ))
    }

    /// Checks `ξ(f) = λ ϖ(Gf)`, evaluating `Gf` on a fine grid and
    /// interpolating linearly.
    pub fn green_identity_check<F: Fn(T) -> T>(&self, f: F) -> Result<GreenIdentity<T>> {
        let h = T::lit(1e-3);
        let top = self.varpi_hat.max();
        let count = Float::ceil(top / h).to_usize().unwrap_or(0) + 2;
        let grid: Vec<T> = (1..=count).map(|k| h * T::from_count(k)).collect();
        let g = green_apply(&f, &grid)?;
        let gf = |x: T| {
            let pos = x / h;
            let k = Float::floor(pos).to_usize().unwrap_or(0);
            let frac = pos - T::from_count(k);
            let left = if k == 0 { T::zero() } else { g[k - 1] };
            left + (g[k] - left) * frac
        };
        let n = self.n_particles;
        let diffs: Vec<T> = self
            .batches
            .iter()
            .map(|b| mean_of(&b.xi, &f) - b.rate(n) * mean_of(&b.varpi, gf))
            .collect();
        let diff = from_batch_values(&diffs, None);
        let lhs = self.xi_hat.expect(&f);
        let rhs = self.lambda_hat.estimate * self.varpi_hat.expect(gf);
        let z_score = diff.z_score(T::zero());
        Ok(GreenIdentity { lhs, rhs, z_score })
    }
}
