//! Experiment runners.
//!
//! Work is split into jobs, one per (particle count, replica), run on a rayon
//! pool and collected in job order. Every job draws from its own stream keyed
//! by `(seed, "<experiment>/n=<N>", replica)`, so outputs do not depend on
//! the number of workers.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, TestFunction};
use super::table::{Cell, Table};
use crate::error::{Error, Result};
use crate::fleming_viot::{estimate_stationary_from, lemma_lower_bound, ParticleSystemState, StationarySummary};
use crate::kernel::{sample_hitting_time, Bridge, Stepper};
use crate::killed::{ConditionedEnsemble, DEGENERACY_THRESHOLD};
use crate::measures::{ks_to_law, w1_to_law, EmpiricalMeasure};
use crate::nbbm::{centered_profile, front_speed, NbbmState, WaveProfile};
use crate::qsd::{hitting_mgf, survival_prob, QsdParams, SurvivalQuery};
use crate::rng::{ReplicaStreams, StreamKey};
use crate::row;
use crate::sampler::{InitialLaw, Sampler};
use crate::stats::{from_batch_values, mean, sample_variance, EstimatorResult};

pub const THREADS_ENV: &str = "FVSELECT_THREADS";
pub const SCHEMA_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";
const PATH_CHUNK: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputSchema {
    pub file: String,
    pub columns: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub seeding: String,
    pub config: ExperimentConfig,
    pub outputs: Vec<OutputSchema>,
}

impl Manifest {
    pub fn file_name() -> &'static str {
        MANIFEST
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

/// Worker count from `FVSELECT_THREADS`, else the available parallelism.
pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    run_with_threads(config, threads_from_env())
}

pub fn run_with_threads(config: &ExperimentConfig, threads: usize) -> Result<RunOutput> {
    let cfg = config.resolved()?;
    let kind = cfg.kind()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    log::info!("running {kind} with {threads} workers");
    let tables = pool.install(|| compute(&cfg))?;

    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir)?;
    for t in &tables {
        t.write(&dir)?;
    }
    let manifest = Manifest {
        tool: "fvselect".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        schema_version: SCHEMA_VERSION,
        experiment: kind,
        seed: cfg.seed,
        seeding: "ChaCha8 stream per (seed, \"<experiment>/n=<N>\", replica, slot); slot 0 is the \
                  system stream, slot i+1 belongs to particle or chunk i"
            .into(),
        config: cfg.clone(),
        outputs: tables
            .iter()
            .map(|t| OutputSchema {
                file: t.file.clone(),
                columns: t.columns.clone(),
            })
            .collect(),
    };
    std::fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(RunOutput { dir, manifest })
}

/// Runs the experiment and returns its tables without touching the disk.
pub fn compute(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    match cfg.kind()? {
        ExperimentKind::QsdTable => qsd_table(cfg),
        ExperimentKind::ValidateKernel => validate_kernel(cfg),
        ExperimentKind::Survival => survival(cfg),
        ExperimentKind::Yaglom => yaglom(cfg),
        ExperimentKind::FvStationary => fv_stationary(cfg, "fv_stationary.csv"),
        ExperimentKind::FvSweep => fv_stationary(cfg, "fv_sweep.csv"),
        ExperimentKind::GreenCheck => green_check(cfg),
        ExperimentKind::NbbmSpeed => nbbm_speed(cfg),
        ExperimentKind::NbbmProfile => nbbm_profile(cfg),
    }
}

#[derive(Clone, Copy, Debug)]
struct Job {
    n: usize,
    dt: f64,
    replica: u32,
}

impl Job {
    fn streams(&self, cfg: &ExperimentConfig) -> ReplicaStreams {
        let kind = cfg.experiment.map_or("", |k| k.as_str());
        let key = StreamKey::new(cfg.seed, &format!("{kind}/n={}", self.n));
        ReplicaStreams::new(key, self.replica)
    }
}

fn jobs(cfg: &ExperimentConfig, counts: &[usize], dts: &[f64]) -> Vec<Job> {
    let mut out = Vec::new();
    for &n in counts {
        for &dt in dts {
            for replica in 0..cfg.replicas as u32 {
                out.push(Job { n, dt, replica });
            }
        }
    }
    out
}

/// Runs every job in parallel and returns results in job order.
fn run_jobs<R: Send>(
    cfg: &ExperimentConfig,
    jobs: &[Job],
    f: impl Fn(&Job) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    jobs.par_iter()
        .map(|job| {
            f(job).map_err(|e| Error::Replica {
                replica: job.replica as u64,
                seed: cfg.seed,
                source: Box::new(e),
            })
        })
        .collect()
}

fn qsd_table(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let mut table = Table::new("qsd_table.csv", &["lambda", "beta", "M_lambda", "mean", "tail_rate"]);
    let mut density = Table::new("qsd_density.csv", &["lambda", "x", "density"]);
    for &l in &cfg.lambdas {
        let q = QsdParams::<f64>::new(l)?;
        table.push(row![l, q.beta(), q.norm_const(), q.mean(), q.tail_rate()]);
        for k in 1..=300 {
            let x = k as f64 * 0.1;
            density.push(row![l, x, q.density(x)?]);
        }
    }
    Ok(vec![table, density])
}

/// Survivor count of `paths` stepped particles, split into fixed chunks.
fn stepped_survivors(x: f64, t: f64, stepper: &Stepper<f64>, paths: usize, streams: &ReplicaStreams) -> usize {
    let steps = (t / stepper.dt()).round() as usize;
    (0..paths.div_ceil(PATH_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = streams.particle(c);
            let len = PATH_CHUNK.min(paths - c * PATH_CHUNK);
            (0..len)
                .filter(|_| {
                    let mut pos = x;
                    for _ in 0..steps {
                        match stepper.advance(pos, &mut rng) {
                            Some(y) => pos = y,
                            None => return false,
                        }
                    }
                    true
                })
                .count()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

fn proportion(k: usize, n: usize) -> (f64, f64) {
    let p = k as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

fn validate_kernel(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let mut table = Table::new(
        "kernel_validation.csv",
        &["quantity", "x0", "t", "dt", "paths", "estimate", "std_error", "reference"],
    );
    let job = Job { n: 1, dt: cfg.dt, replica: 0 };
    let streams = job.streams(cfg);
    let corrected = Stepper::new(cfg.dt)?;
    for (k, &t) in cfg.times.iter().enumerate() {
        let s = ReplicaStreams::new(StreamKey::new(cfg.seed, &format!("validate-kernel/survival/{k}")), 0);
        let alive = stepped_survivors(cfg.x0, t, &corrected, cfg.paths, &s);
        let (p, se) = proportion(alive, cfg.paths);
        let exact = survival_prob(SurvivalQuery::new(cfg.x0, t)?);
        table.push(row!["survival_corrected", cfg.x0, t, cfg.dt, cfg.paths, p, se, exact]);
    }
    let t = cfg.times[0];
    let uncorrected = Stepper::with_bridge(cfg.bias_dt, Bridge::Uncorrected)?;
    let s = ReplicaStreams::new(StreamKey::new(cfg.seed, "validate-kernel/uncorrected"), 0);
    let alive = stepped_survivors(cfg.bias_x0, t, &uncorrected, cfg.paths, &s);
    let (p, se) = proportion(alive, cfg.paths);
    let exact = survival_prob(SurvivalQuery::new(cfg.bias_x0, t)?);
    table.push(row!["survival_uncorrected", cfg.bias_x0, t, cfg.bias_dt, cfg.paths, p, se, exact]);

    let taus: Vec<f64> = (0..cfg.paths.div_ceil(PATH_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = streams.particle(c);
            let len = PATH_CHUNK.min(cfg.paths - c * PATH_CHUNK);
            (0..len)
                .map(|_| sample_hitting_time(cfg.x0, &mut rng))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    let n = taus.len() as f64;
    let m = mean(&taus);
    let var = sample_variance(&taus);
    let m4 = taus.iter().map(|t| (t - m).powi(4)).sum::<f64>() / n;
    let laplace: Vec<f64> = taus.iter().map(|t| (-t).exp()).collect();
    let x = cfg.x0;
    table.push(row!["hitting_mean", x, f64::NAN, 0.0, cfg.paths, m, (var / n).sqrt(), x]);
    table.push(row![
        "hitting_variance",
        x,
        f64::NAN,
        0.0,
        cfg.paths,
        var,
        ((m4 - var * var) / n).sqrt(),
        x
    ]);
    table.push(row![
        "hitting_laplace",
        x,
        f64::NAN,
        0.0,
        cfg.paths,
        mean(&laplace),
        (sample_variance(&laplace) / n).sqrt(),
        hitting_mgf(x, -1.0)?
    ]);
    Ok(vec![table])
}

/// `−ln P(τ > t) / t` under the initial law, where it is available in closed form.
fn exact_rate(initial: &InitialLaw, t: f64) -> Result<f64> {
    Ok(match initial {
        InitialLaw::Qsd(l) => *l,
        InitialLaw::Point(x) => -survival_prob(SurvivalQuery::new(*x, t)?).ln() / t,
        InitialLaw::Explicit(xs) => {
            let s = xs
                .iter()
                .map(|&x| SurvivalQuery::new(x, t).map(survival_prob))
                .collect::<Result<Vec<f64>>>()?;
            -mean(&s).ln() / t
        }
    })
}

fn survival(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let sampler = cfg.initial.sampler()?;
    let results = run_jobs(cfg, &jobs(cfg, &[cfg.ensemble], &[cfg.dt]), |job| {
        let mut ens = ConditionedEnsemble::sample(&sampler, job.n, job.streams(cfg))?;
        let mut rows = Vec::new();
        for &t in &cfg.times {
            ens.advance(t - ens.time(), job.dt)?;
            let k = ens.survivors();
            let p = k as f64 / job.n as f64;
            let se = ((1.0 - p) / k as f64).sqrt() / t;
            rows.push(row![
                job.replica as u64,
                cfg.initial.label(),
                t,
                job.n,
                k,
                ens.log_survival() / t,
                se,
                exact_rate(&cfg.initial, t)?
            ]);
        }
        Ok(rows)
    })?;
    let mut table = Table::new(
        "survival.csv",
        &["replica", "initial", "t", "n", "survivors", "rate_hat", "rate_se", "rate_exact"],
    );
    results.into_iter().flatten().for_each(|r| table.push(r));
    Ok(vec![table])
}

fn yaglom(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let sampler = cfg.initial.sampler()?;
    let pimin = QsdParams::<f64>::minimal();
    let reference = match cfg.initial {
        InitialLaw::Qsd(l) => Some(QsdParams::<f64>::new(l)?),
        _ => None,
    };
    let results = run_jobs(cfg, &jobs(cfg, &[cfg.ensemble], &[cfg.dt]), |job| {
        let mut ens = ConditionedEnsemble::sample(&sampler, job.n, job.streams(cfg))?;
        let mut rows = Vec::new();
        for &t in &cfg.times {
            ens.advance(t - ens.time(), job.dt)?;
            let m = ens.to_measure()?;
            let w1_ref = reference.map_or(f64::NAN, |q| w1_to_law(&m, &q));
            rows.push(row![
                job.replica as u64,
                cfg.initial.label(),
                t,
                job.n,
                ens.survivors(),
                ens.log_survival(),
                w1_to_law(&m, &pimin),
                ks_to_law(&m, &pimin),
                w1_ref,
                ens.survivors() < DEGENERACY_THRESHOLD
            ]);
        }
        Ok(rows)
    })?;
    let mut table = Table::new(
        "yaglom.csv",
        &[
            "replica",
            "initial",
            "t",
            "n",
            "survivors",
            "log_survival",
            "w1_pimin",
            "ks_pimin",
            "w1_initial_qsd",
            "degenerate",
        ],
    );
    results.into_iter().flatten().for_each(|r| table.push(r));
    Ok(vec![table])
}

fn fv_state(cfg: &ExperimentConfig, job: &Job) -> Result<ParticleSystemState<f64>> {
    let streams = job.streams(cfg);
    match &cfg.initial {
        InitialLaw::Explicit(xs) if xs.len() == job.n => {
            ParticleSystemState::from_positions(xs.clone(), streams)
        }
        law => ParticleSystemState::init(job.n, &law.sampler()?, streams),
    }
}

fn fv_summary(cfg: &ExperimentConfig, job: &Job) -> Result<StationarySummary<f64>> {
    estimate_stationary_from(&cfg.stationary(job.n, job.dt), fv_state(cfg, job)?)
}

fn fv_dts(cfg: &ExperimentConfig) -> Vec<f64> {
    if cfg.richardson {
        vec![cfg.dt, 0.5 * cfg.dt]
    } else {
        vec![cfg.dt]
    }
}

pub const FV_COLUMNS: [&str; 31] = [
    "replica",
    "N",
    "dt",
    "lambda_hat",
    "lambda_se",
    "lambda_ci_low",
    "lambda_ci_high",
    "lower_bound",
    "lambda_first_half",
    "lambda_first_half_se",
    "lambda_second_half",
    "lambda_second_half_se",
    "mean_interjump",
    "mean_interjump_se",
    "interjump_identity",
    "interjump_identity_se",
    "interjump_z",
    "varpi_identity",
    "varpi_identity_se",
    "varpi_z",
    "green_exp_lhs",
    "green_exp_rhs",
    "green_exp_z",
    "w1_pimin",
    "w1_pimin_se",
    "ks_pimin",
    "xi_mean",
    "varpi_mean",
    "jump_events",
    "burn_in_used",
    "finite_rate_guaranteed",
];

fn fv_stationary(cfg: &ExperimentConfig, file: &str) -> Result<Vec<Table>> {
    let pimin = QsdParams::<f64>::minimal();
    let all = jobs(cfg, &cfg.n_particles.values(), &fv_dts(cfg));
    let results = run_jobs(cfg, &all, |job| {
        let s = fv_summary(cfg, job)?;
        let half = s.batches.len() / 2;
        let first = s.lambda_over(0..half);
        let second = s.lambda_over(half..s.batches.len());
        let interjump = s.interjump_identity();
        let varpi = s.varpi_identity();
        let green = s.green_identity_check(|x| TestFunction::Exp.eval(x))?;
        let w1 = s.xi_distance(&pimin)?;
        let lambda = s.lambda_hat;
        let row = row![
            job.replica as u64,
            job.n,
            job.dt,
            lambda.estimate,
            lambda.std_error,
            lambda.ci_low,
            lambda.ci_high,
            lemma_lower_bound(job.n),
            first.estimate,
            first.std_error,
            second.estimate,
            second.std_error,
            s.mean_interjump.estimate,
            s.mean_interjump.std_error,
            interjump.estimate,
            interjump.std_error,
            interjump.z_score(1.0),
            varpi.estimate,
            varpi.std_error,
            varpi.z_score(1.0),
            green.lhs,
            green.rhs,
            green.z_score,
            w1.estimate,
            w1.std_error,
            ks_to_law(&s.xi_hat, &pimin),
            s.xi_hat.mean(),
            s.varpi_hat.mean(),
            s.jump_events,
            s.burn_in_used,
            s.lambda_finite_guaranteed
        ];
        let quantiles: Vec<Vec<Cell>> = (1..100)
            .map(|k| {
                let p = k as f64 / 100.0;
                row![job.replica as u64, job.n, job.dt, p, s.xi_hat.quantile(p), s.varpi_hat.quantile(p)]
            })
            .collect();
        Ok((row, quantiles))
    })?;
    let mut table = Table::new(file, &FV_COLUMNS);
    let mut q = Table::new("fv_quantiles.csv", &["replica", "N", "dt", "p", "xi", "varpi"]);
    for (row, quantiles) in results {
        table.push(row);
        quantiles.into_iter().for_each(|r| q.push(r));
    }
    Ok(vec![table, q])
}

fn green_check(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let all = jobs(cfg, &cfg.n_particles.values(), &fv_dts(cfg));
    let results = run_jobs(cfg, &all, |job| {
        let s = fv_summary(cfg, job)?;
        let id = |name: String, e: EstimatorResult<f64>| {
            row![job.replica as u64, job.n, job.dt, name, e.estimate, 1.0, e.z_score(1.0)]
        };
        let mut rows = vec![
            id("interjump".into(), s.interjump_identity()),
            id("varpi_g1".into(), s.varpi_identity()),
        ];
        for f in &cfg.test_functions {
            let g = s.green_identity_check(|x| f.eval(x))?;
            rows.push(row![
                job.replica as u64,
                job.n,
                job.dt,
                format!("green_{}", f.as_str()),
                g.lhs,
                g.rhs,
                g.z_score
            ]);
        }
        Ok(rows)
    })?;
    let mut table = Table::new("green_check.csv", &["replica", "N", "dt", "identity", "lhs", "rhs", "z_score"]);
    results.into_iter().flatten().for_each(|r| table.push(r));
    Ok(vec![table])
}

fn nbbm_state(cfg: &ExperimentConfig, job: &Job) -> Result<NbbmState<f64>> {
    let mut rng = job.streams(cfg).system();
    let positions = cfg.initial.sampler()?.draw_n(job.n, &mut rng);
    NbbmState::new(positions, rng)
}

fn nbbm_speed(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let counts = cfg.n_particles.values();
    let all = jobs(cfg, &counts, &[cfg.dt]);
    let window = cfg.fit_window();
    let results = run_jobs(cfg, &all, |job| {
        let mut state = nbbm_state(cfg, job)?;
        let traj = state.run(cfg.horizon, job.dt, cfg.sample_every)?;
        let v_min = front_speed(&traj.times, &traj.min, window)?;
        let v_med = front_speed(&traj.times, &traj.median, window)?;
        let rate = state.branch_count() as f64 / (job.n as f64 * state.time());
        let row = row![
            job.replica as u64,
            job.n,
            v_min.estimate,
            v_min.std_error,
            v_med.estimate,
            v_med.std_error,
            rate
        ];
        let stride = ((1.0 / cfg.sample_every).round() as usize).max(1);
        let trajectory: Vec<Vec<Cell>> = (0..traj.times.len())
            .step_by(stride)
            .map(|k| row![job.replica as u64, job.n, traj.times[k], traj.min[k], traj.median[k]])
            .collect();
        Ok((row, v_min, trajectory))
    })?;
    let mut table = Table::new(
        "nbbm_speed.csv",
        &["replica", "N", "speed_min", "speed_min_se", "speed_median", "speed_median_se", "branch_rate"],
    );
    let mut trajectory = Table::new("nbbm_trajectory.csv", &["replica", "N", "t", "min", "median"]);
    let mut summary = Table::new("nbbm_speed_summary.csv", &["N", "replicas", "speed", "speed_se", "c_min"]);
    let per_n = cfg.replicas;
    for (k, chunk) in results.chunks(per_n).enumerate() {
        let speeds: Vec<f64> = chunk.iter().map(|(_, v, _)| v.estimate).collect();
        let combined = if per_n > 1 {
            from_batch_values(&speeds, None)
        } else {
            chunk[0].1
        };
        summary.push(row![counts[k], per_n, combined.estimate, combined.std_error, std::f64::consts::SQRT_2]);
    }
    for (row, _, traj) in results {
        table.push(row);
        traj.into_iter().for_each(|r| trajectory.push(r));
    }
    Ok(vec![table, summary, trajectory])
}

fn nbbm_profile(cfg: &ExperimentConfig) -> Result<Vec<Table>> {
    let wave = WaveProfile::<f64>::minimal();
    let all = jobs(cfg, &cfg.n_particles.values(), &[cfg.dt]);
    let burn_in = cfg.resolved_burn_in();
    let results = run_jobs(cfg, &all, |job| {
        let mut state = nbbm_state(cfg, job)?;
        state.run(burn_in, job.dt, burn_in)?;
        let samples = ((cfg.horizon - burn_in) / cfg.sample_every).round() as usize;
        let mut pooled = Vec::with_capacity(samples * job.n);
        for _ in 0..samples {
            state.run(cfg.sample_every, job.dt, cfg.sample_every)?;
            pooled.extend(centered_profile(state.positions())?.points().iter().copied());
        }
        let m = EmpiricalMeasure::uniform(pooled)?;
        let row = row![
            job.replica as u64,
            job.n,
            samples,
            w1_to_law(&m, &wave),
            ks_to_law(&m, &wave),
            m.mean()
        ];
        let quantiles: Vec<Vec<Cell>> = (1..100)
            .map(|k| {
                let p = k as f64 / 100.0;
                row![job.replica as u64, job.n, p, m.quantile(p)]
            })
            .collect();
        Ok((row, quantiles))
    })?;
    let mut table = Table::new(
        "nbbm_profile.csv",
        &["replica", "N", "snapshots", "w1_wave", "ks_wave", "mean"],
    );
    let mut q = Table::new("nbbm_profile_quantiles.csv", &["replica", "N", "p", "quantile"]);
    for (row, quantiles) in results {
        table.push(row);
        quantiles.into_iter().for_each(|r| q.push(r));
    }
    Ok(vec![table, q])
}
