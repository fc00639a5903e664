//! Reproducible experiment runs: configuration, parallel execution, CSV and
//! manifest output, and verification of finished runs.
//!
//! | experiment | files |
//! |---|---|
//! | `qsd-table` | `qsd_table.csv`, `qsd_density.csv` |
//! | `validate-kernel` | `kernel_validation.csv` |
//! | `survival` | `survival.csv` |
//! | `yaglom` | `yaglom.csv` |
//! | `fv-stationary` | `fv_stationary.csv`, `fv_quantiles.csv` |
//! | `fv-sweep` | `fv_sweep.csv`, `fv_quantiles.csv` |
//! | `green-check` | `green_check.csv` |
//! | `nbbm-speed` | `nbbm_speed.csv`, `nbbm_speed_summary.csv`, `nbbm_trajectory.csv` |
//! | `nbbm-profile` | `nbbm_profile.csv`, `nbbm_profile_quantiles.csv` |
//!
//! Column lists are recorded in each run's `manifest.json`.

mod config;
mod run;
mod table;
mod verify;

pub use config::{Counts, ExperimentConfig, ExperimentKind, TestFunction};
pub use run::{
    compute, run, run_with_threads, threads_from_env, Manifest, OutputSchema, RunOutput, FV_COLUMNS,
    SCHEMA_VERSION, THREADS_ENV,
};
pub use table::{Cell, CsvData, Table};
pub use verify::{evaluate, verify, Predicate, VerifyReport, REPORT};
