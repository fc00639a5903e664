//! Fleming-Viot particle systems for Brownian motion with drift −1 killed at 0.
//!
//! The numerical core is generic over the scalar type (see [`scalar`]); the
//! aliases below fix it to `f64`, which is what the experiment runner uses.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod fleming_viot;
pub mod kernel;
pub mod killed;
pub mod measures;
pub mod nbbm;
pub mod qsd;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

pub type QsdParams = qsd::QsdParams<f64>;
pub type SurvivalQuery = qsd::SurvivalQuery<f64>;
pub type StepOutcome = kernel::StepOutcome<f64>;
pub type EmpiricalMeasure = measures::EmpiricalMeasure<f64>;
pub type EstimatorResult = stats::EstimatorResult<f64>;
pub type ConditionedEnsemble = killed::ConditionedEnsemble<f64>;
pub type ParticleSystemState = fleming_viot::ParticleSystemState<f64>;
pub type JumpEvent = fleming_viot::JumpEvent<f64>;
pub type StationarySummary = fleming_viot::StationarySummary<f64>;
pub type NbbmState = nbbm::NbbmState<f64>;
pub type WaveProfile = nbbm::WaveProfile<f64>;

pub type QsdParamsF32 = qsd::QsdParams<f32>;
pub type EmpiricalMeasureF32 = measures::EmpiricalMeasure<f32>;
/// Exact-arithmetic measure for distance checks.
pub type RationalMeasure = measures::EmpiricalMeasure<num_rational::Ratio<i64>>;
