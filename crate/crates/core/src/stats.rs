//! Point estimates with uncertainty: batch means and bootstrap.

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MIN_BATCHES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult<T> {
    pub estimate: T,
    pub std_error: T,
    pub ci_low: T,
    pub ci_high: T,
    pub n_effective: T,
}

impl<T: Real> EstimatorResult<T> {
    /// Estimate with a symmetric 95% Student-t interval on `dof` degrees of freedom.
    pub fn with_t_interval(estimate: T, std_error: T, dof: usize, n_effective: T) -> Self {
        let q: T = t_quantile_975(dof);
        Self {
            estimate,
            std_error,
            ci_low: estimate - q * std_error,
            ci_high: estimate + q * std_error,
            n_effective,
        }
    }

    /// `|estimate - target| / std_error`, infinite when the error is zero and
    /// the estimate misses.
    pub fn z_score(&self, target: T) -> T {
        let diff = self.estimate - target;
        if self.std_error > T::zero() {
            diff / self.std_error
        } else if diff == T::zero() {
            T::zero()
        } else {
            T::infinity() * diff.signum()
        }
    }

    pub fn within(&self, target: T, n_se: T) -> bool {
        Float::abs(self.estimate - target) <= n_se * self.std_error
    }
}

fn t_quantile_975<T: Real>(dof: usize) -> T {
    let q = StudentsT::new(0.0, 1.0, dof.max(1) as f64)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(1.959_963_984_540_054);
    T::lit(q)
}

pub fn mean<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |a, &x| a + x) / T::from_count(xs.len())
}

pub fn sample_variance<T: Real>(xs: &[T]) -> T {
    let m = mean(xs);
    xs.iter().fold(T::zero(), |a, &x| a + (x - m) * (x - m)) / T::from_count(xs.len() - 1)
}

/// Batch-means estimate of the mean of a stationary series.
///
/// The series is cut into `n_batches` contiguous batches of equal length
/// (a remainder at the front is discarded). The standard error comes from
/// the spread of the batch means; `n_effective` is the i.i.d. sample size
/// that would give the same error.
pub fn batch_means<T: Real>(series: &[T], n_batches: usize) -> Result<EstimatorResult<T>> {
    if n_batches < MIN_BATCHES {
        return Err(Error::InsufficientData(format!(
            "batch means needs at least {MIN_BATCHES} batches, got {n_batches}"
        )));
    }
    if series.len() < 2 * n_batches {
        return Err(Error::InsufficientData(format!(
            "series of length {} is too short for {n_batches} batches",
            series.len()
        )));
    }
    let size = series.len() / n_batches;
    let used = &series[series.len() - size * n_batches..];
    let means: Vec<T> = used.chunks_exact(size).map(mean).collect();
    Ok(from_batch_values(&means, Some(used)))
}

/// Estimate from already-formed batch values (one value per batch).
pub fn from_batch_values<T: Real>(values: &[T], raw: Option<&[T]>) -> EstimatorResult<T> {
    let b = values.len();
    let est = mean(values);
    let se = if b > 1 {
        Float::sqrt(sample_variance(values) / T::from_count(b))
    } else {
        T::zero()
    };
    let n_eff = match raw {
        Some(raw) if se > T::zero() && raw.len() > 1 => {
            sample_variance(raw) / (se * se)
        }
        Some(raw) => T::from_count(raw.len()),
        None => T::from_count(b),
    };
    EstimatorResult::with_t_interval(est, se, b.saturating_sub(1), n_eff)
}

/// Bootstrap standard error of `statistic` under resampling with replacement.
pub fn bootstrap_se<T: Real, R: Rng + ?Sized>(
    samples: &[T],
    reps: usize,
    statistic: impl Fn(&[T]) -> f64,
    rng: &mut R,
) -> f64 {
    let n = samples.len();
    let mut buf = vec![T::zero(); n];
    let values: Vec<f64> = (0..reps)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = samples[rng.random_range(0..n)];
            }
            statistic(&buf)
        })
        .collect();
    sample_variance(&values).sqrt()
}
