//! Scalar traits the numerical code is generic over.
//!
//! [`Scalar`] is the minimal ordered-field interface used by discrete measure
//! code (distances between step CDFs), and is implemented for `f32`, `f64`
//! and exact `Ratio<i64>`. [`Real`] adds transcendental functions and random
//! sampling, and is implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, Num};
use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal, StandardUniform};

pub trait Scalar:
    Num + Neg<Output = Self> + PartialOrd + Copy + Debug + Send + Sync + 'static
{
    /// Slack allowed when checking that probability weights sum to one.
    fn weight_slack() -> Self;

    fn from_count(n: usize) -> Self;

    /// Lossy conversion used for reporting.
    fn as_f64(self) -> f64;

    fn magnitude(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn larger(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

pub trait Real: Scalar + Float + FloatConst + FromPrimitive + Display + Default {
    /// Converts an `f64` literal; exact for `f64`, rounded for `f32`.
    fn lit(x: f64) -> Self;

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform on `[0, 1)`.
    fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform on `(0, 1)`.
    fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

macro_rules! impl_float {
    ($t:ty, $slack:expr) => {
        impl Scalar for $t {
            fn weight_slack() -> Self {
                $slack
            }
            fn from_count(n: usize) -> Self {
                n as $t
            }
            fn as_f64(self) -> f64 {
                self as f64
            }
        }

        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }
            #[inline]
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }
            #[inline]
            fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardUniform.sample(rng)
            }
            #[inline]
            fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Open01.sample(rng)
            }
        }
    };
}

impl_float!(f64, 1e-12);
impl_float!(f32, 1e-5);

impl Scalar for Ratio<i64> {
    fn weight_slack() -> Self {
        Ratio::from_integer(0)
    }
    fn from_count(n: usize) -> Self {
        Ratio::from_integer(n as i64)
    }
    fn as_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_magnitude_is_exact() {
        let x = Ratio::new(-3i64, 7);
        assert_eq!(x.magnitude(), Ratio::new(3, 7));
        assert_eq!(Ratio::<i64>::from_count(5).as_f64(), 5.0);
    }

    #[test]
    fn open_uniform_is_positive() {
        let mut rng = crate::rng::seeded(3);
        for _ in 0..10_000 {
            let u: f32 = Real::open_uniform(&mut rng);
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
