//! Initial laws for particle simulations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::qsd::QsdParams;
use crate::scalar::Real;

/// Something that draws i.i.d. positions.
pub trait Sampler<T>: Sync {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> T;

    fn draw_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<T> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointMass<T>(pub T);

impl<T: Real> Sampler<T> for PointMass<T> {
    fn draw<R: Rng + ?Sized>(&self, _rng: &mut R) -> T {
        self.0
    }
}

/// Uniform resampling from a finite set of positions.
#[derive(Clone, Debug, PartialEq)]
pub struct Resample<T>(pub Vec<T>);

impl<T: Real> Sampler<T> for Resample<T> {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.0[rng.random_range(0..self.0.len())]
    }
}

/// Serializable description of an initial law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialLaw {
    /// The quasi-stationary law with the given eigenvalue.
    Qsd(f64),
    /// All mass at one point.
    Point(f64),
    /// Explicit positions: used verbatim for an N-particle system of the same
    /// size, otherwise resampled uniformly.
    Explicit(Vec<f64>),
}

impl InitialLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            InitialLaw::Qsd(l) => QsdParams::<f64>::new(*l).map(|_| ()),
            InitialLaw::Point(x) if !(*x > 0.0 && x.is_finite()) => {
                domain(format!("point initial position {x} must be positive"))
            }
            InitialLaw::Explicit(xs) if xs.is_empty() => domain("explicit initial list is empty"),
            InitialLaw::Explicit(xs) => match xs.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
                Some(x) => domain(format!("explicit initial position {x} must be positive")),
                None => Ok(()),
            },
            InitialLaw::Point(_) => Ok(()),
        }
    }

    pub fn sampler(&self) -> Result<AnySampler> {
        self.validate()?;
        Ok(match self {
            InitialLaw::Qsd(l) => AnySampler::Qsd(QsdParams::new(*l)?),
            InitialLaw::Point(x) => AnySampler::Point(PointMass(*x)),
            InitialLaw::Explicit(xs) => AnySampler::Resample(Resample(xs.clone())),
        })
    }

    pub fn label(&self) -> String {
        match self {
            InitialLaw::Qsd(l) => format!("qsd:{l}"),
            InitialLaw::Point(x) => format!("point:{x}"),
            InitialLaw::Explicit(xs) => format!("explicit:{}", xs.len()),
        }
    }
}

#[derive(Clone, Debug)]
pub enum AnySampler {
    Qsd(QsdParams<f64>),
    Point(PointMass<f64>),
    Resample(Resample<f64>),
}

impl Sampler<f64> for AnySampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            AnySampler::Qsd(q) => q.draw(rng),
            AnySampler::Point(p) => p.draw(rng),
            AnySampler::Resample(r) => r.draw(rng),
        }
    }
}
