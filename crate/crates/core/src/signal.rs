use serde::{Deserialize, Serialize};

use crate::error::{HigsError, Result};
use crate::scalar::Real;

/// Uniformly sampled signal starting at `t0` with sample period `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<T> {
    pub t0: T,
    pub dt: T,
    pub values: Vec<T>,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(t0: T, dt: T, values: Vec<T>) -> Result<Self> {
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(HigsError::InvalidTimeStep(dt.to_f64_lossy()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(HigsError::NonFinite { index });
        }
        Ok(Self { t0, dt, values })
    }

    /// Samples `f` at `t0 + k dt` for `k in 0..n`.
    pub fn from_fn(t0: T, dt: T, n: usize, f: impl Fn(T) -> T) -> Result<Self> {
        let values = (0..n).map(|k| f(t0 + dt * T::from_count(k))).collect();
        Self::new(t0, dt, values)
    }

    pub fn sine(amplitude: T, omega: T, dt: T, n: usize) -> Result<Self> {
        Self::from_fn(T::zero(), dt, n, |t| amplitude * (omega * t).sin())
    }

    pub fn step(level: T, dt: T, n: usize) -> Result<Self> {
        Self::new(T::zero(), dt, vec![level; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> T {
        self.t0 + self.dt * T::from_count(k)
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }

    pub fn duration(&self) -> T {
        self.dt * T::from_count(self.len())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Backward-difference derivative; the sample before `t0` is zero.
    pub fn backward_difference(&self) -> Vec<T> {
        let mut prev = T::zero();
        self.values
            .iter()
            .map(|&v| {
                let d = (v - prev) / self.dt;
                prev = v;
                d
            })
            .collect()
    }
}
