//! Rational continuous-time transfer functions built from first-order
//! sections, and their bilinear (Tustin) discretization.

use num_complex::Complex;

use crate::error::{HigsError, Result};
use crate::scalar::Real;

/// `(num_s * s + num_0) / (s + pole)`; `pole = 0` is an integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section<T> {
    pub num_s: T,
    pub num_0: T,
    pub pole: T,
}

impl<T: Real> Section<T> {
    pub fn new(num_s: T, num_0: T, pole: T) -> Self {
        Self { num_s, num_0, pole }
    }

    /// `1 / s`
    pub fn integrator() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }

    /// `corner / (s + corner)`: unit DC gain low-pass.
    pub fn low_pass(corner: T) -> Self {
        Self::new(T::zero(), corner, corner)
    }

    /// `(1 + s/zero) / (1 + s/pole)`: unit DC gain lead or lag pair.
    pub fn zero_pole(zero: T, pole: T) -> Self {
        Self::new(pole / zero, pole, pole)
    }

    pub fn response(&self, omega: T) -> Complex<T> {
        let s = Complex::new(T::zero(), omega);
        (s * self.num_s + self.num_0) / (s + self.pole)
    }
}

/// Gain times a cascade of first-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousTf<T> {
    pub gain: T,
    pub sections: Vec<Section<T>>,
}

impl<T: Real> ContinuousTf<T> {
    pub fn unity() -> Self {
        Self::gain(T::one())
    }

    pub fn gain(gain: T) -> Self {
        Self {
            gain,
            sections: Vec::new(),
        }
    }

    pub fn from_sections(gain: T, sections: Vec<Section<T>>) -> Self {
        Self { gain, sections }
    }

    pub fn then(mut self, section: Section<T>) -> Self {
        self.sections.push(section);
        self
    }

    pub fn response(&self, omega: T) -> Complex<T> {
        self.sections
            .iter()
            .fold(Complex::new(self.gain, T::zero()), |acc, s| acc * s.response(omega))
    }

    /// Tustin discretization at sample period `dt`.
    pub fn discretize(&self, dt: T) -> Result<DiscreteTf<T>> {
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(HigsError::InvalidTimeStep(dt.to_f64_lossy()));
        }
        let k = T::lit(2.0) / dt;
        let sections = self
            .sections
            .iter()
            .map(|s| {
                let d0 = k + s.pole;
                DiscreteSection {
                    n0: (s.num_s * k + s.num_0) / d0,
                    n1: (s.num_0 - s.num_s * k) / d0,
                    d1: (s.pole - k) / d0,
                    x_prev: T::zero(),
                    y_prev: T::zero(),
                }
            })
            .collect();
        Ok(DiscreteTf {
            gain: self.gain,
            sections,
            dt,
        })
    }
}

#[derive(Debug, Clone)]
struct DiscreteSection<T> {
    n0: T,
    n1: T,
    d1: T,
    x_prev: T,
    y_prev: T,
}

impl<T: Real> DiscreteSection<T> {
    fn step(&mut self, x: T) -> T {
        let y = self.n0 * x + self.n1 * self.x_prev - self.d1 * self.y_prev;
        self.x_prev = x;
        self.y_prev = y;
        y
    }
}

/// Stateful sampled realization of a [`ContinuousTf`], starting at rest.
#[derive(Debug, Clone)]
pub struct DiscreteTf<T> {
    gain: T,
    sections: Vec<DiscreteSection<T>>,
    dt: T,
}

impl<T: Real> DiscreteTf<T> {
    pub fn step(&mut self, x: T) -> T {
        self.sections
            .iter_mut()
            .fold(self.gain * x, |acc, s| s.step(acc))
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn reset(&mut self) {
        for s in &mut self.sections {
            s.x_prev = T::zero();
            s.y_prev = T::zero();
        }
    }
}
