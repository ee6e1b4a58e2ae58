//! Sampled single-input single-output blocks and their composition.

use crate::error::Result;
use crate::lti::{ContinuousTf, DiscreteTf};
use crate::scalar::Real;

/// A causal sampled-data element advanced one sample at a time.
pub trait Block<T> {
    fn step(&mut self, input: T) -> Result<T>;

    /// Sample period the block was built for.
    fn dt(&self) -> T;
}

impl<T, B: Block<T> + ?Sized> Block<T> for Box<B> {
    fn step(&mut self, input: T) -> Result<T> {
        (**self).step(input)
    }

    fn dt(&self) -> T {
        (**self).dt()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Gain<T> {
    pub gain: T,
    pub dt: T,
}

impl<T: Real> Block<T> for Gain<T> {
    fn step(&mut self, input: T) -> Result<T> {
        Ok(self.gain * input)
    }

    fn dt(&self) -> T {
        self.dt
    }
}

/// Linear block realized from a continuous transfer function.
#[derive(Debug, Clone)]
pub struct LinearBlock<T> {
    filter: DiscreteTf<T>,
}

impl<T: Real> LinearBlock<T> {
    pub fn new(tf: &ContinuousTf<T>, dt: T) -> Result<Self> {
        Ok(Self {
            filter: tf.discretize(dt)?,
        })
    }
}

impl<T: Real> Block<T> for LinearBlock<T> {
    fn step(&mut self, input: T) -> Result<T> {
        Ok(self.filter.step(input))
    }

    fn dt(&self) -> T {
        self.filter.dt()
    }
}

/// Blocks applied one after another.
pub struct Series<T> {
    stages: Vec<Box<dyn Block<T> + Send>>,
    dt: T,
}

impl<T: Real> Series<T> {
    pub fn new(dt: T) -> Self {
        Self {
            stages: Vec::new(),
            dt,
        }
    }

    pub fn then(mut self, block: impl Block<T> + Send + 'static) -> Self {
        self.stages.push(Box::new(block));
        self
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }
}

impl<T: Real> Block<T> for Series<T> {
    fn step(&mut self, input: T) -> Result<T> {
        self.stages.iter_mut().try_fold(input, |x, b| b.step(x))
    }

    fn dt(&self) -> T {
        self.dt
    }
}
