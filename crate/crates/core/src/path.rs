//! Continuous paths sampled on a grid with affine interpolation.

use crate::convex::Point;
use crate::error::{Error, Result};

/// A continuous path given by node values, interpolated affinely in time.
#[derive(Debug, Clone)]
pub struct SampledPath {
    times: Vec<f64>,
    values: Vec<Point>,
}

impl SampledPath {
    pub fn new(times: Vec<f64>, values: Vec<Point>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::Domain(
                "path needs matching times and values, at least two".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "path times must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, values })
    }

    pub fn constant(times: Vec<f64>, value: Point) -> Result<Self> {
        let values = vec![value; times.len()];
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Point] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn evaluate(&self, t: f64) -> Point {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1].clone();
        }
        let i = self.times.partition_point(|&s| s < t);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        &self.values[i - 1] * (1.0 - w) + &self.values[i] * w
    }

    /// Largest pointwise gap to `other` over the given probe times.
    pub fn sup_distance(&self, other: &SampledPath, probes: &[f64]) -> f64 {
        probes
            .iter()
            .map(|&t| (self.evaluate(t) - other.evaluate(t)).norm())
            .fold(0.0, f64::max)
    }
}
