//! Sampled functions on a [`Grid`].

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Samples of a real function on a grid.
///
/// All public constructors reject non-finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(Self { grid, values })
    }

    /// Wraps values produced by an operator that cannot create non-finite
    /// output from finite input.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_raw(grid, vec![0.0; grid.len()])
    }

    /// Samples `f` at every node; `f` receives `[x1, x2]` (with `x2 = 0` in 1-D).
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.point(k))).collect();
        Self::from_raw(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(Self::from_raw(self.grid, values))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest magnitude among boundary samples.
    pub fn boundary_max_abs(&self) -> f64 {
        (0..self.grid.len())
            .filter(|&k| self.grid.is_boundary(k))
            .fold(0.0, |m, k| m.max(self.values[k].abs()))
    }

    pub fn value_at_origin(&self) -> f64 {
        self.values[self.grid.origin_index()]
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Exponent of the weight `1 + |xi|^{2m}` of the spaces `L^2_m` and `H^1_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    m: f64,
}

impl WeightParams {
    /// Requires `m > dim / 2`, the condition under which the weighted space
    /// embeds in `L^1` and the kernel of the linearization is isolated.
    pub fn new(m: f64, dim: usize) -> Result<Self> {
        let half_dim = dim as f64 / 2.0;
        if !(m.is_finite() && m > half_dim) {
            return Err(Error::WeightExponent { m, half_dim });
        }
        Ok(Self { m })
    }

    /// `m = N/2 + 1/2`.
    pub fn default_for(dim: usize) -> Self {
        Self {
            m: dim as f64 / 2.0 + 0.5,
        }
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `1 + |xi|^{2m}` given `|xi|^2`.
    pub fn weight(&self, radius_sq: f64) -> f64 {
        1.0 + radius_sq.powf(self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_wrong_length() {
        let g = Grid::new(1, 10.0, 17).unwrap();
        let mut v = vec![0.0; 17];
        v[3] = f64::NAN;
        assert_eq!(ScalarField::new(g, v), Err(Error::NonFinite(3)));
        assert!(matches!(
            ScalarField::new(g, vec![0.0; 16]),
            Err(Error::LengthMismatch { expected: 17, got: 16 })
        ));
    }

    #[test]
    fn weight_exponent_bound() {
        assert!(WeightParams::new(0.5, 1).is_err());
        assert!(WeightParams::new(0.51, 1).is_ok());
        assert!(WeightParams::new(1.0, 2).is_err());
        assert!(WeightParams::new(1.5, 2).is_ok());
        assert!(WeightParams::new(f64::NAN, 1).is_err());
    }

    #[test]
    fn combine_requires_same_grid() {
        let a = ScalarField::zeros(Grid::new(1, 10.0, 17).unwrap());
        let b = ScalarField::zeros(Grid::new(1, 10.0, 19).unwrap());
        assert_eq!(a.add(&b), Err(Error::GridMismatch));
    }
}
