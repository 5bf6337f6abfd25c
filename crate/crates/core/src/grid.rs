//! Uniform tensor grids on `[-L, L]^N`.

use crate::error::{Error, Result};

/// Uniform tensor grid on `[-half_width, half_width]^dim`.
///
/// Samples are stored in lexicographic order: for `dim == 2` the flat index
/// of `(i, j)` is `i * n + j`, with `i` running along the first axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
    spacing: f64,
}

impl Grid {
    /// Validated constructor for user-facing grids.
    ///
    /// `points_per_axis` must be odd so that the origin is a node.
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !half_width.is_finite() || half_width < 8.0 {
            return Err(Error::HalfWidthTooSmall(half_width));
        }
        Self::unchecked_width(dim, half_width, points_per_axis)
    }

    /// Same as [`Grid::new`] without the lower bound on the half width.
    ///
    /// Physical-space grids obtained by rescaling a similarity grid, and the
    /// coarse grids of some unit tests, go through here.
    pub fn unchecked_width(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if points_per_axis < 3 || points_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidPointCount(points_per_axis));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParameter {
                name: "half_width",
                reason: format!("must be positive and finite, got {half_width}"),
            });
        }
        Ok(Self {
            dim,
            half_width,
            points_per_axis,
            spacing: 2.0 * half_width / (points_per_axis - 1) as f64,
        })
    }

    /// The grid with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            half_width: self.half_width * factor,
            spacing: self.spacing * factor,
            ..*self
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Total number of samples, `n^N`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Axis coordinate of index `i`, `-L + i h`.
    ///
    /// Evaluated as `L (2i - (n-1)) / (n-1)` so that the middle node is
    /// exactly zero and the grid is exactly symmetric.
    pub fn coordinate(&self, i: usize) -> f64 {
        let last = (self.points_per_axis - 1) as f64;
        self.half_width * (2.0 * i as f64 - last) / last
    }

    pub fn axis(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|i| self.coordinate(i)).collect()
    }

    /// Multi-index of a flat index (first axis slowest).
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        let n = self.points_per_axis;
        match self.dim {
            1 => [idx, 0],
            _ => [idx / n, idx % n],
        }
    }

    /// Position of a flat index; the unused second entry is 0 in 1-D.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.unflatten(idx);
        match self.dim {
            1 => [self.coordinate(i), 0.0],
            _ => [self.coordinate(i), self.coordinate(j)],
        }
    }

    /// Squared Euclidean norm of the position of a flat index.
    pub fn radius_sq(&self, idx: usize) -> f64 {
        let [x, y] = self.point(idx);
        x * x + y * y
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let last = self.points_per_axis - 1;
        let [i, j] = self.unflatten(idx);
        match self.dim {
            1 => i == 0 || i == last,
            _ => i == 0 || i == last || j == 0 || j == last,
        }
    }

    /// Trapezoidal weight of a flat index (product of the 1-D weights).
    pub fn quadrature_weight(&self, idx: usize) -> f64 {
        let last = self.points_per_axis - 1;
        let axis_weight = |i: usize| {
            if i == 0 || i == last {
                0.5 * self.spacing
            } else {
                self.spacing
            }
        };
        let [i, j] = self.unflatten(idx);
        match self.dim {
            1 => axis_weight(i),
            _ => axis_weight(i) * axis_weight(j),
        }
    }

    pub fn quadrature_weights(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.quadrature_weight(k)).collect()
    }

    /// Stable step bound `h^2 / (4N)` for explicit schemes.
    pub fn explicit_step_limit(&self) -> f64 {
        self.spacing * self.spacing / (4.0 * self.dim as f64)
    }

    /// Flat index of the node nearest the origin (exact for odd `n`).
    pub fn origin_index(&self) -> usize {
        let c = (self.points_per_axis - 1) / 2;
        match self.dim {
            1 => c,
            _ => c * self.points_per_axis + c,
        }
    }
}
