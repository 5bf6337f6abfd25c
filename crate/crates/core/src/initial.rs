//! Initial data families.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::gaussian::{gaussian_profile, gaussian_value};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Gaussian,
    /// `α G`
    ScaledGaussian(f64),
    /// `G(ξ - ε e₁)`: unit mass, first moment `ε` along the first axis.
    GaussianPlusMoment(f64),
    /// Nodal values in the grid's flat order.
    Values(Vec<f64>),
}

impl InitialData {
    pub fn sample(&self, grid: &Grid) -> Result<ScalarField> {
        match self {
            Self::Gaussian => Ok(gaussian_profile(grid)),
            Self::ScaledGaussian(alpha) => {
                if !(alpha.is_finite() && *alpha >= 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "alpha",
                        reason: format!("must be non-negative, got {alpha}"),
                    });
                }
                Ok(gaussian_profile(grid).scale(*alpha))
            }
            Self::GaussianPlusMoment(eps) => {
                if !eps.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "epsilon",
                        reason: "must be finite".into(),
                    });
                }
                let dim = grid.dim();
                Ok(ScalarField::from_fn(*grid, |x| {
                    let d0 = x[0] - eps;
                    gaussian_value(dim, d0 * d0 + x[1] * x[1])
                }))
            }
            Self::Values(v) => ScalarField::new(*grid, v.clone()),
        }
    }
}
