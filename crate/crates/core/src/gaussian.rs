//! The heat-kernel profile and the constants of the critical problem.
//!
//! `G(ξ) = (4π)^{-N/2} exp(-|ξ|²/4)` spans the kernel of `L`. With
//! `q★ = (N+2)/(N+1)` the amplitude ODE reads `dM/dτ = -c M^{q★}` with
//! `c = ‖∇G‖_{q★}^{q★}`, and the universal amplitude of the decay law is
//! `M★ = (N+1)^{N+1} ‖∇G‖_{q★}^{-(N+2)}`.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;

/// Critical exponent `(N+2)/(N+1)`.
pub fn q_star(dim: usize) -> Result<f64> {
    if dim < 1 {
        return Err(Error::UnsupportedDimension(dim));
    }
    Ok((dim as f64 + 2.0) / (dim as f64 + 1.0))
}

/// `G` evaluated from `|ξ|²`.
pub fn gaussian_value(dim: usize, radius_sq: f64) -> f64 {
    (4.0 * PI).powf(-(dim as f64) / 2.0) * (-radius_sq / 4.0).exp()
}

/// Samples of `G` on `grid`.
pub fn gaussian_profile(grid: &Grid) -> ScalarField {
    let dim = grid.dim();
    let values = (0..grid.len())
        .map(|k| gaussian_value(dim, grid.radius_sq(k)))
        .collect();
    ScalarField::from_raw(*grid, values)
}

/// `g(t, x) = t^{-N/2} G(x / t^{1/2})`, the self-similar heat solution.
pub fn heat_self_similar(t: f64, grid: &Grid) -> Result<ScalarField> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("must be positive, got {t}"),
        });
    }
    if t == 1.0 {
        return Ok(gaussian_profile(grid));
    }
    let dim = grid.dim();
    let amp = t.powf(-(dim as f64) / 2.0);
    let values = (0..grid.len())
        .map(|k| amp * gaussian_value(dim, grid.radius_sq(k) / t))
        .collect();
    Ok(ScalarField::from_raw(*grid, values))
}

/// Surface measure of the unit sphere in `R^N`.
fn sphere_area(dim: usize) -> f64 {
    let half = dim as f64 / 2.0;
    2.0 * PI.powf(half) / gamma(half)
}

/// `∫ |∇G|^q dξ` in closed form.
///
/// With `|∇G| = (r/2) G(r)`, spherical coordinates reduce the integral to
/// `|S^{N-1}| (4π)^{-Nq/2} 2^{-q} ∫_0^∞ r^{q+N-1} e^{-q r²/4} dr`, and
/// `∫_0^∞ r^a e^{-b r²} dr = Γ((a+1)/2) / (2 b^{(a+1)/2})`.
pub fn grad_gaussian_power_integral(dim: usize, q: f64) -> f64 {
    let n = dim as f64;
    let a = q + n - 1.0;
    let b = q / 4.0;
    let radial = gamma((a + 1.0) / 2.0) / (2.0 * b.powf((a + 1.0) / 2.0));
    sphere_area(dim) * (4.0 * PI).powf(-n * q / 2.0) * 2f64.powf(-q) * radial
}

/// `‖∇G‖_{L^{q★}}`.
pub fn grad_g_qstar_norm(dim: usize) -> Result<f64> {
    check_dim(dim)?;
    let q = q_star(dim)?;
    Ok(grad_gaussian_power_integral(dim, q).powf(1.0 / q))
}

/// `M★ = (N+1)^{N+1} ‖∇G‖_{L^{q★}}^{-(N+2)}`.
pub fn m_star(dim: usize) -> Result<f64> {
    let norm = grad_g_qstar_norm(dim)?;
    let n = dim as f64;
    Ok((n + 1.0).powf(n + 1.0) * norm.powf(-(n + 2.0)))
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=2).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// Constants of the critical problem for one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalData {
    pub dim: usize,
    pub q_star: f64,
    /// `‖∇G‖_{L^{q★}}`
    pub grad_g_norm: f64,
    /// `‖∇G‖_{L^{q★}}^{q★}`, the dissipation constant of the amplitude ODE.
    pub c_mass: f64,
    pub m_star: f64,
}

impl CriticalData {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let q_star = q_star(dim)?;
        let c_mass = grad_gaussian_power_integral(dim, q_star);
        Ok(Self {
            dim,
            q_star,
            grad_g_norm: c_mass.powf(1.0 / q_star),
            c_mass,
            m_star: m_star(dim)?,
        })
    }
}
