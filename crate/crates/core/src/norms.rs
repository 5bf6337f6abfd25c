//! Trapezoidal quadrature and the norms built on it.

use crate::error::{Error, Result};
use crate::field::{ScalarField, WeightParams};
use crate::operators::gradient;

/// Trapezoidal rule over the whole grid.
pub fn integrate(f: &ScalarField) -> f64 {
    let g = f.grid();
    f.values()
        .iter()
        .enumerate()
        .map(|(k, v)| g.quadrature_weight(k) * v)
        .sum()
}

/// `L^p` norm for `p >= 1`; pass `f64::INFINITY` for the sup norm.
pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::NormExponent(p));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let g = f.grid();
    let sum: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| g.quadrature_weight(k) * v.abs().powf(p))
        .sum();
    Ok(if p == 1.0 { sum } else { sum.powf(1.0 / p) })
}

pub fn l1_norm(f: &ScalarField) -> f64 {
    lp_norm(f, 1.0).expect("p = 1 is admissible")
}

pub fn l2_norm(f: &ScalarField) -> f64 {
    lp_norm(f, 2.0).expect("p = 2 is admissible")
}

/// Squared weighted norm `∫ (1 + |ξ|^{2m}) f^2`.
pub fn weighted_l2_norm_sq(f: &ScalarField, w: &WeightParams) -> f64 {
    let g = f.grid();
    f.values()
        .iter()
        .enumerate()
        .map(|(k, v)| g.quadrature_weight(k) * w.weight(g.radius_sq(k)) * v * v)
        .sum()
}

/// `|f|_m = (∫ (1 + |ξ|^{2m}) f^2 dξ)^{1/2}`.
pub fn weighted_l2_norm(f: &ScalarField, w: &WeightParams) -> f64 {
    weighted_l2_norm_sq(f, w).sqrt()
}

/// `‖f‖_m = (|f|_m^2 + |∇f|_m^2)^{1/2}` with the discrete gradient.
pub fn h1m_norm(f: &ScalarField, w: &WeightParams) -> f64 {
    h1m_norm_sq(f, w).sqrt()
}

pub fn h1m_norm_sq(f: &ScalarField, w: &WeightParams) -> f64 {
    gradient(f)
        .iter()
        .fold(weighted_l2_norm_sq(f, w), |acc, d| acc + weighted_l2_norm_sq(d, w))
}

/// Quadrature inner product `∫ f g`.
pub fn inner(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.check_same_grid(g)?;
    let grid = f.grid();
    Ok(f.values()
        .iter()
        .zip(g.values())
        .enumerate()
        .map(|(k, (a, b))| grid.quadrature_weight(k) * a * b)
        .sum())
}
