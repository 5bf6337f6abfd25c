//! Probes of the linear operator `L` in the weighted space `L²_m`.
//!
//! `L` has the eigenvalues `-k/2` with the Hermite-type eigenfunctions
//! `∂^α G`, `|α| = k`. `P₀ w = (∫w) G` projects onto the kernel and
//! `Q₀ = I - P₀` onto its complement, on which the linear semigroup decays.

use crate::error::{Error, Result};
use crate::field::{ScalarField, WeightParams};
use crate::fit::decay_rate;
use crate::gaussian::gaussian_profile;
use crate::grid::Grid;
use crate::norms::{integrate, weighted_l2_norm};
use crate::operators::apply_L;
use crate::similarity::{Absorption, Integrator, Nonlinearity, SimilarityState, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProbeResult {
    pub mode_label: String,
    pub measured_rate: f64,
    pub expected_rate: f64,
    pub residual: f64,
    pub weight_m: f64,
}

/// Samples of `G` rescaled to unit discrete mass, so that the discrete
/// `P₀` is an exact projection. The factor differs from 1 by the Gaussian
/// tail outside the box.
fn unit_profile(grid: &Grid) -> ScalarField {
    let g = gaussian_profile(grid);
    let mass = integrate(&g);
    g.scale(1.0 / mass)
}

/// `(∫w) G`.
pub fn project_p0(w: &ScalarField) -> ScalarField {
    unit_profile(w.grid()).scale(integrate(w))
}

/// `w - (∫w) G`.
pub fn project_q0(w: &ScalarField) -> ScalarField {
    w.combine(1.0, &unit_profile(w.grid()), -integrate(w))
        .expect("profile sampled on the same grid")
}

/// `∂₁^k G` for `k ∈ {0, 1, 2}`.
pub fn hermite_mode(grid: &Grid, k: usize) -> Result<ScalarField> {
    let g = gaussian_profile(grid);
    let factor: fn(f64) -> f64 = match k {
        0 => |_| 1.0,
        1 => |x| -0.5 * x,
        2 => |x| 0.25 * x * x - 0.5,
        _ => {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: format!("mode index must be 0, 1 or 2, got {k}"),
            })
        }
    };
    let values = g
        .values()
        .iter()
        .enumerate()
        .map(|(idx, v)| factor(grid.point(idx)[0]) * v)
        .collect();
    ScalarField::new(*grid, values)
}

/// `‖L f + (k/2) f‖_∞ / ‖f‖_∞` for `f = ∂₁^k G`.
///
/// `measured_rate` is the Rayleigh quotient `-⟨L f, f⟩ / ⟨f, f⟩`.
pub fn eigenmode_residual(grid: &Grid, k: usize) -> Result<SpectralProbeResult> {
    let f = hermite_mode(grid, k)?;
    let lf = apply_L(&f);
    let expected = 0.5 * k as f64;
    let residual = lf.combine(1.0, &f, expected)?.max_abs() / f.max_abs();
    let num: f64 = lf.values().iter().zip(f.values()).map(|(a, b)| a * b).sum();
    let den: f64 = f.values().iter().map(|b| b * b).sum();
    Ok(SpectralProbeResult {
        mode_label: format!("d{k}G"),
        measured_rate: -num / den,
        expected_rate: expected,
        residual,
        weight_m: f64::NAN,
    })
}

/// Upper bound `N/4 - m/2` of the essential spectrum in `L²_m`.
pub fn spectral_bound(m: f64, dim: usize) -> Result<f64> {
    if !(1..=2).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let half_dim = 0.5 * dim as f64;
    if !(m > half_dim) {
        return Err(Error::WeightExponent { m, half_dim });
    }
    Ok(0.25 * dim as f64 - 0.5 * m)
}

/// Rate predicted by the lowest non-vanishing moment of a mean-zero field:
/// `1/2` for a first moment, `1` for a second, `3/2` otherwise.
fn expected_rate(w: &ScalarField, scale: f64) -> f64 {
    let grid = w.grid();
    let tol = 1e-8 * scale;
    let moment = |p: &dyn Fn([f64; 2]) -> f64| -> f64 {
        w.values()
            .iter()
            .enumerate()
            .map(|(k, v)| grid.quadrature_weight(k) * p(grid.point(k)) * v)
            .sum::<f64>()
    };
    let first = moment(&|x| x[0]).abs() + moment(&|x| x[1]).abs();
    if first > tol {
        return 0.5;
    }
    let second = moment(&|x| x[0] * x[0]).abs()
        + moment(&|x| x[0] * x[1]).abs()
        + moment(&|x| x[1] * x[1]).abs();
    if second > tol {
        1.0
    } else {
        1.5
    }
}

/// Fits the decay rate of `|Q₀ v(τ)|_m` under the linear flow, sampled at
/// unit spacing in `tau_window`.
///
/// Data with no component in the range of `Q₀` (`|Q₀ w0|_m ≤ 10⁻¹² |w0|_m`)
/// has nothing to fit and yields [`Error::Inconclusive`]; so does a window
/// in which `|Q₀ v|_m` drops to that floor.
pub fn semigroup_decay_rate(
    w0: &ScalarField,
    m: &WeightParams,
    tau_window: (f64, f64),
) -> Result<SpectralProbeResult> {
    let (start, end) = tau_window;
    if !(start >= 0.0 && end >= start + 2.0) {
        return Err(Error::InvalidParameter {
            name: "tau_window",
            reason: format!("need 0 <= start and at least two units of length, got [{start}, {end}]"),
        });
    }
    let size = weighted_l2_norm(w0, m);
    if !(size > 0.0) {
        return Err(Error::InvalidParameter {
            name: "w0",
            reason: "must be nontrivial".into(),
        });
    }
    let floor = 1e-12 * size;
    let q0 = project_q0(w0);
    if weighted_l2_norm(&q0, m) <= floor {
        return Err(Error::Inconclusive(
            "not applicable: the data lies in the kernel of L, Q0 w vanishes".into(),
        ));
    }

    let grid = *w0.grid();
    let cfg = SolverConfig {
        nonlinearity: Nonlinearity::Off,
        ..SolverConfig::default_for(&grid, end)
    };
    let mut integrator = Integrator::new(&grid, &cfg, None, Absorption::critical(grid.dim()))?;
    let mut state = SimilarityState::new(0.0, w0.clone());
    let mut taus = Vec::new();
    let mut norms = Vec::new();
    let samples = (end - start).floor() as usize;
    for i in 0..=samples {
        let tau = start + i as f64;
        integrator.advance_to(&mut state, tau)?;
        let n = weighted_l2_norm(&project_q0(&state.field), m);
        if n <= floor {
            return Err(Error::Inconclusive(format!(
                "|Q0 v|_m reached the quadrature floor at tau={tau}"
            )));
        }
        taus.push(tau);
        norms.push(n);
    }
    let rate = decay_rate(&taus, &norms)
        .ok_or_else(|| Error::Inconclusive("degenerate decay fit".into()))?;
    let expected = expected_rate(&q0, size);
    Ok(SpectralProbeResult {
        mode_label: format!("Q0 flow over [{start}, {end}]"),
        measured_rate: rate,
        expected_rate: expected,
        residual: (rate - expected).abs(),
        weight_m: m.m(),
    })
}
