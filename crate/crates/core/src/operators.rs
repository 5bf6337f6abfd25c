//! Second-order finite-difference operators.
//!
//! Boundary samples carry the homogeneous Dirichlet condition: the Laplacian
//! and the operator `L` vanish there, and interior stencils read the boundary
//! samples as they are (the solvers keep them at zero).

use crate::field::ScalarField;
use crate::grid::Grid;

/// Discrete gradient, one field per axis.
///
/// Central differences in the interior; along each axis the first and last
/// nodes use the one-sided second-order formula.
pub fn gradient(f: &ScalarField) -> Vec<ScalarField> {
    let grid = *f.grid();
    let n = grid.points_per_axis();
    let inv2h = 0.5 / grid.spacing();
    let v = f.values();

    let axis_derivative = |stride: usize, pos: usize, k: usize| -> f64 {
        if pos == 0 {
            (-3.0 * v[k] + 4.0 * v[k + stride] - v[k + 2 * stride]) * inv2h
        } else if pos == n - 1 {
            (3.0 * v[k] - 4.0 * v[k - stride] + v[k - 2 * stride]) * inv2h
        } else {
            (v[k + stride] - v[k - stride]) * inv2h
        }
    };

    match grid.dim() {
        1 => {
            let d = (0..n).map(|i| axis_derivative(1, i, i)).collect();
            vec![ScalarField::from_raw(grid, d)]
        }
        _ => {
            let mut d0 = vec![0.0; grid.len()];
            let mut d1 = vec![0.0; grid.len()];
            for i in 0..n {
                for j in 0..n {
                    let k = i * n + j;
                    d0[k] = axis_derivative(n, i, k);
                    d1[k] = axis_derivative(1, j, k);
                }
            }
            vec![
                ScalarField::from_raw(grid, d0),
                ScalarField::from_raw(grid, d1),
            ]
        }
    }
}

/// 3-point (1-D) or 5-point (2-D) Laplacian; zero on boundary nodes.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    let n = grid.points_per_axis();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let v = f.values();
    let mut out = vec![0.0; grid.len()];
    match grid.dim() {
        1 => {
            for i in 1..n - 1 {
                out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv_h2;
            }
        }
        _ => {
            for i in 1..n - 1 {
                for j in 1..n - 1 {
                    let k = i * n + j;
                    out[k] = (v[k + n] + v[k - n] + v[k + 1] + v[k - 1] - 4.0 * v[k]) * inv_h2;
                }
            }
        }
    }
    ScalarField::from_raw(grid, out)
}

/// The linearized similarity operator `L f = Δf + ½ ξ·∇f + (N/2) f`.
#[allow(non_snake_case)]
pub fn apply_L(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    let mut out = vec![0.0; grid.len()];
    InteriorStencil::new(&grid).apply(f.values(), |k, s| {
        out[k] = s.linear;
    });
    ScalarField::from_raw(grid, out)
}

/// Interior values of the operator `L` and of the squared gradient magnitude.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StencilValues {
    pub linear: f64,
    pub laplacian: f64,
    pub grad_sq: f64,
}

/// Fused interior kernel shared by the operators, the time steppers and the
/// diagnostics so that they see identical discretizations.
pub(crate) struct InteriorStencil {
    dim: usize,
    n: usize,
    inv2h: f64,
    inv_h2: f64,
    half_drift: Vec<f64>,
}

impl InteriorStencil {
    pub fn new(grid: &Grid) -> Self {
        let h = grid.spacing();
        Self {
            dim: grid.dim(),
            n: grid.points_per_axis(),
            inv2h: 0.5 / h,
            inv_h2: 1.0 / (h * h),
            half_drift: grid.axis().iter().map(|x| 0.5 * x).collect(),
        }
    }

    /// Calls `visit(k, values)` for every interior flat index `k`.
    pub fn apply(&self, v: &[f64], mut visit: impl FnMut(usize, StencilValues)) {
        let n = self.n;
        let growth = 0.5 * self.dim as f64;
        match self.dim {
            1 => {
                for i in 1..n - 1 {
                    let d = (v[i + 1] - v[i - 1]) * self.inv2h;
                    let lap = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * self.inv_h2;
                    visit(
                        i,
                        StencilValues {
                            linear: lap + self.half_drift[i] * d + growth * v[i],
                            laplacian: lap,
                            grad_sq: d * d,
                        },
                    );
                }
            }
            _ => {
                for i in 1..n - 1 {
                    let xi = self.half_drift[i];
                    for j in 1..n - 1 {
                        let k = i * n + j;
                        let d0 = (v[k + n] - v[k - n]) * self.inv2h;
                        let d1 = (v[k + 1] - v[k - 1]) * self.inv2h;
                        let lap =
                            (v[k + n] + v[k - n] + v[k + 1] + v[k - 1] - 4.0 * v[k]) * self.inv_h2;
                        visit(
                            k,
                            StencilValues {
                                linear: lap + xi * d0 + self.half_drift[j] * d1 + growth * v[k],
                                laplacian: lap,
                                grad_sq: d0 * d0 + d1 * d1,
                            },
                        );
                    }
                }
            }
        }
    }
}
