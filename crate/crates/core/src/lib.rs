//! Numerical laboratory for the viscous Hamilton-Jacobi equation
//! `∂_t u - Δu + |∇u|^q = 0` at the critical exponent `q★ = (N+2)/(N+1)`.
//!
//! The large-time behavior `u(t) ≈ M★ (ln t)^{-(N+1)} g(t)` is studied in
//! similarity variables `ξ = x/(1+t)^{1/2}`, `τ = ln(1+t)`, where the
//! equation becomes the autonomous problem `∂_τ v = L v - |∇v|^{q★}` with
//! `L v = Δv + ½ ξ·∇v + (N/2) v`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod error;
pub mod field;
pub mod fit;
pub mod gaussian;
pub mod grid;
pub mod initial;
pub mod norms;
pub mod operators;
pub mod physical;
pub mod similarity;
pub mod oracle;
pub mod reduced;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{ScalarField, WeightParams};
pub use gaussian::CriticalData;
pub use grid::Grid;
