//! Shared fixtures for the kernel benchmarks.

use hjcrit_core::gaussian::gaussian_profile;
use hjcrit_core::similarity::{SimilarityState, SolverConfig};
use hjcrit_core::Grid;

/// Gaussian state on the standard box `[-12, 12]^N` with `n` points per
/// axis, and the default solver settings for that grid.
pub fn gaussian_fixture(dim: usize, n: usize) -> (SimilarityState, SolverConfig) {
    let grid = Grid::new(dim, 12.0, n).expect("valid benchmark grid");
    let state = SimilarityState::new(0.0, gaussian_profile(&grid));
    (state, SolverConfig::default_for(&grid, 1.0))
}
