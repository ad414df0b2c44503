//! Exact spectral data for the flat torus: eigenmodes, heat semigroup,
//! smoothing operators, the regularized Green's function and the Wick
//! variance, plus the pseudo-spectral grid transform.

mod basis;
mod field;
mod green;
mod grid;

pub use basis::{
    enumerate_modes, enumerate_modes_capped, weyl_ratio, weyl_ratio_from_eigenvalues, BasisSummary, ModeIndex, Point,
    SpectralBasis, TorusGeometry, DEFAULT_MODE_CAP,
};
pub use field::{heat_semigroup, smooth_pn, ScalarField, Smoothing};
pub use green::{
    check_resolution, green_log_comparison, green_regularized, green_regularized_with, sigma_n, sigma_n_with,
    wick_variance, GreenComparison, RESOLUTION_FACTOR,
};
pub use grid::{GridField, GridTransform, PSEUDO_SPECTRAL_FACTOR};
