//! Shared fixtures for the kernel benchmarks.

use std::sync::Arc;

use liouville_core::dynamics::{GalerkinEnergy, GalerkinParams};
use liouville_core::gmc::PunctureSet;
use liouville_core::lqg::LqgParams;
use liouville_core::spectral::{enumerate_modes, Point, SpectralBasis, TorusGeometry};

pub fn basis(cutoff: f64) -> Arc<SpectralBasis> {
    Arc::new(enumerate_modes(TorusGeometry::standard(), cutoff).expect("valid cutoff"))
}

pub fn unit_puncture() -> PunctureSet {
    PunctureSet::single(Point::new(1.0, 1.0), 1.0)
}

/// `β = 1`, `ν = 1`, one unit charge, smoothing scale `n`.
pub fn lqg(n: f64) -> LqgParams {
    LqgParams::torus(1.0, 1.0, unit_puncture(), n).expect("valid parameters")
}

/// The Galerkin energy of the full invariance case.
pub fn galerkin() -> GalerkinEnergy {
    let p = GalerkinParams::new(1.0, 1.0, 8.0, unit_puncture(), 8.0);
    GalerkinEnergy::new(TorusGeometry::standard(), &p).expect("valid energy")
}
