//! Stochastic quantization dynamics: the decomposition `u = Ψ + z + v` with a
//! sign-preserving exponential integrator for `v`, and the finite-dimensional
//! Langevin and MALA dynamics of the truncated Gibbs measure.

mod drift;
mod galerkin;
mod invariance;
mod remainder;

pub use drift::{drift_z, DriftZ, ZeroModePath};
pub use galerkin::{
    langevin_step, langevin_step_with_noise, mala_step, Energy, GalerkinEnergy, GalerkinParams, MalaChain,
};
pub use invariance::{invariance_test, InvarianceConfig, InvarianceObservable, InvarianceReport, ObservableComparison};
pub use remainder::{
    assemble_u, energy_difference_monitor, girsanov_shift_back, nonlinearity, AssembledField, EnergyPoint,
    RemainderSolver, RemainderState, RichardsonPair, Simulation, StepReport, StepTables, Trajectory, SIGN_TOLERANCE,
};
