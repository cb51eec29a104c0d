//! Truncated Fock-space model of spins coupled to a discretized photon field.

mod checks;
mod grid;
mod lanczos;
mod space;

pub use grid::{build_mode_grid, discrete_am, discrete_kernel, mode_coefficients, Mode, ModeGrid, MODE_BUDGET};
pub use space::{build_hamiltonian, photon_number, FockHamiltonian, TruncatedFock, FOCK_DIM_BUDGET};
pub use lanczos::{ground_state, EigenOptions, EigenPairs, HermitianOperator};
pub use checks::{
    discrete_k_constant, fock_ground_state, multiplicity_scan, quadratic_fit, variational_trial_check,
    FitPoint, MultiplicityRow, QuadraticFit, VariationalCheck, DEFAULT_N_ANGULAR, DEFAULT_N_MAX,
    DEFAULT_N_RADIAL,
};
