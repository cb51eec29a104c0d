//! Spin–photon coupling toolkit: the cutoff kernel, the second-order spin
//! operator A_M, classical field energies and a truncated Fock-space check.

pub mod cli;
pub mod cutoff;
pub mod error;
pub mod field_energy;
pub mod fock;
pub mod kernel;
pub mod quadrature;
pub mod special;
pub mod spin_algebra;
pub mod spin_operator;

pub use cutoff::{CutoffProfile, ProfileKind};
pub use error::{Error, Result};
pub use kernel::{kernel_matrix, KernelCache, KernelMatrix};
pub use spin_algebra::{ProductState, Spin};
pub use spin_operator::{assemble_am, ground_eigenspace, HermitianSpinOperator, SpinSystem};
