//! Simulation of a spin-chain quantum battery charged either collectively
//! through an Ising coupling or spin by spin.
//!
//! The crate covers the lattice, the charging schedules, the Hamiltonian,
//! time propagation (pure and open), magnetization statistics, closed-form
//! fluctuation models and an experiment harness driving sweeps and fits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod krylov;
pub mod lattice;
pub mod models;
pub mod observables;
pub mod operators;
mod par;
pub mod propagate;
pub mod schedule;

pub use error::{Error, Result};
pub use lattice::{default_lattice, SpinLattice};
pub use models::{fit_scaling, ScalingFit};
pub use observables::{distribution, fluctuation, magnetization, sample_shots, stored_power};
pub use operators::{build_h, CrosstalkMode};
pub use propagate::{evolve_lindblad, evolve_unitary, DensityState, LindbladScheme, PropagationOptions, PureState};
pub use schedule::{Mode, Preset, ProtocolSchedule};

/// True when the crate was built with the data-parallel backend.
pub const fn is_parallel() -> bool {
    par::is_parallel()
}
