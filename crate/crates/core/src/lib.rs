//! Simulation and annealing-based programming of multiport interferometers.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`] builds meshes of directional couplers and phase shifters and
//!   computes their transfer matrices and output powers.
//! * [`annealer`] holds the overlap fidelity objective and a Very Fast
//!   Simulated Annealing optimizer over phase vectors.
//! * [`hardware`] models the thermo-optic actuation chain: currents, thermal
//!   crosstalk, quantization, dissipated power, calibration fits and switch
//!   counting.
//! * [`experiments`] drives switching campaigns, capability sweeps,
//!   arbitrary target distributions and chip-length estimates.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod annealer;
pub mod error;
pub mod experiments;
pub mod hardware;
pub mod mesh;
pub mod rng;
pub mod table;

pub use annealer::{fidelity, infidelity, optimize, AnnealConfig, AnnealRun};
pub use error::{Error, Result};
pub use mesh::{
    build_mesh, Architecture, CouplerBlock, MeshLayout, PhaseVector, PowerDistribution, TransferMatrix,
    Transmissions,
};
