//! Mixed-state circuit simulation and dissipative variational optimization
//! for preparing Gibbs states of small qubit rings.

pub mod ansatz;
pub mod channels;
mod circuit;
pub mod error;
pub mod harness;
pub mod hamiltonians;
mod kernels;
pub mod optimize;
pub mod qstate;
pub mod toymodel;
pub mod trajectories;

pub use circuit::{RESET_PARAMS, SU4_ANGLES};
pub use error::{Error, Result};
