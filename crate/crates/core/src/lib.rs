//! Simulation and analysis toolkit for square-lattice Rydberg atom arrays.
//!
//! * [`lattice`] geometry and truncated van der Waals couplings
//! * [`worldline`] continuous imaginary-time configurations
//! * [`engine`] the quantum Monte Carlo chain
//! * [`observables`] order parameters and Monte Carlo statistics
//! * [`oracle`] exact diagonalization for small clusters
//! * [`lgw`] mean-field Landau theory
//! * [`scaling`] finite-size-scaling fits

pub mod engine;
pub mod error;
pub mod exec;
pub mod lattice;
pub mod lgw;
pub mod observables;
pub mod oracle;
pub mod scaling;
pub mod worldline;

pub use error::{Error, Result};
