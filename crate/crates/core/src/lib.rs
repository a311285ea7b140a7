//! Exact two-magnon dynamics of the spin-1/2 XXZ chain in a gradient field.

pub mod analysis;
pub mod basis;
pub mod error;
pub mod hamiltonian;
pub mod observables;
pub mod propagator;
pub mod spectrum;

pub use error::{Error, Result};
