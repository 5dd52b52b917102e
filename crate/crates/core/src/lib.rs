//! Steered quantum annealing of the one-dimensional random-field Ising model.

pub mod error;
mod chebyshev;
pub mod ensemble;
pub mod evolution;
pub mod experiments;
mod hamiltonian;
pub mod model;
pub mod schedule;
pub mod spin;
pub mod steering;

pub use error::{Error, Result};
