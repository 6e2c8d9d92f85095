//! Pulse-level simulation of two-qubit gates in an exchange-coupled dimer of
//! spin-1 molecular nanomagnets operated at their zero-field clock transitions.

pub mod cli;
pub mod error;
pub mod evolve;
pub mod fidelity;
pub mod format;
pub mod model;
pub mod operator;
pub mod pulses;
pub mod spectrum;

pub use error::{Error, Result};
