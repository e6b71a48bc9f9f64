//! Optimal energy-eigenbasis truncation for quantum dynamics.

pub mod cli;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod pauli;
pub mod reduction;

pub use error::{Error, Result};
