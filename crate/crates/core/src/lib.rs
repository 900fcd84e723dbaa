//! Numerical model of an embedded quantum simulator for Rindler coordinate
//! transformations of a massless 1+1 Dirac field.
//!
//! The simulated field is encoded as a two-component spinor on an enlarged
//! space; a `σz` gate on that space realises the (unphysical) instantaneous
//! change to the accelerated frame.

pub mod coords;
pub mod embedding;
pub mod error;
pub mod evolution;
pub mod hamiltonian;
pub mod oracle;
pub mod runner;

pub use error::{Error, Result};
