//! Pseudospectral search for periodic solutions of nonlinear Dirac equations
//! on the flat 3-torus.

pub mod clifford;
pub mod error;
pub mod field;
pub mod functional;
pub mod harness;
pub mod nonlinear;
pub mod rng;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
