//! Heralded multiphoton state engineering on a six-port Mach-Zehnder
//! interferometer: transfer matrices, closed-form heralded states, photon
//! moments, quadrature squeezing and parameter scans, together with a
//! brute-force Fock-space reference simulator.

pub mod error;
pub mod factorial;
pub mod genfunc;
pub mod moments;
pub mod oracle;
pub mod scan;
pub mod states;
pub mod unitary;

pub use error::{Error, Result};
