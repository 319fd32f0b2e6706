//! Simulation of the Kirchhoff-law–Johnson-noise (KLJN) secure key exchange
//! under Eve's current-injection attack.
//!
//! The crate is organized bottom-up:
//!
//! - [`noise`]: band-limited Gaussian generators and Johnson-noise scaling.
//! - [`circuit`]: the KLJN loop, either an ideal wire or a lumped RLC ladder
//!   cable solved with trapezoidal integration.
//! - [`protocol`]: Alice's and Bob's side of a single bit exchange.
//! - [`attack`]: Eve's injected current, the end correlators and her guess.
//! - [`defense`]: instantaneous current comparison, plain and model-based.
//! - [`privacy`]: XOR-pair privacy amplification.
//! - [`harness`]: seeded Monte Carlo experiments, config parsing and CSV
//!   reports.

pub mod attack;
pub mod circuit;
pub mod defense;
mod error;
pub mod harness;
pub mod noise;
pub mod privacy;
pub mod protocol;
pub mod stats;

pub use error::{Error, Result};
pub use noise::Waveform;

/// Boltzmann constant in J/K (exact, SI 2019).
pub const BOLTZMANN: f64 = 1.380_649e-23;
