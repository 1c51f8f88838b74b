//! Stochastic unravelings of open quantum dynamics that start from
//! correlated system-environment states.
//!
//! The global state is split with a one-sided positive decomposition
//! into a frame of system operators and genuine environment states. Each
//! frame operator is a difference of two density operators, each of which
//! is unraveled with one of the trajectory engines and recombined.

pub mod error;
pub mod exact;
pub mod frames;
pub mod generators;
pub mod harness;
pub mod operator;
pub mod quadrature;
pub mod random;
pub mod unravel;

pub use error::{Error, Result};
