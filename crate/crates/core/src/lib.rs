//! Link-budget, memory and key-rate models for a quantum-memory-equipped
//! low-Earth-orbit satellite that distributes entanglement to two ground
//! stations.
//!
//! The crate compares two architectures: a simultaneous dual downlink at low
//! elevation, and a buffered scheme in which the satellite holds one half of
//! each pair in an onboard memory while it flies from one station's zenith to
//! the other's.
//!
//! - [`geometry`]: pass geometry and orbital timing
//! - [`linkbudget`]: per-link optical efficiency
//! - [`afc`]: atomic-frequency-comb memory efficiency
//! - [`spindyn`]: radial spin-exchange and diffusion solver
//! - [`skr`]: asymptotic BB84 key rate
//! - [`scenario`]: the architecture comparison and parameter maps
//! - [`config`]: flat key-value run configuration

pub mod afc;
pub mod config;
mod error;
pub mod format;
pub mod geometry;
pub mod linkbudget;
pub mod scenario;
pub mod skr;
pub mod spindyn;

pub use error::{Error, Result};
