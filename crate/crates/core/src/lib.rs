//! Projected ensembles, k-design diagnostics and bitstring-based fidelity
//! estimation for small quantum many-body systems.
//!
//! The crate covers the full pipeline: enumerate a (possibly blockaded) basis,
//! build a Hamiltonian or random circuit, evolve exactly or with noise, build
//! projected ensembles from bipartite measurements, and estimate fidelities
//! from sampled bitstrings.

pub mod analysis;
pub mod bench;
pub mod ensemble;
pub mod error;
pub mod evolve;
pub mod hilbert;
pub mod learn;
pub mod linalg;
pub mod models;
pub mod random;
pub mod stats;

pub use error::{Error, Result};
