//! Compile nearest-neighbour verifier circuits into a translationally
//! invariant 2-local clock Hamiltonian on a ring of qudits, and certify its
//! low-lying spectrum against an independent history-state simulation.
//!
//! Module map:
//! - [`circuit`]: sweep schedules of two-qubit gates and the circuit text format.
//! - [`basis`]: qudit levels, ring configurations and the clock orbit.
//! - [`hamiltonian`]: bond terms, ring assembly, shift operator, sparse export.
//! - [`history`]: step-by-step history states and expectation values.
//! - [`spectral`]: dense and Lanczos eigensolvers, restrictions, chain models.
//! - [`promise`]: projection-lemma bounds and yes/no decisions.
//! - [`cli`]: command-line driver.

pub mod basis;
pub mod circuit;
pub mod cli;
pub mod error;
pub mod hamiltonian;
pub mod history;
pub mod promise;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
