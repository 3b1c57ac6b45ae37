//! Quantum and classical three-wave interaction in a finite invariant
//! subspace.
//!
//! The quantum Hamiltonian restricted to fixed `(s2, s3)` is a real symmetric
//! tridiagonal matrix. This crate builds it, propagates states through it,
//! evaluates the linearized instability of `<n1>` and its classical analogue,
//! and analyzes the spectrum, the probability cascade and recurrences.

pub mod classical;
pub mod csv;
pub mod error;
pub mod evolve;
pub mod fock;
pub mod hamiltonian;
pub mod linear;
pub mod spectral;
mod tridiag;

pub use classical::{ClassicalLinearParams, ClassicalState, GrowthRate};
pub use error::{Error, Result};
pub use evolve::{EvolutionConfig, EvolutionResult, Method, Propagator};
pub use fock::{BasisState, Expectations, ObservableSnapshot, SubspaceSpec, WaveFunction};
pub use hamiltonian::TridiagonalHamiltonian;
pub use linear::{QuantumLinearParams, SpreadSpec};
pub use spectral::EigenSystem;

pub use num_complex::Complex64;
