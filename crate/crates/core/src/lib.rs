//! Simulation of trapped-ion weak-value-amplification magnetometry.
//!
//! A ⁴⁰Ca⁺ qubit coupled to one vibrational mode through a Jaynes-Cummings
//! interaction picks up a tiny spin-dependent frequency `ω_g`. Post-selecting
//! the qubit on a state nearly orthogonal to its preparation transfers an
//! amplified displacement onto the vibrational mode, which can be kicked
//! repeatedly (a flywheel) and read out in phase space.
//!
//! Modules, bottom-up:
//!
//! - [`hilbert`]: dense qubit ⊗ Fock linear algebra, states and `expm`.
//! - [`model`]: physical constants, parameters and interaction Hamiltonians.
//! - [`zassenhaus`]: the expanded propagator, the effective unitary and the
//!   brute-force time-ordered oracle that checks it.
//! - [`protocol`]: post-selection, single kicks and flywheel accumulation.
//! - [`fisher`]: quantum and classical Fisher information budget.
//! - [`noise`]: qubit thermal damping with periodic πZ decoupling.
//! - [`phasespace`]: Husimi-Q grids of meter states.
//! - [`cli`]: config-driven batch runner behind the `wvamag` binary.

pub mod cli;
pub mod error;
pub mod fisher;
pub mod hilbert;
pub mod model;
pub mod noise;
pub mod phasespace;
pub mod protocol;
pub mod zassenhaus;

pub use error::{Error, Result};
