//! Parallel quantum-state transfer and entanglement routing on programmable
//! networks of coupled oscillators or qubits.
//!
//! The crate is `no_std` (it needs `alloc`). It is organised bottom-up:
//!
//! - [`netgraph`]: hypercube / complete / custom topologies and the coupling
//!   matrices produced by programming node frequencies.
//! - [`modevo`]: the single-particle mode evolution `K(t) = exp(-iΩt)`, dense
//!   and factored (hypercube) paths.
//! - [`fidelity`]: closed-form Bell fidelities, cross-talk bounds and
//!   resonance location.
//! - [`fockoracle`]: exact many-body simulation of entanglement transfer for
//!   oscillator and hard-core (qubit) networks.
//! - [`routing`]: entanglement distribution schedules and their rates.
//!
//! Frequencies are angular (rad/s) and measured from a rotating frame, so only
//! detunings matter. Times are in seconds.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod fidelity;
pub mod fockoracle;
pub mod modevo;
pub mod netgraph;
pub mod routing;

mod linalg;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Swap time `T = π / (2Ω0)` of a resonant pair with coupling `Ω0` (rad/s).
#[inline]
pub fn transfer_time(coupling: f64) -> f64 {
    core::f64::consts::FRAC_PI_2 / coupling
}
