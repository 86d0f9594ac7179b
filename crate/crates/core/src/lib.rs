//! Ergotropy and daemonic ergotropy of continuously-monitored open quantum
//! systems.
//!
//! The crate is `no_std` (it needs `alloc`) and carries the numerical core:
//!
//! - [`qmat`]: dense complex matrices, density matrices and a Jacobi
//!   Hermitian eigensolver, with a 2×2 fast path.
//! - [`ergotropy`]: energy, ergotropy, passive states and the daemonic
//!   ergotropy of an explicit bipartite state measured with a POVM.
//! - [`lindblad`]: the unconditional master equation, a fourth-order
//!   Runge–Kutta propagator and the Liouvillian steady state.
//! - [`trajectories`]: stochastic master equation steppers for
//!   photo-detection, homodyne and heterodyne unravellings.
//! - [`battery`]: the driven, spontaneously-emitting qubit battery and its
//!   closed-form steady state.
//! - [`daemonic`]: ensemble Monte Carlo over trajectories, bounds checks and
//!   steady-state sweeps. Parallelism is supplied by an [`daemonic::Executor`].
//!
//! File formats, configuration and the command line live in the `daemonic`
//! companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod battery;
pub mod daemonic;
pub mod ergotropy;
pub mod lindblad;
pub mod qmat;
pub mod trajectories;

pub use num_complex::Complex64 as C64;
