//! Numerics for a hybrid spin/oscillator Werner-like mixture.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. It covers
//!
//! * [`fock`] and [`spin`]: truncated Fock space and two-level primitives,
//! * [`werner`]: state builders and the entropy / negativity / teleportation
//!   fidelity metrics,
//! * [`tomography`]: the displaced-number-state forward model and the
//!   Fourier + least-squares inversion of all four spin blocks,
//! * [`montecarlo`]: finite-statistics acquisition with detector efficiency
//!   and linear error propagation,
//! * [`wigner`]: Wigner-function matrices on phase-space grids,
//! * [`trap`]: an ideal-pulse model of the Penning-trap preparation and the
//!   joint spin/number readout.
//!
//! Conventions: hybrid operators are indexed `spin * D + n` with spin `Up = 0`,
//! `Down = 1`. Two-qubit operators use the basis `{↓↓, ↓↑, ↑↓, ↑↑}`.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod fock;
pub mod linalg;
pub mod math;
pub mod montecarlo;
pub mod spin;
pub mod tomography;
pub mod trap;
pub mod werner;
pub mod wigner;

pub use error::{Error, Result};

/// Complex double used throughout the crate.
pub type C64 = num_complex::Complex<f64>;

pub use nalgebra::{self, DMatrix, DVector};

/// Default Fock cutoff dimension (states `|0⟩ … |31⟩`).
pub const DEFAULT_CUTOFF: usize = 32;
