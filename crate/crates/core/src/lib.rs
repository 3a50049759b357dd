//! Simulation toolkit for selective coherent destruction of tunneling in a
//! driven two-mode boson system and its classical-optics realization.
//!
//! The library is organized around two views of the same dynamics:
//!
//! * The Fock-space view: the (N+1)-dimensional two-mode boson Hilbert space
//!   is an effective tight-binding chain with engineered couplings and a
//!   sinusoidally driven on-site term ([`lattice`], [`evolve`], [`floquet`],
//!   [`averaging`]).
//! * The optical view: a longitudinally modulated waveguide array whose
//!   paraxial light transport reproduces the chain dynamics ([`bpm`],
//!   [`designer`]).
//!
//! All rates are in mm⁻¹ and the evolution variable is propagation distance
//! in mm; transverse lengths in the optical modules are in μm.

// `!(x > 0.0)`-style guards are deliberate: they reject NaN along with the
// out-of-range value, which `x <= 0.0` would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod bpm;
pub mod designer;
pub mod error;
pub mod evolve;
pub mod floquet;
pub mod lattice;
pub mod linalg;

pub use error::{Error, Result};
