#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Phase algebra and metrology model for a two-level clock interferometer.
//!
//! Each spatial wave packet carries an internal superposition
//! `cos(θ/2)|2⟩ + sin(θ/2)|1⟩`; the packets acquire phases `φ₁`, `φ₂` on the
//! two levels and the interference phase is `arg⟨a|b⟩`. Near the working
//! point `φ₂ − φ₁ ≈ π` with a nearly balanced population the response to a
//! small relative rotation is strongly amplified while phase noise common to
//! both arms is not.
//!
//! The crate is `no_std` (with `alloc`) and contains only pure computations:
//!
//! - [`clock_state`]: total phase, visibility, slope and the
//!   dynamical/geometric decomposition.
//! - [`geodesic`]: enclosed solid angle of Bloch-sphere loops closed by a
//!   geodesic, an independent route to the geometric phase.
//! - [`interferogram`]: Gaussian-envelope fringe profiles, finite-atom
//!   sampling, binning and damped least-squares fitting.
//! - [`noise`]: quantum + technical noise budget, sensitivity and gain.
//!
//! File formats, scenarios and the command-line front end live in the
//! `clockphase` crate.

extern crate alloc;

pub mod clock_state;
mod error;
pub mod geodesic;
pub mod interferogram;
mod linalg;
pub mod noise;
pub mod phase;
pub mod seed;

pub use crate::error::{Error, Result};
