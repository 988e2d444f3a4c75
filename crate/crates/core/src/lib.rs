//! Decision-feedback iterative channel estimation and multiuser detection for
//! synchronous multipath DS-CDMA.
//!
//! The crate has two halves that are meant to be used against each other:
//!
//! * a link-level simulator ([`model`], [`estimator`], [`detector`], [`codec`],
//!   [`pipeline`]) that synthesizes received chips, estimates channels from
//!   training and hard decision feedback, runs LMMSE / PIC+MRC detection and
//!   channel decoding, and measures what actually happens;
//! * the large-system analytic model ([`analysis`], [`rmt`]) that predicts the
//!   same quantities in closed form: estimation error variance, residual
//!   interference, the scalar iterative map `Pe -> g(D0 + D1 Pe)` with its
//!   fixed-point certificates, the asymptotic multiuser efficiency, and the
//!   eigenvalue moments of the stacked code matrix.
//!
//! Everything here is `no_std` + `alloc` and free of I/O. Monte Carlo drivers
//! take a [`TrialExecutor`] so a std host can fan trials out over threads while
//! staying bit-reproducible: every trial draws from its own stream derived from
//! `(master seed, experiment id, trial index)`, and results are reduced in
//! trial order.

#![no_std]
// `num_traits::Float` provides sqrt/exp/... where `core` lacks float math;
// newer toolchains resolve the inherent methods and flag the import.
#![allow(unused_imports)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod codec;
pub mod config;
pub mod detector;
pub mod error;
pub mod estimator;
pub mod executor;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod rmt;
pub mod rng;
pub mod stats;

pub use config::{CodeModel, SystemConfig};
pub use error::{Error, Result};
pub use executor::{Sequential, TrialExecutor};
pub use linalg::C64;
