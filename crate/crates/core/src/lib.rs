//! Exponential Euler time stepping for the semi-linear stochastic heat
//! equation on (0, 1) with additive Q-Wiener noise, spectrally truncated in
//! the Dirichlet sine basis, together with the closed-form Kolmogorov
//! machinery needed to evaluate weak errors exactly and to check the
//! weak-error representation formula numerically.
//!
//! The crate is `no_std` (it needs `alloc`). Anything that touches files,
//! threads, or an FFT backend lives in the companion harness crate, which
//! plugs into the [`exec::Executor`] and [`transform::SineTransform`] traits
//! defined here.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is the NaN-rejecting guard used for every input check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod math;

pub mod exec;
pub mod experiments;
pub mod kolmogorov;
pub mod nemytskij;
pub mod noise;
pub mod quadrature;
pub mod rate;
pub mod representation;
pub mod rng;
pub mod scheme;
pub mod spectral;
pub mod stats;
pub mod transform;

pub use error::{Error, Result};
pub use spectral::{eigenvalue, FractionalExponent, SemigroupTime, SpectralVector};
