//! Connectivity analysis and staleness-aware asynchronous federated learning
//! for urban air mobility (UAM) aircraft-to-ground networks.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure numerical
//! code: point-process sampling, channel models, the nested quadratures behind
//! the connectivity and staleness results, the Monte Carlo counterparts, a
//! pseudo-spectral Burgers solver for training data, a Fourier neural network
//! with hand-derived gradients, and the event-driven federated learning
//! runners. File formats, configuration and parallel orchestration live in the
//! `uam-sim` companion crate.
//!
//! All lengths are meters, all densities are per square meter (or per meter on
//! a corridor), powers are watts and times are seconds. Conversions from the
//! usual engineering units live in [`units`].

#![no_std]
#![forbid(unsafe_code)]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod afl;
pub mod analysis;
pub mod burgers;
pub mod channel;
pub mod error;
pub mod fft;
pub mod fno;
pub mod mcsim;
pub mod params;
pub mod pointproc;
pub mod quad;
pub mod rng;
pub mod units;

pub use error::{Error, Result};
pub use params::{ModelParams, RadiusModel};
pub use pointproc::{Corridor, NetworkRealization, Point2};
