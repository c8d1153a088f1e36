//! Models and tools for wireless power transfer with nonlinear rectennas.
//!
//! The crate covers two harvester models (a Taylor-series diode model and a
//! log-polynomial curve fit), closed-form and numerically integrated
//! fading/transmit-diversity gains, baseband waveform synthesis, Monte Carlo
//! oracles and a small transient rectifier simulator.

pub mod error;
pub mod gain;
pub mod circuit;
pub mod cli;
pub mod harvester;
pub mod manifest;
pub mod monte_carlo;
pub mod quadrature;
pub mod rng;
pub mod signal;
pub mod units;

pub(crate) mod linalg;

pub use error::{Error, Result};
