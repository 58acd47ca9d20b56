//! Quantum Fourier models: spectrum analysis, circuit simulation and training.

pub mod analysis;
pub mod circuit;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod noise;
pub mod simulator;
mod spectral;
pub mod spectrum;
pub mod training;

pub use error::{Error, Result};
