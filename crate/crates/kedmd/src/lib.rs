//! Kernel EDMD surrogates of stochastic and control-affine dynamical systems,
//! with probabilistic Hilbert-Schmidt error certificates.

pub mod certificates;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod kedmd;
pub mod kernel;
pub mod rng;
pub mod surrogate;

pub use error::{Error, Result};
