//! Dense-matrix approximate Bayesian inference for latent Gaussian models.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, worker pools
//! and the command line live in the companion `denseinla` crate.
#![no_std]

extern crate alloc;

pub mod constraints;
mod error;
pub mod fit;
pub mod linalg;
pub mod math;
pub mod model;
pub mod schedule;
pub mod sim;
pub mod stage1;
pub mod stage2;

pub use error::InferenceError;
