//! Denoising autoencoders trained under noise schedules.
//!
//! The crate trains tied-weight denoising autoencoders at a fixed noise
//! level, under a schedule of decreasing (or increasing) levels, with a
//! level sampled per minibatch, or as a composite model whose hidden
//! partitions each see their own level. Learned representations are scored
//! with L2-regularized logistic regression, and feature sets from different
//! models are compared through cosine similarity of activation vectors.
//!
//! All arithmetic is `f64` and every random draw comes from a seeded
//! [`numerics::Rng`], so a run is a pure function of its configuration.

pub mod analysis;
mod codec;
pub mod composite;
pub mod corruption;
pub mod dae;
pub mod data;
mod error;
pub mod eval;
pub mod numerics;
pub mod schedule;

pub use error::{Error, Result};
