//! Dense linear algebra, transfer functions and the seeded generator.
//!
//! Everything is `f64`. Matrices are row-major; a layer with weights `W`
//! of shape `hidden × input` maps a batch `X` (one example per row) to
//! `s(X · Wᵀ + b)`.

mod matrix;
mod rng;
mod transfer;

pub use matrix::Matrix;
pub use rng::{derive_seed, Rng};
pub use transfer::{relu, sigmoid, sigmoid_scalar, softplus, Transfer};
