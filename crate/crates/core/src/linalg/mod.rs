//! Dense and sparse kernels, plus the reverse-mode tape used for training.

pub mod kernels;
mod matrix;
mod sparse;
pub mod tape;

pub use kernels::FeatureMatrix;
pub use matrix::{dot, Matrix};
pub use sparse::CsrMatrix;
pub use tape::{Gradients, Tape, Var};
