//! Dense linear algebra, probability helpers, Adam, seeded randomness and a
//! finite-difference gradient oracle.

mod adam;
mod gradcheck;
mod matrix;
mod prob;
mod rng;
mod scalar;

pub use adam::{adam_step, clip_global_norm, AdamState, BETA1, BETA2, EPSILON};
pub use gradcheck::{finite_diff_grad, max_relative_error, DEFAULT_STEP};
pub use matrix::{gemm, gemm_slice, sigmoid, Matrix, Trans};
pub use prob::{argmax, cross_entropy, softmax, softmax_in_place, softmax_rows, PROB_FLOOR};
pub use rng::Rng;
pub use scalar::Scalar;
