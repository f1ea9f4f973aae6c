use serde::{Deserialize, Serialize};

use super::{Matrix, Scalar};
use crate::error::Result;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam moments for one parameter matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState<T = f32> {
    pub m: Matrix<T>,
    pub v: Matrix<T>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        AdamState { m: Matrix::zeros(rows, cols), v: Matrix::zeros(rows, cols), t: 0 }
    }

    pub fn for_param(param: &Matrix<T>) -> Self {
        Self::new(param.rows(), param.cols())
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_step<T: Scalar>(param: &mut Matrix<T>, grad: &Matrix<T>, state: &mut AdamState<T>, lr: f64) -> Result<()> {
    param.check_same_shape(grad)?;
    param.check_same_shape(&state.m)?;
    param.check_same_shape(&state.v)?;
    state.t += 1;
    let b1 = T::of_f64(BETA1);
    let b2 = T::of_f64(BETA2);
    let one = T::one();
    let bc1 = 1.0 - BETA1.powi(state.t as i32);
    let bc2 = 1.0 - BETA2.powi(state.t as i32);
    let step = T::of_f64(lr / bc1);
    let inv_bc2 = T::of_f64(1.0 / bc2);
    let eps = T::of_f64(EPSILON);
    let p = param.as_mut_slice();
    let m = state.m.as_mut_slice();
    let v = state.v.as_mut_slice();
    for (((p, &g), m), v) in p.iter_mut().zip(grad.as_slice()).zip(m).zip(v) {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        *p = *p - step * *m / ((*v * inv_bc2).sqrt() + eps);
    }
    Ok(())
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm<T: Scalar>(grads: &mut [&mut Matrix<T>], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g.sum_sq()).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = T::of_f64(max_norm / norm);
        for g in grads.iter_mut() {
            g.scale(s);
        }
    }
    norm
}
