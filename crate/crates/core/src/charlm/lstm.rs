//! Single-layer LSTM and affine output layer with batched, time-major
//! forward and backward passes. Gate order in every `4n` block is (i, f, g, o).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gemm_slice, sigmoid, Matrix, Rng, Scalar, Trans};

/// Hidden and cell vectors of one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmState<T = f32> {
    pub h: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Scalar> LstmState<T> {
    pub fn zeros(n: usize) -> Self {
        LstmState { h: vec![T::zero(); n], c: vec![T::zero(); n] }
    }

    pub fn hidden(&self) -> usize {
        self.h.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer<T = f32> {
    /// `4n × input`
    pub w_x: Matrix<T>,
    /// `4n × n`
    pub w_h: Matrix<T>,
    /// `1 × 4n`
    pub b: Matrix<T>,
}

impl<T: Scalar> LstmLayer<T> {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmLayer {
            w_x: Matrix::zeros(4 * hidden, input),
            w_h: Matrix::zeros(4 * hidden, hidden),
            b: Matrix::zeros(1, 4 * hidden),
        }
    }

    /// Uniform(-scale, scale) weights, zero biases except the forget gate.
    pub fn init(input: usize, hidden: usize, scale: f64, forget_bias: f64, rng: &mut Rng) -> Self {
        let mut layer = Self::zeros(input, hidden);
        for w in [&mut layer.w_x, &mut layer.w_h] {
            for x in w.as_mut_slice() {
                *x = T::of_f64(rng.uniform(-scale, scale));
            }
        }
        for x in &mut layer.b.as_mut_slice()[hidden..2 * hidden] {
            *x = T::of_f64(forget_bias);
        }
        layer
    }

    pub fn input(&self) -> usize {
        self.w_x.cols()
    }

    pub fn hidden(&self) -> usize {
        self.w_h.cols()
    }

    pub fn params(&self) -> [&Matrix<T>; 3] {
        [&self.w_x, &self.w_h, &self.b]
    }

    pub fn params_mut(&mut self) -> [&mut Matrix<T>; 3] {
        [&mut self.w_x, &mut self.w_h, &mut self.b]
    }

    /// One step for a single sequence.
    pub fn cell(&self, x: &[T], state: &LstmState<T>) -> Result<LstmState<T>> {
        let n = self.hidden();
        if x.len() != self.input() || state.h.len() != n || state.c.len() != n {
            return Err(Error::invalid(format!(
                "lstm cell expects input {} and state {}, got {} and {}/{}",
                self.input(),
                n,
                x.len(),
                state.h.len(),
                state.c.len()
            )));
        }
        let mut pre = self.b.as_slice().to_vec();
        gemm_slice(
            T::one(),
            self.w_x.as_slice(),
            self.w_x.shape(),
            Trans::No,
            x,
            (x.len(), 1),
            Trans::No,
            T::one(),
            &mut pre,
        )?;
        gemm_slice(
            T::one(),
            self.w_h.as_slice(),
            self.w_h.shape(),
            Trans::No,
            &state.h,
            (n, 1),
            Trans::No,
            T::one(),
            &mut pre,
        )?;
        Ok(self.activate(&pre, &state.c))
    }

    /// Cell update from gate pre-activations `pre` (length 4n) and previous cell.
    pub fn activate(&self, pre: &[T], c_prev: &[T]) -> LstmState<T> {
        let n = self.hidden();
        let mut h = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        for j in 0..n {
            let i = sigmoid(pre[j]);
            let f = sigmoid(pre[n + j]);
            let g = pre[2 * n + j].tanh();
            let o = sigmoid(pre[3 * n + j]);
            let cj = f * c_prev[j] + i * g;
            c.push(cj);
            h.push(o * cj.tanh());
        }
        LstmState { h, c }
    }

    /// Gate pre-activations contributed by the input alone (`W_x x + b`) for a batch of rows.
    pub fn input_projection(&self, x: &[T], rows: usize) -> Result<Vec<T>> {
        let four_n = 4 * self.hidden();
        let mut out = Vec::with_capacity(rows * four_n);
        for _ in 0..rows {
            out.extend_from_slice(self.b.as_slice());
        }
        gemm_slice(
            T::one(),
            x,
            (rows, self.input()),
            Trans::No,
            self.w_x.as_slice(),
            self.w_x.shape(),
            Trans::Yes,
            T::one(),
            &mut out,
        )?;
        Ok(out)
    }

    /// Runs `steps × batch` inputs (time-major rows `t * batch + b`) from initial states `h0`, `c0` (`batch × n`).
    pub fn forward(&self, x: &[T], steps: usize, batch: usize, h0: &[T], c0: &[T]) -> Result<LstmTrace<T>> {
        let xg = self.input_projection(x, steps * batch)?;
        self.forward_projected(xg, steps, batch, h0, c0)
    }

    /// Like [`forward`](Self::forward) with the input projection already computed.
    pub fn forward_projected(
        &self,
        mut gates: Vec<T>,
        steps: usize,
        batch: usize,
        h0: &[T],
        c0: &[T],
    ) -> Result<LstmTrace<T>> {
        let n = self.hidden();
        let four_n = 4 * n;
        if gates.len() != steps * batch * four_n || h0.len() != batch * n || c0.len() != batch * n {
            return Err(Error::invalid("lstm forward: inconsistent buffer sizes"));
        }
        let mut h = vec![T::zero(); steps * batch * n];
        let mut c = vec![T::zero(); steps * batch * n];
        let mut tanh_c = vec![T::zero(); steps * batch * n];
        for t in 0..steps {
            let rows = t * batch..(t + 1) * batch;
            let g = &mut gates[rows.start * four_n..rows.end * four_n];
            let h_prev: &[T] = if t == 0 { h0 } else { &h[(t - 1) * batch * n..t * batch * n] };
            gemm_slice(
                T::one(),
                h_prev,
                (batch, n),
                Trans::No,
                self.w_h.as_slice(),
                self.w_h.shape(),
                Trans::Yes,
                T::one(),
                g,
            )?;
            let (c_done, c_cur) = c.split_at_mut(t * batch * n);
            let c_prev: &[T] = if t == 0 { c0 } else { &c_done[(t - 1) * batch * n..] };
            let c_cur = &mut c_cur[..batch * n];
            let h_cur = &mut h[t * batch * n..(t + 1) * batch * n];
            let tc_cur = &mut tanh_c[t * batch * n..(t + 1) * batch * n];
            for b in 0..batch {
                let gb = &mut g[b * four_n..(b + 1) * four_n];
                for j in 0..n {
                    let i = sigmoid(gb[j]);
                    let f = sigmoid(gb[n + j]);
                    let gg = gb[2 * n + j].tanh();
                    let o = sigmoid(gb[3 * n + j]);
                    gb[j] = i;
                    gb[n + j] = f;
                    gb[2 * n + j] = gg;
                    gb[3 * n + j] = o;
                    let k = b * n + j;
                    let cj = f * c_prev[k] + i * gg;
                    let tc = cj.tanh();
                    c_cur[k] = cj;
                    tc_cur[k] = tc;
                    h_cur[k] = o * tc;
                }
            }
        }
        Ok(LstmTrace { steps, batch, hidden: n, gates, c, tanh_c, h, h0: h0.to_vec(), c0: c0.to_vec() })
    }

    /// Backpropagates `d_h` (gradient of the loss w.r.t. every emitted `h`,
    /// time-major) through the trace. Accumulates weight gradients into `grads`
    /// and returns the gradient w.r.t. the inputs `x`.
    pub fn backward(&self, trace: &LstmTrace<T>, x: &[T], d_h: &[T], grads: &mut LstmLayer<T>) -> Result<Vec<T>> {
        let n = self.hidden();
        let four_n = 4 * n;
        let (steps, batch) = (trace.steps, trace.batch);
        let rows = steps * batch;
        if d_h.len() != rows * n || x.len() != rows * self.input() {
            return Err(Error::invalid("lstm backward: inconsistent buffer sizes"));
        }
        let mut d_pre = vec![T::zero(); rows * four_n];
        let mut dh_next = vec![T::zero(); batch * n];
        let mut dc_next = vec![T::zero(); batch * n];
        let one = T::one();
        for t in (0..steps).rev() {
            for b in 0..batch {
                let r = t * batch + b;
                let gb = &trace.gates[r * four_n..(r + 1) * four_n];
                let dp = &mut d_pre[r * four_n..(r + 1) * four_n];
                for j in 0..n {
                    let (i, f, g, o) = (gb[j], gb[n + j], gb[2 * n + j], gb[3 * n + j]);
                    let tc = trace.tanh_c[r * n + j];
                    let c_prev = if t == 0 { trace.c0[b * n + j] } else { trace.c[(r - batch) * n + j] };
                    let dh = d_h[r * n + j] + dh_next[b * n + j];
                    let dc = dh * o * (one - tc * tc) + dc_next[b * n + j];
                    dp[j] = dc * g * i * (one - i);
                    dp[n + j] = dc * c_prev * f * (one - f);
                    dp[2 * n + j] = dc * i * (one - g * g);
                    dp[3 * n + j] = dh * tc * o * (one - o);
                    dc_next[b * n + j] = dc * f;
                }
            }
            let dp_t = &d_pre[t * batch * four_n..(t + 1) * batch * four_n];
            gemm_slice(
                one,
                dp_t,
                (batch, four_n),
                Trans::No,
                self.w_h.as_slice(),
                self.w_h.shape(),
                Trans::No,
                T::zero(),
                &mut dh_next,
            )?;
        }
        // Previous hidden state for every row.
        let mut h_prev = Vec::with_capacity(rows * n);
        h_prev.extend_from_slice(&trace.h0);
        h_prev.extend_from_slice(&trace.h[..(steps - 1) * batch * n]);
        gemm_slice(
            one,
            &d_pre,
            (rows, four_n),
            Trans::Yes,
            &h_prev,
            (rows, n),
            Trans::No,
            one,
            grads.w_h.as_mut_slice(),
        )?;
        gemm_slice(
            one,
            &d_pre,
            (rows, four_n),
            Trans::Yes,
            x,
            (rows, self.input()),
            Trans::No,
            one,
            grads.w_x.as_mut_slice(),
        )?;
        let db = grads.b.as_mut_slice();
        for row in d_pre.chunks_exact(four_n) {
            for (acc, &v) in db.iter_mut().zip(row) {
                *acc = *acc + v;
            }
        }
        let mut dx = vec![T::zero(); rows * self.input()];
        gemm_slice(
            one,
            &d_pre,
            (rows, four_n),
            Trans::No,
            self.w_x.as_slice(),
            self.w_x.shape(),
            Trans::No,
            T::zero(),
            &mut dx,
        )?;
        Ok(dx)
    }

    pub fn cast<U: Scalar>(&self) -> LstmLayer<U> {
        LstmLayer { w_x: self.w_x.cast(), w_h: self.w_h.cast(), b: self.b.cast() }
    }
}

/// Cached activations from [`LstmLayer::forward`].
#[derive(Debug, Clone)]
pub struct LstmTrace<T> {
    pub steps: usize,
    pub batch: usize,
    pub hidden: usize,
    /// Post-nonlinearity gates, `rows × 4n`.
    pub gates: Vec<T>,
    pub c: Vec<T>,
    pub tanh_c: Vec<T>,
    /// Emitted hidden states, `rows × n`.
    pub h: Vec<T>,
    pub h0: Vec<T>,
    pub c0: Vec<T>,
}

impl<T: Scalar> LstmTrace<T> {
    pub fn h_at(&self, step: usize, lane: usize) -> &[T] {
        let r = step * self.batch + lane;
        &self.h[r * self.hidden..(r + 1) * self.hidden]
    }

    /// Final `(h, c)` for every lane, `batch × n` each.
    pub fn final_state(&self) -> (Vec<T>, Vec<T>) {
        let n = self.hidden;
        if self.steps == 0 {
            return (self.h0.clone(), self.c0.clone());
        }
        let start = (self.steps - 1) * self.batch * n;
        (self.h[start..].to_vec(), self.c[start..].to_vec())
    }
}

/// Affine map `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T = f32> {
    /// `out × in`
    pub w: Matrix<T>,
    /// `1 × out`
    pub b: Matrix<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn zeros(input: usize, output: usize) -> Self {
        Linear { w: Matrix::zeros(output, input), b: Matrix::zeros(1, output) }
    }

    pub fn init(input: usize, output: usize, scale: f64, rng: &mut Rng) -> Self {
        let mut l = Self::zeros(input, output);
        for x in l.w.as_mut_slice() {
            *x = T::of_f64(rng.uniform(-scale, scale));
        }
        l
    }

    pub fn input(&self) -> usize {
        self.w.cols()
    }

    pub fn output(&self) -> usize {
        self.w.rows()
    }

    pub fn forward(&self, x: &[T], rows: usize) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(rows * self.output());
        for _ in 0..rows {
            out.extend_from_slice(self.b.as_slice());
        }
        gemm_slice(
            T::one(),
            x,
            (rows, self.input()),
            Trans::No,
            self.w.as_slice(),
            self.w.shape(),
            Trans::Yes,
            T::one(),
            &mut out,
        )?;
        Ok(out)
    }

    /// Accumulates weight gradients and returns `dL/dx`.
    pub fn backward(&self, x: &[T], d_y: &[T], rows: usize, grads: &mut Linear<T>) -> Result<Vec<T>> {
        let one = T::one();
        gemm_slice(
            one,
            d_y,
            (rows, self.output()),
            Trans::Yes,
            x,
            (rows, self.input()),
            Trans::No,
            one,
            grads.w.as_mut_slice(),
        )?;
        let db = grads.b.as_mut_slice();
        for row in d_y.chunks_exact(self.output()) {
            for (acc, &v) in db.iter_mut().zip(row) {
                *acc = *acc + v;
            }
        }
        let mut dx = vec![T::zero(); rows * self.input()];
        gemm_slice(
            one,
            d_y,
            (rows, self.output()),
            Trans::No,
            self.w.as_slice(),
            self.w.shape(),
            Trans::No,
            T::zero(),
            &mut dx,
        )?;
        Ok(dx)
    }

    pub fn cast<U: Scalar>(&self) -> Linear<U> {
        Linear { w: self.w.cast(), b: self.b.cast() }
    }
}

/// Softmax cross-entropy over `rows` logit rows with per-row weights.
///
/// Returns the weighted mean loss (nats) and writes `dL/dlogits` over `logits` in place.
pub fn softmax_xent_backward<T: Scalar>(logits: &mut [T], width: usize, targets: &[u32], weights: &[T]) -> f64 {
    let total_w: f64 = weights.iter().map(|w| w.as_f64()).sum();
    if total_w == 0.0 {
        logits.iter_mut().for_each(|x| *x = T::zero());
        return 0.0;
    }
    let inv = T::of_f64(1.0 / total_w);
    let mut loss = 0.0;
    for ((row, &tgt), &w) in logits.chunks_exact_mut(width).zip(targets).zip(weights) {
        crate::numerics::softmax_in_place(row);
        let p = row[tgt as usize].as_f64().max(crate::numerics::PROB_FLOOR);
        loss += w.as_f64() * -p.ln();
        let scale = w * inv;
        for x in row.iter_mut() {
            *x = *x * scale;
        }
        row[tgt as usize] = row[tgt as usize] - scale;
    }
    loss / total_w
}
