use crate::corpus::Vocab;
use crate::error::{Error, Result};
use crate::numerics::{gemm_slice, softmax_in_place, Matrix, Rng, Scalar, Trans};

use super::lstm::{softmax_xent_backward, Linear, LstmLayer, LstmState};

pub const INIT_SCALE: f64 = 0.08;
pub const FORGET_BIAS: f64 = 1.0;

/// Embedding, LSTM and output projection of the character LM.
#[derive(Debug, Clone, PartialEq)]
pub struct LmParams<T = f32> {
    /// `|V| × d`
    pub embed: Matrix<T>,
    pub lstm: LstmLayer<T>,
    /// `|V| × n` weights and `1 × |V|` bias.
    pub out: Linear<T>,
}

impl<T: Scalar> LmParams<T> {
    pub fn zeros(vocab: usize, d: usize, n: usize) -> Self {
        LmParams { embed: Matrix::zeros(vocab, d), lstm: LstmLayer::zeros(d, n), out: Linear::zeros(n, vocab) }
    }

    pub fn init(vocab: usize, d: usize, n: usize, rng: &mut Rng) -> Self {
        let mut embed = Matrix::zeros(vocab, d);
        for x in embed.as_mut_slice() {
            *x = T::of_f64(rng.uniform(-INIT_SCALE, INIT_SCALE));
        }
        let lstm = LstmLayer::init(d, n, INIT_SCALE, FORGET_BIAS, rng);
        let out = Linear::init(n, vocab, INIT_SCALE, rng);
        LmParams { embed, lstm, out }
    }

    pub fn vocab_size(&self) -> usize {
        self.embed.rows()
    }

    pub fn embed_dim(&self) -> usize {
        self.embed.cols()
    }

    pub fn hidden(&self) -> usize {
        self.lstm.hidden()
    }

    /// In storage order: E, W_x, W_h, b, W_o, b_o.
    pub fn params(&self) -> [&Matrix<T>; 6] {
        [&self.embed, &self.lstm.w_x, &self.lstm.w_h, &self.lstm.b, &self.out.w, &self.out.b]
    }

    pub fn params_mut(&mut self) -> [&mut Matrix<T>; 6] {
        [&mut self.embed, &mut self.lstm.w_x, &mut self.lstm.w_h, &mut self.lstm.b, &mut self.out.w, &mut self.out.b]
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.vocab_size(), self.embed_dim(), self.hidden())
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|m| m.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> LmParams<U> {
        LmParams { embed: self.embed.cast(), lstm: self.lstm.cast(), out: self.out.cast() }
    }

    /// All parameters concatenated in storage order.
    pub fn flatten(&self) -> Vec<T> {
        self.params().iter().flat_map(|m| m.as_slice().iter().copied()).collect()
    }

    pub fn unflatten(&mut self, flat: &[T]) -> Result<()> {
        let total: usize = self.params().iter().map(|m| m.len()).sum();
        if flat.len() != total {
            return Err(Error::invalid("flat parameter vector has the wrong length"));
        }
        let mut off = 0;
        for m in self.params_mut() {
            let len = m.len();
            m.as_mut_slice().copy_from_slice(&flat[off..off + len]);
            off += len;
        }
        Ok(())
    }

    /// Mean next-character cross-entropy (nats) over a batch block, with
    /// gradients accumulated into `grads`.
    ///
    /// `inputs`/`targets` are lane-major (`lane * steps + t`). `input_scale`,
    /// when given, multiplies each embedded input row-wise (`rows × d`,
    /// time-major) and implements input dropout. Returns the loss and the
    /// final `(h, c)` of every lane.
    #[allow(clippy::too_many_arguments)]
    pub fn loss_and_grads(
        &self,
        inputs: &[u32],
        targets: &[u32],
        steps: usize,
        batch: usize,
        h0: &[T],
        c0: &[T],
        input_scale: Option<&[T]>,
        grads: &mut LmParams<T>,
    ) -> Result<(f64, Vec<T>, Vec<T>)> {
        let (v, d) = (self.vocab_size(), self.embed_dim());
        let rows = steps * batch;
        if inputs.len() != rows || targets.len() != rows {
            return Err(Error::invalid("block size does not match steps x batch"));
        }
        if let Some(&bad) = inputs.iter().chain(targets).find(|&&c| c as usize >= v) {
            return Err(Error::invalid(format!("character index {bad} out of range")));
        }
        let mut x = vec![T::zero(); rows * d];
        let mut time_major_in = vec![0u32; rows];
        let mut time_major_tgt = vec![0u32; rows];
        for b in 0..batch {
            for t in 0..steps {
                let r = t * batch + b;
                time_major_in[r] = inputs[b * steps + t];
                time_major_tgt[r] = targets[b * steps + t];
            }
        }
        for (r, &c) in time_major_in.iter().enumerate() {
            let dst = &mut x[r * d..(r + 1) * d];
            dst.copy_from_slice(self.embed.row(c as usize));
            if let Some(scale) = input_scale {
                for (a, &s) in dst.iter_mut().zip(&scale[r * d..(r + 1) * d]) {
                    *a = *a * s;
                }
            }
        }
        let trace = self.lstm.forward(&x, steps, batch, h0, c0)?;
        let mut logits = self.out.forward(&trace.h, rows)?;
        let weights = vec![T::one(); rows];
        let loss = softmax_xent_backward(&mut logits, v, &time_major_tgt, &weights);
        let d_h = self.out.backward(&trace.h, &logits, rows, &mut grads.out)?;
        let d_x = self.lstm.backward(&trace, &x, &d_h, &mut grads.lstm)?;
        for (r, &c) in time_major_in.iter().enumerate() {
            let src = &d_x[r * d..(r + 1) * d];
            let dst = grads.embed.row_mut(c as usize);
            match input_scale {
                Some(scale) => {
                    for ((a, &g), &s) in dst.iter_mut().zip(src).zip(&scale[r * d..(r + 1) * d]) {
                        *a = *a + g * s;
                    }
                }
                None => {
                    for (a, &g) in dst.iter_mut().zip(src) {
                        *a = *a + g;
                    }
                }
            }
        }
        let (h, c) = trace.final_state();
        Ok((loss, h, c))
    }
}

/// A trained (or in-training) character LM: vocabulary plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CharLm<T = f32> {
    pub vocab: Vocab,
    pub params: LmParams<T>,
}

impl<T: Scalar> CharLm<T> {
    pub fn new(vocab: Vocab, params: LmParams<T>) -> Result<Self> {
        if params.vocab_size() != vocab.len() || params.out.output() != vocab.len() {
            return Err(Error::invalid(format!(
                "parameters sized for {} symbols but vocabulary has {}",
                params.vocab_size(),
                vocab.len()
            )));
        }
        Ok(CharLm { vocab, params })
    }

    pub fn init(vocab: Vocab, d: usize, n: usize, seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let params = LmParams::init(vocab.len(), d, n, &mut rng);
        CharLm { vocab, params }
    }

    pub fn hidden(&self) -> usize {
        self.params.hidden()
    }

    pub fn inference(&self) -> Inference<'_, T> {
        Inference::new(self)
    }

    /// Next-character distributions after each input character, threading `state`.
    pub fn forward(&self, chars: &[u32], state: LstmState<T>) -> Result<(Vec<Vec<T>>, LstmState<T>)> {
        self.inference().forward(chars, state)
    }

    pub fn cast<U: Scalar>(&self) -> CharLm<U> {
        CharLm { vocab: self.vocab.clone(), params: self.params.cast() }
    }
}

/// Step-wise evaluation with the embedding-to-gate projection precomputed per symbol.
pub struct Inference<'a, T: Scalar> {
    model: &'a CharLm<T>,
    /// `|V| × 4n`: `W_x E[c] + b` for every symbol.
    table: Vec<T>,
}

impl<'a, T: Scalar> Inference<'a, T> {
    pub fn new(model: &'a CharLm<T>) -> Self {
        let p = &model.params;
        let table = p
            .lstm
            .input_projection(p.embed.as_slice(), p.vocab_size())
            .expect("embedding and LSTM input dimensions agree");
        Inference { model, table }
    }

    pub fn model(&self) -> &CharLm<T> {
        self.model
    }

    pub fn vocab_size(&self) -> usize {
        self.model.params.vocab_size()
    }

    pub fn hidden(&self) -> usize {
        self.model.hidden()
    }

    pub fn zero_state(&self) -> LstmState<T> {
        LstmState::zeros(self.hidden())
    }

    /// Consumes one character.
    pub fn step(&self, state: &mut LstmState<T>, c: u32) -> Result<()> {
        let v = self.vocab_size();
        if c as usize >= v {
            return Err(Error::invalid(format!("character index {c} out of range for {v} symbols")));
        }
        let n = self.hidden();
        let lstm = &self.model.params.lstm;
        let mut pre = self.table[c as usize * 4 * n..(c as usize + 1) * 4 * n].to_vec();
        gemm_slice(
            T::one(),
            lstm.w_h.as_slice(),
            lstm.w_h.shape(),
            Trans::No,
            &state.h,
            (n, 1),
            Trans::No,
            T::one(),
            &mut pre,
        )?;
        *state = lstm.activate(&pre, &state.c);
        Ok(())
    }

    pub fn consume(&self, state: &mut LstmState<T>, chars: &[u32]) -> Result<()> {
        for &c in chars {
            self.step(state, c)?;
        }
        Ok(())
    }

    pub fn logits(&self, h: &[T]) -> Vec<T> {
        self.model.params.out.forward(h, 1).expect("hidden size matches output layer")
    }

    /// `p(next | h)`
    pub fn distribution(&self, h: &[T]) -> Vec<T> {
        let mut l = self.logits(h);
        softmax_in_place(&mut l);
        l
    }

    pub fn forward(&self, chars: &[u32], mut state: LstmState<T>) -> Result<(Vec<Vec<T>>, LstmState<T>)> {
        let mut out = Vec::with_capacity(chars.len());
        for &c in chars {
            self.step(&mut state, c)?;
            out.push(self.distribution(&state.h));
        }
        Ok((out, state))
    }

    /// Hidden states after each of `chars`, starting from zero state.
    pub fn hidden_states(&self, chars: &[u32]) -> Result<Vec<Vec<T>>> {
        let mut state = self.zero_state();
        let mut out = Vec::with_capacity(chars.len());
        for &c in chars {
            self.step(&mut state, c)?;
            out.push(state.h.clone());
        }
        Ok(out)
    }
}

/// Hidden states for many sequences at once, each run from zero state.
///
/// Sequences are padded to a common length and evaluated as one batch; the
/// padding lies after each sequence and cannot influence its states.
pub fn encode_batch<T: Scalar>(model: &CharLm<T>, seqs: &[Vec<u32>]) -> Result<Vec<Matrix<T>>> {
    let n = model.hidden();
    let batch = seqs.len();
    let steps = seqs.iter().map(Vec::len).max().unwrap_or(0);
    if batch == 0 || steps == 0 {
        return Ok(seqs.iter().map(|_| Matrix::zeros(0, n)).collect());
    }
    let v = model.params.vocab_size();
    let inf = Inference::new(model);
    let table = &inf.table;
    let four_n = 4 * n;
    let mut gates = vec![T::zero(); steps * batch * four_n];
    for (b, s) in seqs.iter().enumerate() {
        for t in 0..steps {
            let c = s.get(t).copied().unwrap_or(0) as usize;
            if c >= v {
                return Err(Error::invalid(format!("character index {c} out of range")));
            }
            let r = t * batch + b;
            gates[r * four_n..(r + 1) * four_n].copy_from_slice(&table[c * four_n..(c + 1) * four_n]);
        }
    }
    let zeros = vec![T::zero(); batch * n];
    let trace = model.params.lstm.forward_projected(gates, steps, batch, &zeros, &zeros)?;
    Ok(seqs
        .iter()
        .enumerate()
        .map(|(b, s)| {
            let mut m = Matrix::zeros(s.len(), n);
            for t in 0..s.len() {
                m.row_mut(t).copy_from_slice(trace.h_at(t, b));
            }
            m
        })
        .collect())
}
