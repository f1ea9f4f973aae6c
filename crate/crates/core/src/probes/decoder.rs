use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::charlm::{
    expect_header, get_f32s, get_json, get_string, get_u32, get_u8, put_f32s, put_json, put_string, put_u32, Linear,
    LstmLayer, CLIP_NORM, FORGET_BIAS, INIT_SCALE, MAGIC, PROBE_VERSION,
};
use crate::error::{Error, Result};
use crate::numerics::{adam_step, clip_global_norm, AdamState, Matrix, Rng, Scalar};

/// Sequence labeller over frozen encoder states: LSTM then softmax over labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeDecoder<T = f32> {
    pub labels: Vec<String>,
    pub lstm: LstmLayer<T>,
    pub out: Linear<T>,
}

/// One labelled sequence: encoder states (`len × n_in`) and a label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeExample<T = f32> {
    pub inputs: Matrix<T>,
    pub labels: Vec<u32>,
}

impl<T: Scalar> ProbeDecoder<T> {
    pub fn init(labels: Vec<String>, input: usize, hidden: usize, seed: u64) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("label vocabulary is empty"));
        }
        let mut rng = Rng::new(seed);
        let lstm = LstmLayer::init(input, hidden, INIT_SCALE, FORGET_BIAS, &mut rng);
        let out = Linear::init(hidden, labels.len(), INIT_SCALE, &mut rng);
        Ok(ProbeDecoder { labels, lstm, out })
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn input(&self) -> usize {
        self.lstm.input()
    }

    pub fn hidden(&self) -> usize {
        self.lstm.hidden()
    }

    pub fn label_index(&self, label: &str) -> Option<u32> {
        self.labels.iter().position(|l| l == label).map(|i| i as u32)
    }

    /// Storage order: W_x, W_h, b, W_o, b_o.
    pub fn params(&self) -> [&Matrix<T>; 5] {
        let [a, b, c] = self.lstm.params();
        [a, b, c, &self.out.w, &self.out.b]
    }

    pub fn params_mut(&mut self) -> [&mut Matrix<T>; 5] {
        let [a, b, c] = self.lstm.params_mut();
        [a, b, c, &mut self.out.w, &mut self.out.b]
    }

    pub fn zeros_like(&self) -> Self {
        ProbeDecoder {
            labels: self.labels.clone(),
            lstm: LstmLayer::zeros(self.input(), self.hidden()),
            out: Linear::zeros(self.hidden(), self.num_labels()),
        }
    }

    pub fn cast<U: Scalar>(&self) -> ProbeDecoder<U> {
        ProbeDecoder { labels: self.labels.clone(), lstm: self.lstm.cast(), out: self.out.cast() }
    }

    fn check(&self, ex: &ProbeExample<T>) -> Result<()> {
        if ex.inputs.cols() != self.input() && ex.inputs.rows() > 0 {
            return Err(Error::invalid(format!(
                "encoder states have width {}, decoder expects {}",
                ex.inputs.cols(),
                self.input()
            )));
        }
        if ex.inputs.rows() != ex.labels.len() {
            return Err(Error::invalid("label sequence length differs from input length"));
        }
        if let Some(&bad) = ex.labels.iter().find(|&&l| l as usize >= self.num_labels()) {
            return Err(Error::invalid(format!("label index {bad} outside the label vocabulary")));
        }
        Ok(())
    }

    /// Pads a batch into time-major rows; returns `(x, steps)`.
    fn pack(&self, batch: &[&Matrix<T>]) -> (Vec<T>, usize) {
        let steps = batch.iter().map(|m| m.rows()).max().unwrap_or(0);
        let (b, d) = (batch.len(), self.input());
        let mut x = vec![T::zero(); steps * b * d];
        for (lane, m) in batch.iter().enumerate() {
            for t in 0..m.rows() {
                let r = t * b + lane;
                x[r * d..(r + 1) * d].copy_from_slice(m.row(t));
            }
        }
        (x, steps)
    }

    /// Mean cross-entropy per labelled position over a batch, with gradients
    /// accumulated into `grads`. Each sequence starts from zero state.
    pub fn loss_and_grads(&self, batch: &[&ProbeExample<T>], grads: &mut ProbeDecoder<T>) -> Result<f64> {
        for ex in batch {
            self.check(ex)?;
        }
        let inputs: Vec<&Matrix<T>> = batch.iter().map(|e| &e.inputs).collect();
        let (x, steps) = self.pack(&inputs);
        if steps == 0 {
            return Ok(0.0);
        }
        let b = batch.len();
        let rows = steps * b;
        let mut targets = vec![0u32; rows];
        let mut weights = vec![T::zero(); rows];
        for (lane, ex) in batch.iter().enumerate() {
            for (t, &l) in ex.labels.iter().enumerate() {
                targets[t * b + lane] = l;
                weights[t * b + lane] = T::one();
            }
        }
        let zeros = vec![T::zero(); b * self.hidden()];
        let trace = self.lstm.forward(&x, steps, b, &zeros, &zeros)?;
        let mut logits = self.out.forward(&trace.h, rows)?;
        let loss = crate::charlm::softmax_xent_backward(&mut logits, self.num_labels(), &targets, &weights);
        let d_h = self.out.backward(&trace.h, &logits, rows, &mut grads.out)?;
        self.lstm.backward(&trace, &x, &d_h, &mut grads.lstm)?;
        Ok(loss)
    }

    /// Label distributions (`len × |labels|`) for each sequence, evaluated as one batch.
    pub fn distributions(&self, batch: &[&Matrix<T>]) -> Result<Vec<Matrix<T>>> {
        if let Some(m) = batch.iter().find(|m| m.rows() > 0 && m.cols() != self.input()) {
            return Err(Error::invalid(format!(
                "encoder states have width {}, decoder expects {}",
                m.cols(),
                self.input()
            )));
        }
        let (x, steps) = self.pack(batch);
        let l = self.num_labels();
        if steps == 0 {
            return Ok(batch.iter().map(|_| Matrix::zeros(0, l)).collect());
        }
        let b = batch.len();
        let zeros = vec![T::zero(); b * self.hidden()];
        let trace = self.lstm.forward(&x, steps, b, &zeros, &zeros)?;
        let mut logits = self.out.forward(&trace.h, steps * b)?;
        for row in logits.chunks_exact_mut(l) {
            crate::numerics::softmax_in_place(row);
        }
        Ok(batch
            .iter()
            .enumerate()
            .map(|(lane, m)| {
                let mut d = Matrix::zeros(m.rows(), l);
                for t in 0..m.rows() {
                    let r = t * b + lane;
                    d.row_mut(t).copy_from_slice(&logits[r * l..(r + 1) * l]);
                }
                d
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for ProbeTrainConfig {
    fn default() -> Self {
        ProbeTrainConfig { hidden: 256, epochs: 5, lr: 0.003, batch: 32, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub clipped: usize,
}

/// Trains the decoder in place on precomputed encoder states.
pub fn train_probe(
    decoder: &mut ProbeDecoder<f32>,
    data: &[ProbeExample<f32>],
    config: &ProbeTrainConfig,
) -> Result<Vec<ProbeEpochLog>> {
    if data.is_empty() {
        return Err(Error::invalid("probe training set is empty"));
    }
    if config.batch == 0 || config.epochs == 0 {
        return Err(Error::invalid("probe batch size and epochs must be >= 1"));
    }
    for ex in data {
        decoder.check(ex)?;
    }
    let mut adam: Vec<AdamState<f32>> = decoder.params().iter().map(|p| AdamState::for_param(p)).collect();
    let mut rng = Rng::with_stream(config.seed, 2);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        let (mut total, mut batches, mut clipped) = (0.0, 0, 0);
        for chunk in order.chunks(config.batch) {
            let batch: Vec<&ProbeExample<f32>> = chunk.iter().map(|&i| &data[i]).collect();
            let mut grads = decoder.zeros_like();
            let loss = decoder.loss_and_grads(&batch, &mut grads)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("probe loss at epoch {epoch}, batch {batches}")));
            }
            if clip_global_norm(&mut grads.params_mut(), CLIP_NORM) > CLIP_NORM {
                clipped += 1;
            }
            for ((p, g), st) in decoder.params_mut().into_iter().zip(grads.params()).zip(adam.iter_mut()) {
                adam_step(p, g, st, config.lr)?;
            }
            total += loss;
            batches += 1;
        }
        log.push(ProbeEpochLog { epoch, loss: total / batches as f64, clipped });
    }
    Ok(log)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeMeta {
    /// `seg` or `pos`.
    pub task: String,
    pub epochs: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeCheckpoint {
    pub decoder: ProbeDecoder<f32>,
    pub meta: ProbeMeta,
}

impl ProbeCheckpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let d = &self.decoder;
        w.write_all(MAGIC)?;
        put_u32(w, PROBE_VERSION)?;
        put_u32(w, d.num_labels() as u32)?;
        for l in &d.labels {
            put_string(w, l)?;
        }
        put_u32(w, d.input() as u32)?;
        put_u32(w, d.hidden() as u32)?;
        for m in d.params() {
            put_f32s(w, m.as_slice())?;
        }
        w.write_all(&[0])?;
        put_json(w, &self.meta)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        expect_header(r, PROBE_VERSION)?;
        let count = get_u32(r)? as usize;
        if count == 0 || count > 4096 {
            return Err(Error::Format(format!("implausible label count {count}")));
        }
        let labels = (0..count).map(|_| get_string(r)).collect::<Result<Vec<_>>>()?;
        let input = get_u32(r)? as usize;
        let hidden = get_u32(r)? as usize;
        if input == 0 || hidden == 0 {
            return Err(Error::Format("probe checkpoint has zero-sized dimensions".into()));
        }
        let mut decoder =
            ProbeDecoder { labels, lstm: LstmLayer::zeros(input, hidden), out: Linear::zeros(hidden, count) };
        for m in decoder.params_mut() {
            get_f32s(r, m.as_mut_slice())?;
        }
        if get_u8(r)? != 0 {
            return Err(Error::Format("probe checkpoints carry no optimizer state".into()));
        }
        let meta = get_json(r)?;
        Ok(ProbeCheckpoint { decoder, meta })
    }
}
