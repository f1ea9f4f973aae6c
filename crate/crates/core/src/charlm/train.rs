use serde::{Deserialize, Serialize};

use super::checkpoint::{Checkpoint, CheckpointMeta};
use super::model::{CharLm, LmParams};
use crate::corpus::{stream_batches, StreamSplit, Vocab};
use crate::error::{Error, Result};
use crate::numerics::{adam_step, clip_global_norm, AdamState, Rng, Scalar};

pub const CLIP_NORM: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub embed_dim: usize,
    pub hidden: usize,
    pub lr: f64,
    pub batch: usize,
    pub dropout: f64,
    pub bptt: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Stop after this many epochs without a dev improvement.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            embed_dim: 64,
            hidden: 256,
            lr: 0.003,
            batch: 50,
            dropout: 0.2,
            bptt: 100,
            epochs: 10,
            seed: 1,
            patience: 2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid("dropout must lie in [0, 1)"));
        }
        if self.embed_dim == 0 || self.hidden == 0 || self.batch == 0 || self.bptt == 0 || self.epochs == 0 {
            return Err(Error::invalid("all counts in the training config must be >= 1"));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(Error::invalid("learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean training cross-entropy in bits per character.
    pub train_bpc: f64,
    pub dev_bpc: f64,
    pub blocks: usize,
    /// Updates whose gradient norm exceeded the clip threshold.
    pub clipped: usize,
    pub max_grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Checkpoint with the lowest dev bits-per-char.
    pub best: Checkpoint,
    pub log: Vec<EpochLog>,
}

pub fn train(config: &TrainConfig, vocab: &Vocab, split: &StreamSplit) -> Result<TrainOutcome> {
    train_with(config, vocab, split, |_, _| Ok(()))
}

/// Trains with truncated BPTT; `on_epoch` sees the checkpoint after every epoch.
pub fn train_with<F>(config: &TrainConfig, vocab: &Vocab, split: &StreamSplit, mut on_epoch: F) -> Result<TrainOutcome>
where
    F: FnMut(&Checkpoint, &EpochLog) -> Result<()>,
{
    config.validate()?;
    // Fail early on short streams.
    stream_batches(&split.train, config.batch, config.bptt)?;
    if split.dev.len() < 2 {
        return Err(Error::invalid("development stream needs at least 2 characters"));
    }
    let mut model = CharLm::<f32>::init(vocab.clone(), config.embed_dim, config.hidden, config.seed);
    let mut adam: Vec<AdamState<f32>> = model.params.params().iter().map(|p| AdamState::for_param(p)).collect();
    let mut dropout_rng = Rng::with_stream(config.seed, 1);
    let (n, d) = (config.hidden, config.embed_dim);
    let keep_scale = (1.0 / (1.0 - config.dropout)) as f32;
    let mut log = Vec::new();
    let mut best: Option<Checkpoint> = None;
    let mut stale = 0;

    for epoch in 1..=config.epochs {
        let mut h = vec![0f32; config.batch * n];
        let mut c = vec![0f32; config.batch * n];
        let (mut loss_sum, mut blocks, mut clipped, mut max_norm) = (0.0, 0, 0, 0.0f64);
        let mut mask = vec![1f32; config.batch * config.bptt * d];
        for block in stream_batches(&split.train, config.batch, config.bptt)? {
            if !block.carry {
                h.iter_mut().for_each(|x| *x = 0.0);
                c.iter_mut().for_each(|x| *x = 0.0);
            }
            let scale = if config.dropout > 0.0 {
                for m in mask.iter_mut() {
                    *m = if dropout_rng.bernoulli(config.dropout) { 0.0 } else { keep_scale };
                }
                Some(mask.as_slice())
            } else {
                None
            };
            let mut grads = model.params.zeros_like();
            let (loss, h_new, c_new) = model.params.loss_and_grads(
                &block.inputs,
                &block.targets,
                config.bptt,
                config.batch,
                &h,
                &c,
                scale,
                &mut grads,
            )?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss at epoch {epoch}, block {blocks}; {clipped} clipped updates so far, max grad norm {max_norm:.3}"
                )));
            }
            let norm = clip_global_norm(&mut grads.params_mut(), CLIP_NORM);
            if norm > CLIP_NORM {
                clipped += 1;
            }
            max_norm = max_norm.max(norm);
            for ((p, g), st) in model.params.params_mut().into_iter().zip(grads.params()).zip(adam.iter_mut()) {
                adam_step(p, g, st, config.lr)?;
            }
            h = h_new;
            c = c_new;
            loss_sum += loss;
            blocks += 1;
        }
        if !model.params.is_finite() {
            return Err(Error::NonFinite(format!("parameters after epoch {epoch}")));
        }
        let dev_bpc = bits_per_char(&model, &split.dev)?;
        let entry = EpochLog {
            epoch,
            train_bpc: loss_sum / blocks as f64 / std::f64::consts::LN_2,
            dev_bpc,
            blocks,
            clipped,
            max_grad_norm: max_norm,
        };
        let ckpt = Checkpoint {
            model: model.clone(),
            adam: Some(adam.clone()),
            meta: CheckpointMeta { epoch: epoch as u32, seed: config.seed, dev_bpc },
        };
        on_epoch(&ckpt, &entry)?;
        log.push(entry);
        if best.as_ref().is_none_or(|b| dev_bpc < b.meta.dev_bpc) {
            best = Some(ckpt);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    Ok(TrainOutcome { best: best.expect("at least one epoch runs"), log })
}

/// Mean `-log2 p(c[t+1] | c[..=t])` over a stream, state carried from the start.
pub fn bits_per_char<T: Scalar>(model: &CharLm<T>, stream: &[u32]) -> Result<f64> {
    Ok(nats_per_char(model, stream)? / std::f64::consts::LN_2)
}

pub fn nats_per_char<T: Scalar>(model: &CharLm<T>, stream: &[u32]) -> Result<f64> {
    if stream.len() < 2 {
        return Err(Error::invalid("need at least 2 characters to score a stream"));
    }
    let inf = model.inference();
    let mut state = inf.zero_state();
    let mut total = 0.0;
    for w in stream.windows(2) {
        inf.step(&mut state, w[0])?;
        let p = inf.distribution(&state.h);
        total += crate::numerics::cross_entropy(&p, w[1] as usize)?;
    }
    Ok(total / (stream.len() - 1) as f64)
}

/// Bits per character of an add-one smoothed unigram model fitted on `train`.
pub fn unigram_bits_per_char(train: &[u32], eval: &[u32], vocab_size: usize) -> f64 {
    let mut counts = vec![1.0f64; vocab_size];
    for &c in train {
        counts[c as usize] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    let bits: f64 = eval[1..].iter().map(|&c| -(counts[c as usize] / total).log2()).sum();
    bits / (eval.len() - 1) as f64
}

/// Loss of a parameter set on one block; used by gradient checks.
pub fn block_loss<T: Scalar>(
    params: &LmParams<T>,
    inputs: &[u32],
    targets: &[u32],
    steps: usize,
    batch: usize,
) -> Result<f64> {
    let n = params.hidden();
    let zeros = vec![T::zero(); batch * n];
    let mut scratch = params.zeros_like();
    Ok(params.loss_and_grads(inputs, targets, steps, batch, &zeros, &zeros, None, &mut scratch)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charlm::sample;

    fn ab_split(len: usize) -> (Vocab, StreamSplit) {
        let text: String = "ab".repeat(len / 2);
        let vocab = Vocab::build(&text).unwrap();
        let ids = vocab.encode(&text);
        let split = StreamSplit { train: ids.clone(), dev: ids[..200].to_vec(), train_fraction: 1.0 };
        (vocab, split)
    }

    fn toy_config(epochs: usize) -> TrainConfig {
        TrainConfig {
            embed_dim: 4,
            hidden: 8,
            lr: 0.01,
            batch: 4,
            dropout: 0.0,
            bptt: 10,
            epochs,
            seed: 3,
            patience: 10,
        }
    }

    #[test]
    fn overfits_alternating_stream() {
        // 50 blocks per epoch, 4 epochs: 200 updates.
        let (vocab, split) = ab_split(4 * 10 * 50 + 4);
        let out = train(&toy_config(4), &vocab, &split).unwrap();
        let m = &out.best.model;
        let (a, b) = (vocab.get('a').unwrap(), vocab.get('b').unwrap());
        let inf = m.inference();
        let mut st = inf.zero_state();
        inf.consume(&mut st, &[a, b, a, b, a]).unwrap();
        assert!(inf.distribution(&st.h)[b as usize] > 0.99);
        assert!(out.best.meta.dev_bpc < 0.05);
        let s = sample(m, "a", 12, 1e-3, 1).unwrap();
        assert_eq!(s, "babababababa");
    }

    #[test]
    fn dropout_free_training_is_deterministic() {
        let (vocab, split) = ab_split(4 * 10 * 8 + 4);
        let a = train(&toy_config(2), &vocab, &split).unwrap();
        let b = train(&toy_config(2), &vocab, &split).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.best.model, b.best.model);
    }

    #[test]
    fn zero_model_scores_log_vocab() {
        let vocab = Vocab::build("abcdefg").unwrap();
        let m = CharLm::<f64>::new(vocab, LmParams::zeros(8, 2, 3)).unwrap();
        let stream = [1, 5, 2, 7, 7, 3];
        let bpc = bits_per_char(&m, &stream).unwrap();
        assert!((bpc - 3.0).abs() < 1e-12);
        let nats = nats_per_char(&m, &stream).unwrap();
        assert!((bpc - nats / std::f64::consts::LN_2).abs() < 1e-9);
        assert!(bits_per_char(&m, &stream[..1]).is_err());
    }

    #[test]
    fn two_symbol_sampling_matches_model_frequencies() {
        // Output bias alone sets p(a) = 0.3, p(b) = 0.7; UNK is masked.
        let vocab = Vocab::from_chars(vec!['\u{FFFD}', 'a', 'b']).unwrap();
        let mut p = LmParams::<f32>::zeros(3, 1, 1);
        p.out.b.as_mut_slice().copy_from_slice(&[-1e9, 0.3f32.ln(), 0.7f32.ln()]);
        let m = CharLm::new(vocab, p).unwrap();
        let n = 10_000;
        let s = sample(&m, "", n, 1.0, 42).unwrap();
        let count_a = s.chars().filter(|&c| c == 'a').count() as f64;
        let sigma = (n as f64 * 0.3 * 0.7).sqrt();
        assert!((count_a - 0.3 * n as f64).abs() < 3.0 * sigma, "count {count_a}");
    }

    #[test]
    fn unigram_baseline_counts() {
        // Add-one counts over |V| = 3: a=3, b=2, UNK=1 of total 6.
        let bpc = unigram_bits_per_char(&[1, 1, 2], &[0, 1, 2], 3);
        let expect = (-(3.0f64 / 6.0).log2() - (2.0f64 / 6.0).log2()) / 2.0;
        assert!((bpc - expect).abs() < 1e-12);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let (vocab, split) = ab_split(400);
        let mut c = toy_config(1);
        c.dropout = 1.0;
        assert!(train(&c, &vocab, &split).is_err());
        let mut c = toy_config(1);
        c.batch = 0;
        assert!(train(&c, &vocab, &split).is_err());
    }
}
