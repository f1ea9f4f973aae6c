use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::lstm::LstmState;
use super::model::{CharLm, Inference};
use crate::corpus::{is_delimiter, Lookup, WordList, DEFAULT_WINDOW, UNK};
use crate::error::{Error, Result};
use crate::numerics::{Rng, Scalar};

/// Draws `length` characters after `prefix` from `softmax(logits / temperature)`.
pub fn sample<T: Scalar>(
    model: &CharLm<T>,
    prefix: &str,
    length: usize,
    temperature: f64,
    seed: u64,
) -> Result<String> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::invalid("temperature must be positive"));
    }
    let inf = model.inference();
    let mut state = inf.zero_state();
    inf.consume(&mut state, &model.vocab.encode(prefix))?;
    let mut rng = Rng::new(seed);
    let mut out = String::with_capacity(length);
    for _ in 0..length {
        let probs = tempered(&inf, &state, temperature);
        let c = rng.categorical(&probs) as u32;
        out.push(model.vocab.decode_char(c));
        inf.step(&mut state, c)?;
    }
    Ok(out)
}

/// Next-character probabilities in f64 with UNK masked out.
fn tempered<T: Scalar>(inf: &Inference<'_, T>, state: &LstmState<T>, temperature: f64) -> Vec<f64> {
    let logits = inf.logits(&state.h);
    let scaled: Vec<f64> = logits
        .iter()
        .enumerate()
        .map(|(i, l)| if i == UNK as usize { f64::NEG_INFINITY } else { l.as_f64() / temperature })
        .collect();
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = scaled.iter().map(|&s| (s - max).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    p
}

/// A delimiter-bounded token cut from a continuous sampled stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledWord {
    pub text: String,
    /// Natural-log probability of each character of `text`.
    pub char_logprobs: Vec<f64>,
    pub mean_logprob: f64,
    pub delimiter: char,
    pub delimiter_prob: f64,
    /// `p(' ')` at the end-of-word state.
    pub p_space: f64,
    /// Up to the preceding window of sampled tokens, space-joined.
    pub context: String,
    /// Hidden state after the word's last character.
    pub end_state: Vec<f32>,
}

#[derive(Debug, Default)]
struct Collector {
    current: String,
    logprobs: Vec<f64>,
    history: VecDeque<String>,
}

impl Collector {
    fn push(&mut self, ch: char, logprob: f64, p: &[f64], space: Option<usize>, h: &[f32]) -> Option<SampledWord> {
        if !is_delimiter(ch) {
            self.current.push(ch);
            self.logprobs.push(logprob);
            return None;
        }
        if self.current.is_empty() {
            return None;
        }
        let text = std::mem::take(&mut self.current);
        let char_logprobs = std::mem::take(&mut self.logprobs);
        let mean_logprob = char_logprobs.iter().sum::<f64>() / char_logprobs.len() as f64;
        let word = SampledWord {
            context: self.history.iter().cloned().collect::<Vec<_>>().join(" "),
            text: text.clone(),
            char_logprobs,
            mean_logprob,
            delimiter: ch,
            delimiter_prob: logprob.exp(),
            p_space: space.map_or(0.0, |s| p[s]),
            end_state: h.to_vec(),
        };
        self.history.push_back(text);
        if self.history.len() > DEFAULT_WINDOW {
            self.history.pop_front();
        }
        Some(word)
    }
}

/// Endless source of complete words sampled at temperature 1 after a space primer.
pub struct WordSampler<'a, T: Scalar> {
    inf: Inference<'a, T>,
    state: LstmState<T>,
    rng: Rng,
    space: Option<usize>,
    collector: Collector,
    drawn: usize,
}

impl<'a, T: Scalar> WordSampler<'a, T> {
    pub fn new(model: &'a CharLm<T>, rng: Rng) -> Result<Self> {
        let inf = model.inference();
        let mut state = inf.zero_state();
        let space = model.vocab.get(' ').map(|s| s as usize);
        inf.step(&mut state, model.vocab.encode_char(' '))?;
        Ok(WordSampler { inf, state, rng, space, collector: Collector::default(), drawn: 0 })
    }

    /// Characters sampled so far.
    pub fn chars_drawn(&self) -> usize {
        self.drawn
    }

    pub fn next_word(&mut self) -> Result<SampledWord> {
        loop {
            let p = tempered(&self.inf, &self.state, 1.0);
            let c = self.rng.categorical(&p);
            let ch = self.inf.model().vocab.decode_char(c as u32);
            let h: Vec<f32> = self.state.h.iter().map(|x| x.as_f64() as f32).collect();
            let done = self.collector.push(ch, p[c].ln(), &p, self.space, &h);
            self.inf.step(&mut self.state, c as u32)?;
            self.drawn += 1;
            if let Some(w) = done {
                return Ok(w);
            }
        }
    }
}

pub fn sample_complete_words<T: Scalar>(model: &CharLm<T>, count: usize, seed: u64) -> Result<Vec<SampledWord>> {
    let mut s = WordSampler::new(model, Rng::new(seed))?;
    (0..count).map(|_| s.next_word()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonceRate {
    pub rate: f64,
    pub nonce: usize,
    pub sampled: usize,
    /// First few nonce tokens, in sampling order.
    pub examples: Vec<String>,
}

/// Fraction of sampled tokens found in none of `known` (case-folded lookup).
pub fn nonce_rate<T: Scalar>(
    model: &CharLm<T>,
    known: &[&WordList],
    sample_size: usize,
    seed: u64,
) -> Result<NonceRate> {
    if known.is_empty() {
        return Err(Error::invalid("at least one word list is required"));
    }
    if sample_size == 0 {
        return Err(Error::invalid("sample size must be >= 1"));
    }
    let words = sample_complete_words(model, sample_size, seed)?;
    Ok(nonce_rate_of(words.iter().map(|w| w.text.as_str()), known))
}

pub(crate) fn nonce_rate_of<'w>(words: impl Iterator<Item = &'w str>, known: &[&WordList]) -> NonceRate {
    let (mut nonce, mut sampled, mut examples) = (0, 0, Vec::new());
    for w in words {
        sampled += 1;
        if !known.iter().any(|l| l.contains(w, Lookup::CaseFolded)) {
            nonce += 1;
            if examples.len() < 20 {
                examples.push(w.to_string());
            }
        }
    }
    NonceRate { rate: nonce as f64 / sampled.max(1) as f64, nonce, sampled, examples }
}
