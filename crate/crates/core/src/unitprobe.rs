//! Hidden-unit analysis: top trigger contexts, per-query activation traces,
//! correlation with the next-space probability and a word-boundary detector.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::charlm::{CharLm, Inference, LstmState};
use crate::corpus::word_end_flags;
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::report::{csv_writer, fmt_num};

pub const DEFAULT_TOP_K: usize = 5;
pub const DEFAULT_WINDOW: usize = 13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerRecord {
    pub activation: f32,
    /// Up to `window` preceding characters followed by the trigger character.
    pub context: String,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitTriggers {
    pub unit: usize,
    pub records: Vec<TriggerRecord>,
}

/// Streaming top-k scan over a corpus fed in arbitrary chunks.
pub struct TriggerScan<'a> {
    inf: Inference<'a, f32>,
    state: LstmState<f32>,
    k: usize,
    window: usize,
    recent: VecDeque<char>,
    position: usize,
    /// Per unit, best `(|activation|, position, activation, context)` ordered best-first.
    best: Vec<Vec<(f32, usize, f32, String)>>,
}

impl<'a> TriggerScan<'a> {
    pub fn new(model: &'a CharLm<f32>, k: usize, window: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k must be >= 1"));
        }
        let inf = model.inference();
        Ok(TriggerScan {
            state: inf.zero_state(),
            best: vec![Vec::with_capacity(k + 1); model.hidden()],
            inf,
            k,
            window,
            recent: VecDeque::with_capacity(window + 1),
            position: 0,
        })
    }

    pub fn feed(&mut self, chunk: &[u32]) -> Result<()> {
        let vocab = &self.inf.model().vocab;
        for &c in chunk {
            self.inf.step(&mut self.state, c)?;
            self.recent.push_back(vocab.decode_char(c));
            if self.recent.len() > self.window + 1 {
                self.recent.pop_front();
            }
            for (unit, &a) in self.state.h.iter().enumerate() {
                let list = &mut self.best[unit];
                let mag = a.abs();
                // Strictly greater: earlier positions win ties.
                if list.len() == self.k && mag <= list[self.k - 1].0 {
                    continue;
                }
                let at = list.iter().position(|e| mag > e.0).unwrap_or(list.len());
                list.insert(at, (mag, self.position, a, self.recent.iter().collect()));
                list.truncate(self.k);
            }
            self.position += 1;
        }
        Ok(())
    }

    pub fn finish(self) -> Vec<UnitTriggers> {
        self.best
            .into_iter()
            .enumerate()
            .map(|(unit, list)| UnitTriggers {
                unit,
                records: list
                    .into_iter()
                    .map(|(_, position, activation, context)| TriggerRecord { activation, context, position })
                    .collect(),
            })
            .collect()
    }
}

/// For every unit, the `k` positions of largest `|h_t[unit]|` in one pass from zero state.
pub fn top_triggers(model: &CharLm<f32>, corpus: &[u32], k: usize, window: usize) -> Result<Vec<UnitTriggers>> {
    let mut scan = TriggerScan::new(model, k, window)?;
    scan.feed(corpus)?;
    Ok(scan.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationTrace {
    pub query: String,
    pub unit: usize,
    pub activations: Vec<f32>,
    pub word_end: Vec<bool>,
}

/// Activation of `unit` after each character of `query`, read after a single-space primer.
pub fn trace_unit(model: &CharLm<f32>, unit: usize, query: &str) -> Result<ActivationTrace> {
    if unit >= model.hidden() {
        return Err(Error::invalid(format!("unit {unit} out of range for {} units", model.hidden())));
    }
    let inf = model.inference();
    let mut state = inf.zero_state();
    inf.step(&mut state, model.vocab.encode_char(' '))?;
    let mut activations = Vec::with_capacity(query.len());
    for c in model.vocab.encode(query) {
        inf.step(&mut state, c)?;
        activations.push(state.h[unit]);
    }
    Ok(ActivationTrace { query: query.to_string(), unit, activations, word_end: word_end_flags(query) })
}

/// CSV with header `pos,char,activation,is_word_end`.
pub fn write_trace_csv<W: Write>(out: W, trace: &ActivationTrace) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["pos", "char", "activation", "is_word_end"])?;
    for (i, ((c, &a), &e)) in trace.query.chars().zip(&trace.activations).zip(&trace.word_end).enumerate() {
        w.write_record([i.to_string(), c.to_string(), fmt_num(a as f64), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("correlation needs two equal-length series of at least 2 values"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("a series has zero variance".into()));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Pearson r between `h_t[unit]` and `p(space | h_t)` over every position of `corpus`.
pub fn correlate_with_space(model: &CharLm<f32>, corpus: &[u32], unit: usize) -> Result<f64> {
    if unit >= model.hidden() {
        return Err(Error::invalid(format!("unit {unit} out of range")));
    }
    if corpus.len() < 2 {
        return Err(Error::invalid("corpus needs at least 2 characters"));
    }
    let space = model.vocab.get(' ').ok_or_else(|| Error::invalid("vocabulary has no space character"))? as usize;
    let inf = model.inference();
    let mut state = inf.zero_state();
    let (mut acts, mut ps) = (Vec::with_capacity(corpus.len()), Vec::with_capacity(corpus.len()));
    for &c in corpus {
        inf.step(&mut state, c)?;
        acts.push(state.h[unit] as f64);
        ps.push(inf.distribution(&state.h)[space] as f64);
    }
    pearson(&acts, &ps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitScore {
    pub unit: usize,
    /// `(mean at word-final chars − mean elsewhere) / std`.
    pub score: f64,
    pub mean_final: f64,
    pub mean_other: f64,
}

/// Scores every non-constant unit of `activations` (`positions × units`) and sorts descending.
pub fn boundary_alignment_scores(activations: &Matrix<f32>, word_final: &[bool]) -> Result<Vec<UnitScore>> {
    if activations.rows() != word_final.len() {
        return Err(Error::invalid("one word-final flag per position is required"));
    }
    let finals = word_final.iter().filter(|&&f| f).count();
    if finals == 0 || finals == word_final.len() {
        return Err(Error::invalid("need both word-final and other positions"));
    }
    let total = word_final.len() as f64;
    let mut scores = Vec::new();
    for unit in 0..activations.cols() {
        let (mut sf, mut so, mut sum, mut sq) = (0.0, 0.0, 0.0, 0.0);
        for (t, &f) in word_final.iter().enumerate() {
            let a = activations.get(t, unit) as f64;
            if f {
                sf += a;
            } else {
                so += a;
            }
            sum += a;
            sq += a * a;
        }
        let mean = sum / total;
        let var = (sq / total - mean * mean).max(0.0);
        if var <= 1e-24 {
            continue;
        }
        let (mean_final, mean_other) = (sf / finals as f64, so / (total - finals as f64));
        scores.push(UnitScore { unit, score: (mean_final - mean_other) / var.sqrt(), mean_final, mean_other });
    }
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.unit.cmp(&b.unit)));
    Ok(scores)
}

/// Replays `text` from zero state and ranks units by [`boundary_alignment_scores`].
pub fn rank_units_by_boundary_alignment(model: &CharLm<f32>, text: &str) -> Result<Vec<UnitScore>> {
    let ids = model.vocab.encode(text);
    let states = model.inference().hidden_states(&ids)?;
    let mut acts = Matrix::zeros(states.len(), model.hidden());
    for (t, h) in states.iter().enumerate() {
        acts.row_mut(t).copy_from_slice(h);
    }
    boundary_alignment_scores(&acts, &word_end_flags(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charlm::LmParams;
    use crate::corpus::Vocab;
    use crate::numerics::Rng;
    use proptest::prelude::*;

    fn random_model() -> CharLm<f32> {
        CharLm::init(Vocab::build("the quick brown fox.").unwrap(), 4, 6, 21)
    }

    #[test]
    fn constant_unit_ties_go_to_earliest_positions() {
        let vocab = Vocab::build("abc ").unwrap();
        let m = CharLm::new(vocab, LmParams::zeros(5, 2, 3)).unwrap();
        let ids = m.vocab.encode("abc abc");
        let out = top_triggers(&m, &ids, 3, 13).unwrap();
        for u in out {
            let pos: Vec<usize> = u.records.iter().map(|r| r.position).collect();
            assert_eq!(pos, [0, 1, 2]);
            assert!(u.records.iter().all(|r| r.activation == 0.0));
            assert_eq!(u.records[2].context, "abc");
        }
    }

    #[test]
    fn records_replay_from_stream_start() {
        let m = random_model();
        let ids = m.vocab.encode("the quick brown fox. the fox. brown quick the.");
        for u in top_triggers(&m, &ids, 5, 13).unwrap() {
            let mut last = f32::INFINITY;
            for r in &u.records {
                assert!(r.activation.abs() <= last);
                last = r.activation.abs();
                assert!(r.context.chars().count() <= 14);
                let states = m.inference().hidden_states(&ids[..=r.position]).unwrap();
                assert!((states[r.position][u.unit] - r.activation).abs() < 1e-5);
                let expect: String = m.vocab.decode(&ids[r.position.saturating_sub(13)..=r.position]);
                assert_eq!(r.context, expect);
            }
        }
        assert!(top_triggers(&m, &ids, 0, 13).is_err());
    }

    #[test]
    fn trace_shape_and_csv() {
        let m = random_model();
        assert!(trace_unit(&m, 0, "").unwrap().activations.is_empty());
        let t = trace_unit(&m, 2, "the fox").unwrap();
        assert_eq!(t.activations.len(), 7);
        assert!(trace_unit(&m, 6, "x").is_err());
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "pos,char,activation,is_word_end");
        assert_eq!(lines.len(), 8);
        assert!(lines[3].starts_with("2,e,") && lines[3].ends_with(",true"));
    }

    #[test]
    fn pearson_identities() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y = [0.5, 0.25, 0.1, 0.9];
        assert!((pearson(&x, &x.map(|v| 3.0 * v - 2.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&x, &x.map(|v| -v)).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(pearson(&x, &[1.0; 4]), Err(Error::UndefinedCorrelation(_))));
        assert!((pearson(&x, &y).unwrap() - pearson(&y, &x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn unit_tracking_space_probability_correlates_perfectly() {
        // One unit, output weights read that unit directly: p(space) is a
        // monotone (logistic) function of h; with two symbols the logit is
        // affine in h, so correlate against the logit via its monotone link.
        let vocab = Vocab::from_chars(vec!['\u{FFFD}', 'a', ' ']).unwrap();
        let mut p = LmParams::<f32>::zeros(3, 1, 1);
        p.embed.as_mut_slice().copy_from_slice(&[0.0, 1.0, -1.0]);
        p.lstm.w_x.as_mut_slice().copy_from_slice(&[0.0, 0.0, 1.0, 0.0]);
        p.lstm.b.as_mut_slice().copy_from_slice(&[10.0, -10.0, 0.0, 10.0]);
        p.out.b.as_mut_slice().copy_from_slice(&[-1e4, 0.0, 0.0]);
        p.out.w.as_mut_slice().copy_from_slice(&[0.0, 0.0, 1e-3]);
        let m = CharLm::new(vocab, p).unwrap();
        let ids = m.vocab.encode("a a  aa a   a");
        let r = correlate_with_space(&m, &ids, 0).unwrap();
        // For tiny output weights p(space) ≈ 1/2 + h/4000: affine to first order.
        assert!((r - 1.0).abs() < 1e-6, "r = {r}");
    }

    #[test]
    fn alternating_unit_scores_two_over_sigma() {
        let flags = [false, true, false, true, false, false, true, false];
        let mut acts = Matrix::zeros(8, 2);
        for (t, &f) in flags.iter().enumerate() {
            acts.set(t, 0, if f { 1.0 } else { -1.0 });
            acts.set(t, 1, 0.5);
        }
        let scores = boundary_alignment_scores(&acts, &flags).unwrap();
        assert_eq!(scores.len(), 1);
        let vals: Vec<f64> = flags.iter().map(|&f| if f { 1.0 } else { -1.0 }).collect();
        let mean = vals.iter().sum::<f64>() / 8.0;
        let sigma = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 8.0).sqrt();
        assert_eq!(scores[0].unit, 0);
        assert!((scores[0].score - 2.0 / sigma).abs() < 1e-12);
    }

    #[test]
    fn shuffled_labels_score_near_zero() {
        let mut rng = Rng::new(99);
        let n = 100_000;
        let mut acts = Matrix::zeros(n, 1);
        let mut flags = Vec::with_capacity(n);
        for t in 0..n {
            acts.set(t, 0, rng.uniform(-1.0, 1.0) as f32);
            flags.push(rng.bernoulli(0.2));
        }
        let s = boundary_alignment_scores(&acts, &flags).unwrap();
        assert!(s[0].score.abs() < 0.1);
    }

    proptest! {
        #[test]
        fn triggers_are_chunk_invariant(chunk in 1usize..20) {
            let m = random_model();
            let ids = m.vocab.encode("the quick brown fox. the fox. brown quick the. fox");
            let whole = top_triggers(&m, &ids, 4, 13).unwrap();
            let mut scan = TriggerScan::new(&m, 4, 13).unwrap();
            for c in ids.chunks(chunk) {
                scan.feed(c).unwrap();
            }
            prop_assert_eq!(scan.finish(), whole);
        }

        #[test]
        fn pearson_affine_invariance(
            xs in prop::collection::vec(-10.0f64..10.0, 3..30),
            a in prop::sample::select(vec![-3.0, -0.5, 0.25, 2.0]),
            b in -5.0f64..5.0,
        ) {
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * x + i as f64).collect();
            if let Ok(r) = pearson(&xs, &ys) {
                let scaled: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
                let r2 = pearson(&scaled, &ys).unwrap();
                prop_assert!((r2 - a.signum() * r).abs() < 1e-12);
            }
        }
    }
}
