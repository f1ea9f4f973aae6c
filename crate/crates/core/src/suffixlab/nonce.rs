use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::inventory::{Category, SuffixSpec};
use crate::charlm::{CharLm, SampledWord, WordSampler};
use crate::corpus::{ContextedWord, Lookup, WordList};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numerics::Rng;
use crate::probes::{tag, ProbeDecoder};
use crate::report::fmt_num;

pub const MIN_REFERENCE_WORDS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population mean and standard deviation.
    pub fn of(xs: &[f64]) -> Self {
        if let Some(&first) = xs.first() {
            if xs.iter().all(|&x| x == first) {
                return MeanStd { mean: first, std: 0.0 };
            }
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }

    /// Lowest admissible value: one standard deviation below the mean.
    pub fn floor(&self) -> f64 {
        self.mean - self.std
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterThresholds {
    /// Mean per-character natural-log probability.
    pub logprob: MeanStd,
    pub p_space: MeanStd,
    pub confidence: MeanStd,
    pub sample_size: usize,
}

/// Per-word scores used by both the reference statistics and the filters.
#[derive(Debug, Clone, PartialEq)]
pub struct WordObservation {
    pub mean_logprob: f64,
    pub p_space: f64,
    pub category: Option<Category>,
    pub confidence: f64,
}

fn mean_logprob_and_space(model: &CharLm<f32>, word: &ContextedWord) -> Result<(f64, f64)> {
    let inf = model.inference();
    let mut st = inf.zero_state();
    let prefix = format!(" {}", word.full_text());
    let ids = model.vocab.encode(&prefix);
    let len = word.word.chars().count();
    if len == 0 {
        return Err(Error::invalid("empty word"));
    }
    inf.consume(&mut st, &ids[..ids.len() - len])?;
    let mut total = 0.0;
    for &c in &ids[ids.len() - len..] {
        total += (inf.distribution(&st.h)[c as usize] as f64).max(crate::numerics::PROB_FLOOR).ln();
        inf.step(&mut st, c)?;
    }
    let p_space = model.vocab.get(' ').map_or(0.0, |s| inf.distribution(&st.h)[s as usize] as f64);
    Ok((total / len as f64, p_space))
}

/// Tag and confidence at the final character of each word read in its context.
fn tag_in_context(
    tagger: &ProbeDecoder<f32>,
    model: &CharLm<f32>,
    words: &[ContextedWord],
    exec: Exec,
) -> Result<Vec<(Option<Category>, f64)>> {
    let texts: Vec<String> = words.iter().map(ContextedWord::full_text).collect();
    let preds = tag(tagger, model, &texts, exec)?;
    Ok(preds
        .iter()
        .zip(&texts)
        .map(|(p, t)| {
            let end = t.chars().count() - 1;
            (Category::from_upos(p.word_tag(end)), p.confidence(end) as f64)
        })
        .collect())
}

pub fn observe_words(
    model: &CharLm<f32>,
    tagger: &ProbeDecoder<f32>,
    words: &[ContextedWord],
    exec: Exec,
) -> Result<Vec<WordObservation>> {
    let scores = exec.try_map(words, |w| mean_logprob_and_space(model, w))?;
    let tags = tag_in_context(tagger, model, words, exec)?;
    Ok(scores
        .into_iter()
        .zip(tags)
        .map(|((mean_logprob, p_space), (category, confidence))| WordObservation {
            mean_logprob,
            p_space,
            category,
            confidence,
        })
        .collect())
}

/// Reference statistics over real word occurrences.
pub fn measure_real_word_stats(
    model: &CharLm<f32>,
    tagger: &ProbeDecoder<f32>,
    sample: &[ContextedWord],
    exec: Exec,
) -> Result<FilterThresholds> {
    if sample.len() < MIN_REFERENCE_WORDS {
        return Err(Error::invalid(format!(
            "reference sample has {} words, need at least {MIN_REFERENCE_WORDS}",
            sample.len()
        )));
    }
    let obs = observe_words(model, tagger, sample, exec)?;
    let col = |f: fn(&WordObservation) -> f64| MeanStd::of(&obs.iter().map(f).collect::<Vec<_>>());
    Ok(FilterThresholds {
        logprob: col(|o| o.mean_logprob),
        p_space: col(|o| o.p_space),
        confidence: col(|o| o.confidence),
        sample_size: sample.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterStage {
    Dictionary,
    Lowercase,
    SuffixEnding,
    LogProb,
    SpaceProb,
    Category,
    Confidence,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionLog {
    pub sampled: usize,
    pub dictionary: usize,
    pub lowercase: usize,
    pub suffix_ending: usize,
    pub logprob: usize,
    pub space_prob: usize,
    pub category: usize,
    pub confidence: usize,
    pub duplicate: usize,
    /// Passed every filter after its category was already full.
    pub category_full: usize,
    pub accepted: usize,
}

impl RejectionLog {
    fn reject(&mut self, stage: FilterStage) {
        *match stage {
            FilterStage::Dictionary => &mut self.dictionary,
            FilterStage::Lowercase => &mut self.lowercase,
            FilterStage::SuffixEnding => &mut self.suffix_ending,
            FilterStage::LogProb => &mut self.logprob,
            FilterStage::SpaceProb => &mut self.space_prob,
            FilterStage::Category => &mut self.category,
            FilterStage::Confidence => &mut self.confidence,
        } += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonceBase {
    pub surface: String,
    pub tag: Category,
    pub confidence: f64,
    pub mean_logprob: f64,
    pub p_space: f64,
    pub context: String,
    /// LM hidden state after the base's last character.
    pub state: Vec<f32>,
}

/// The nonce-base filter chain, applied in stage order.
pub struct NonceFilter<'a> {
    pub thresholds: FilterThresholds,
    pub dictionaries: Vec<&'a WordList>,
    pub suffixes: &'a [SuffixSpec],
}

impl NonceFilter<'_> {
    pub fn check_surface(&self, surface: &str) -> std::result::Result<(), FilterStage> {
        if self.dictionaries.iter().any(|d| d.contains(surface, Lookup::CaseFolded)) {
            return Err(FilterStage::Dictionary);
        }
        if surface.is_empty() || !surface.chars().all(|c| c.is_alphabetic() && c.is_lowercase()) {
            return Err(FilterStage::Lowercase);
        }
        if self.suffixes.iter().any(|s| surface.ends_with(&s.surface)) {
            return Err(FilterStage::SuffixEnding);
        }
        Ok(())
    }

    pub fn check_scores(&self, mean_logprob: f64, p_space: f64) -> std::result::Result<(), FilterStage> {
        if mean_logprob < self.thresholds.logprob.floor() {
            return Err(FilterStage::LogProb);
        }
        if p_space < self.thresholds.p_space.floor() {
            return Err(FilterStage::SpaceProb);
        }
        Ok(())
    }

    pub fn check_tag(&self, category: Option<Category>, confidence: f64) -> std::result::Result<Category, FilterStage> {
        let c = category.ok_or(FilterStage::Category)?;
        if confidence < self.thresholds.confidence.floor() {
            return Err(FilterStage::Confidence);
        }
        Ok(c)
    }

    pub fn verify(&self, base: &NonceBase) -> std::result::Result<(), FilterStage> {
        self.check_surface(&base.surface)?;
        self.check_scores(base.mean_logprob, base.p_space)?;
        self.check_tag(Some(base.tag), base.confidence).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonceConfig {
    pub per_category: usize,
    /// Maximum sampled tokens.
    pub budget: usize,
    /// Independent sampling streams; fixed so results do not depend on thread count.
    pub streams: usize,
    /// Tokens drawn per stream per round.
    pub round: usize,
    pub seed: u64,
}

impl Default for NonceConfig {
    fn default() -> Self {
        NonceConfig { per_category: 50, budget: 1_000_000, streams: 4, round: 250, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonceGeneration {
    pub bases: Vec<NonceBase>,
    pub log: RejectionLog,
    /// Every category reached its target within the budget.
    pub complete: bool,
}

pub fn generate_nonce_bases(
    model: &CharLm<f32>,
    tagger: &ProbeDecoder<f32>,
    filter: &NonceFilter<'_>,
    config: &NonceConfig,
    exec: Exec,
) -> Result<NonceGeneration> {
    if config.streams == 0 || config.round == 0 || config.per_category == 0 {
        return Err(Error::invalid("streams, round and per-category target must be >= 1"));
    }
    let mut samplers = (0..config.streams)
        .map(|i| WordSampler::new(model, Rng::with_stream(config.seed, 100 + i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut log = RejectionLog::default();
    let mut bases: Vec<NonceBase> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let full = |bases: &[NonceBase], c: Category| bases.iter().filter(|b| b.tag == c).count() >= config.per_category;
    while log.sampled < config.budget && !Category::ALL.iter().all(|&c| full(&bases, c)) {
        let round = exec
            .map_mut(&mut samplers, |s| (0..config.round).map(|_| s.next_word()).collect::<Result<Vec<SampledWord>>>());
        let mut survivors = Vec::new();
        for w in round.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten() {
            if log.sampled >= config.budget {
                break;
            }
            log.sampled += 1;
            if let Err(stage) =
                filter.check_surface(&w.text).and_then(|_| filter.check_scores(w.mean_logprob, w.p_space))
            {
                log.reject(stage);
                continue;
            }
            if !seen.insert(w.text.clone()) {
                log.duplicate += 1;
                continue;
            }
            survivors.push(w);
        }
        let words: Vec<ContextedWord> =
            survivors.iter().map(|w| ContextedWord::new(w.text.clone(), w.context.clone())).collect();
        let tags = tag_in_context(tagger, model, &words, exec)?;
        for (w, (category, confidence)) in survivors.into_iter().zip(tags) {
            match filter.check_tag(category, confidence) {
                Err(stage) => log.reject(stage),
                Ok(c) if full(&bases, c) => log.category_full += 1,
                Ok(c) => {
                    log.accepted += 1;
                    bases.push(NonceBase {
                        surface: w.text,
                        tag: c,
                        confidence,
                        mean_logprob: w.mean_logprob,
                        p_space: w.p_space,
                        context: w.context,
                        state: w.end_state,
                    });
                }
            }
        }
    }
    let complete = Category::ALL.iter().all(|&c| full(&bases, c));
    Ok(NonceGeneration { bases, log, complete })
}

/// `surface<TAB>tag<TAB>confidence<TAB>logprob<TAB>p_space`, one base per line.
pub fn write_bases_tsv<W: Write>(mut out: W, bases: &[NonceBase]) -> Result<()> {
    for b in bases {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            b.surface,
            b.tag,
            fmt_num(b.confidence),
            fmt_num(b.mean_logprob),
            fmt_num(b.p_space)
        )?;
    }
    Ok(())
}

/// `surface<TAB>context`, companion to the base dump.
pub fn write_contexts_tsv<W: Write>(mut out: W, bases: &[NonceBase]) -> Result<()> {
    for b in bases {
        writeln!(out, "{}\t{}", b.surface, b.context)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseLine {
    pub surface: String,
    pub tag: Category,
    pub confidence: f64,
    pub mean_logprob: f64,
    pub p_space: f64,
}

pub fn read_bases_tsv(path: &Path) -> Result<Vec<BaseLine>> {
    let reader = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: String| Error::Parse { path: path.to_path_buf(), line: i + 1, message: m };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(err(format!("expected 5 tab-separated fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("bad number {s:?}: {e}")));
        out.push(BaseLine {
            surface: f[0].to_string(),
            tag: f[1].parse().map_err(|e: Error| err(e.to_string()))?,
            confidence: num(f[2])?,
            mean_logprob: num(f[3])?,
            p_space: num(f[4])?,
        });
    }
    Ok(out)
}

pub fn read_contexts_tsv(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            l.split_once('\t').map(|(a, b)| (a.to_string(), b.to_string())).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected surface<TAB>context".into(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suffixlab::default_inventory;

    fn thresholds() -> FilterThresholds {
        FilterThresholds {
            logprob: MeanStd { mean: -2.0, std: 0.5 },
            p_space: MeanStd { mean: 0.6, std: 0.2 },
            confidence: MeanStd { mean: 0.8, std: 0.1 },
            sample_size: 100,
        }
    }

    #[test]
    fn mean_std_of_identical_values() {
        let m = MeanStd::of(&[0.3; 10]);
        assert_eq!(m.mean, 0.3);
        assert_eq!(m.std, 0.0);
    }

    #[test]
    fn filter_stages() {
        let dict: WordList = ["walk"].into_iter().collect();
        let inv = default_inventory();
        let f = NonceFilter { thresholds: thresholds(), dictionaries: vec![&dict], suffixes: &inv };
        assert_eq!(f.check_surface("Walk"), Err(FilterStage::Dictionary));
        assert_eq!(f.check_surface("Blorf"), Err(FilterStage::Lowercase));
        assert_eq!(f.check_surface("blor3"), Err(FilterStage::Lowercase));
        assert_eq!(f.check_surface("blorfness"), Err(FilterStage::SuffixEnding));
        assert_eq!(f.check_surface("restruct"), Ok(()));
        assert_eq!(f.check_scores(-2.6, 0.9), Err(FilterStage::LogProb));
        assert_eq!(f.check_scores(-2.4, 0.3), Err(FilterStage::SpaceProb));
        assert_eq!(f.check_scores(-2.5, 0.4), Ok(()));
        assert_eq!(f.check_tag(None, 0.9), Err(FilterStage::Category));
        assert_eq!(f.check_tag(Some(Category::VERB), 0.6), Err(FilterStage::Confidence));
        assert_eq!(f.check_tag(Some(Category::VERB), 0.75), Ok(Category::VERB));
    }

    #[test]
    fn tsv_round_trip() {
        let b = NonceBase {
            surface: "restruct".into(),
            tag: Category::VERB,
            confidence: 0.912345678,
            mean_logprob: -1.5,
            p_space: 0.25,
            context: "we will".into(),
            state: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.tsv");
        let mut buf = Vec::new();
        write_bases_tsv(&mut buf, std::slice::from_ref(&b)).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "restruct\tVERB\t0.912346\t-1.5\t0.25\n");
        std::fs::write(&p, buf).unwrap();
        let back = read_bases_tsv(&p).unwrap();
        assert_eq!(back[0].surface, "restruct");
        assert_eq!(back[0].tag, Category::VERB);
        std::fs::write(&p, "x\tNOUN\t1\n").unwrap();
        assert!(matches!(read_bases_tsv(&p), Err(Error::Parse { line: 1, .. })));
    }
}
