use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::decoder::{ProbeDecoder, ProbeExample};
use super::encode::encode_contexted_many;
use crate::charlm::CharLm;
use crate::corpus::{ContextIndex, ContextedWord, Lookup, SegRecord, WordList};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numerics::{argmax, Rng};

/// Label alphabet of the segmentation probe: no boundary / boundary after this character.
pub const SEG_LABELS: [&str; 2] = ["N", "B"];
pub const NO_BOUNDARY: u32 = 0;
pub const BOUNDARY: u32 = 1;

pub const DEFAULT_PREFIXES: [&str; 22] = [
    "a", "un", "in", "im", "il", "ir", "dis", "mis", "re", "pre", "de", "non", "anti", "over", "under", "out", "sub",
    "inter", "trans", "mid", "co", "fore",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prefixes(HashSet<String>);

impl Prefixes {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(items: I) -> Self {
        Prefixes(items.into_iter().map(|s| s.into().to_lowercase()).collect())
    }

    pub fn contains(&self, s: &str) -> bool {
        self.0.contains(&s.to_lowercase())
    }
}

impl Default for Prefixes {
    fn default() -> Self {
        Prefixes::new(DEFAULT_PREFIXES)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryKind {
    /// The left segment is itself a word.
    WordEdge,
    NotWordEdge,
    EndOfWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundaryClass {
    pub kind: BoundaryKind,
    /// The left segment is a listed prefix.
    pub prefix: bool,
}

/// Classifies the boundary after `position` characters of `word`.
pub fn classify_boundary(word: &str, position: usize, words: &WordList, prefixes: &Prefixes) -> Result<BoundaryClass> {
    let len = word.chars().count();
    if position == 0 || position > len {
        return Err(Error::invalid(format!("boundary {position} outside 1..={len} for {word:?}")));
    }
    let left: String = word.chars().take(position).collect();
    let kind = if position == len {
        BoundaryKind::EndOfWord
    } else if words.contains(&left, Lookup::CaseFolded) {
        BoundaryKind::WordEdge
    } else {
        BoundaryKind::NotWordEdge
    };
    Ok(BoundaryClass { kind, prefix: position < len && prefixes.contains(&left) })
}

/// A word occurrence with per-character boundary labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegInstance {
    pub word: ContextedWord,
    pub labels: Vec<u32>,
}

impl SegInstance {
    pub fn new(record: &SegRecord, word: ContextedWord) -> Self {
        let len = record.surface.chars().count();
        let mut labels = vec![NO_BOUNDARY; len];
        for &b in &record.boundaries {
            labels[b - 1] = BOUNDARY;
        }
        labels[len - 1] = BOUNDARY;
        SegInstance { word, labels }
    }

    /// Gold boundary positions, including the word end.
    pub fn gold(&self) -> Vec<usize> {
        boundaries_from_labels(&self.labels)
    }
}

pub fn boundaries_from_labels(labels: &[u32]) -> Vec<usize> {
    labels.iter().enumerate().filter(|(_, &l)| l == BOUNDARY).map(|(i, _)| i + 1).collect()
}

/// One instance per corpus occurrence (up to `max_occurrences`, each with
/// `window` preceding tokens); words absent from the corpus get one
/// context-free instance.
pub fn build_seg_instances(
    records: &[SegRecord],
    index: &ContextIndex,
    max_occurrences: usize,
    window: usize,
) -> Vec<SegInstance> {
    let mut out = Vec::new();
    for r in records {
        let contexts = index.contexts(&r.surface, max_occurrences, window);
        if contexts.is_empty() {
            out.push(SegInstance::new(r, ContextedWord::new(r.surface.clone(), "")));
        } else {
            out.extend(contexts.into_iter().map(|c| SegInstance::new(r, c)));
        }
    }
    out
}

/// Seeded split by word type: returns `(train, test)`.
pub fn split_by_type(
    records: &[SegRecord],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<SegRecord>, Vec<SegRecord>)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::invalid("train fraction must lie in [0, 1]"));
    }
    let mut types: Vec<&str> =
        records.iter().map(|r| r.surface.as_str()).collect::<BTreeSet<_>>().into_iter().collect();
    Rng::new(seed).shuffle(&mut types);
    let cut = (types.len() as f64 * train_fraction).round() as usize;
    let train_types: HashSet<&str> = types[..cut].iter().copied().collect();
    let (train, test) = records.iter().cloned().partition(|r| train_types.contains(r.surface.as_str()));
    Ok((train, test))
}

/// Encodes instances and pairs them with their labels.
pub fn seg_examples(model: &CharLm<f32>, instances: &[SegInstance], exec: Exec) -> Result<Vec<ProbeExample<f32>>> {
    let words: Vec<ContextedWord> = instances.iter().map(|i| i.word.clone()).collect();
    let enc = encode_contexted_many(model, &words, exec)?;
    Ok(enc.into_iter().zip(instances).map(|(inputs, i)| ProbeExample { inputs, labels: i.labels.clone() }).collect())
}

/// Predicted and gold boundaries of one evaluated occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegItem {
    pub word: String,
    pub gold: Vec<usize>,
    pub predicted: Vec<usize>,
}

/// Predicted boundary positions (1-based, word end included) for each word.
pub fn segment(
    decoder: &ProbeDecoder<f32>,
    model: &CharLm<f32>,
    words: &[ContextedWord],
    exec: Exec,
) -> Result<Vec<Vec<usize>>> {
    let enc = encode_contexted_many(model, words, exec)?;
    let refs: Vec<&_> = enc.iter().collect();
    let chunks: Vec<&[&_]> = refs.chunks(64).collect();
    let dists = exec.try_map(&chunks, |c| decoder.distributions(c))?;
    Ok(dists
        .into_iter()
        .flatten()
        .map(|d| {
            let labels: Vec<u32> = (0..d.rows()).map(|t| argmax(d.row(t)) as u32).collect();
            boundaries_from_labels(&labels)
        })
        .collect())
}

pub fn evaluate_instances(
    decoder: &ProbeDecoder<f32>,
    model: &CharLm<f32>,
    instances: &[SegInstance],
    exec: Exec,
) -> Result<Vec<SegItem>> {
    let words: Vec<ContextedWord> = instances.iter().map(|i| i.word.clone()).collect();
    let predicted = segment(decoder, model, &words, exec)?;
    Ok(instances
        .iter()
        .zip(predicted)
        .map(|(i, p)| SegItem { word: i.word.word.clone(), gold: i.gold(), predicted: p })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    /// All word-internal boundaries.
    All,
    WordEdge,
    NotWordEdge,
    EndOfWord,
    /// Word-internal boundaries whose left segment is not a listed prefix.
    NoPrefix,
}

impl Setting {
    pub const ALL: [Setting; 5] =
        [Setting::All, Setting::WordEdge, Setting::NotWordEdge, Setting::EndOfWord, Setting::NoPrefix];

    pub fn name(self) -> &'static str {
        match self {
            Setting::All => "ALL",
            Setting::WordEdge => "WE",
            Setting::NotWordEdge => "NOT_WE",
            Setting::EndOfWord => "EOW",
            Setting::NoPrefix => "NO_PREF",
        }
    }

    fn admits(self, class: BoundaryClass) -> bool {
        let internal = class.kind != BoundaryKind::EndOfWord;
        match self {
            Setting::All => internal,
            Setting::WordEdge => class.kind == BoundaryKind::WordEdge,
            Setting::NotWordEdge => class.kind == BoundaryKind::NotWordEdge,
            Setting::EndOfWord => !internal,
            Setting::NoPrefix => internal && !class.prefix,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold boundaries in the setting.
    pub support: usize,
}

/// Harmonic mean; zero when both inputs are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Boundary-level precision/recall/F1 over the boundaries admitted by `setting`,
/// micro-averaged over items. Precision is 0 when nothing is predicted.
pub fn seg_metrics(items: &[SegItem], words: &WordList, prefixes: &Prefixes, setting: Setting) -> Result<Prf> {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for item in items {
        let gold: BTreeSet<usize> = item.gold.iter().copied().collect();
        let pred: BTreeSet<usize> = item.predicted.iter().copied().collect();
        for &p in gold.union(&pred) {
            if !setting.admits(classify_boundary(&item.word, p, words, prefixes)?) {
                continue;
            }
            match (gold.contains(&p), pred.contains(&p)) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => unreachable!(),
            }
        }
    }
    if tp + fn_ == 0 {
        return Err(Error::UndefinedMetric(format!("no gold boundaries in setting {}", setting.name())));
    }
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = tp as f64 / (tp + fn_) as f64;
    Ok(Prf { precision, recall, f1: f1_score(precision, recall), support: tp + fn_ })
}

/// Metrics for every setting; settings without gold boundaries are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegReport {
    #[serde(rename = "ALL")]
    pub all: Option<Prf>,
    #[serde(rename = "WE")]
    pub word_edge: Option<Prf>,
    #[serde(rename = "NOT_WE")]
    pub not_word_edge: Option<Prf>,
    #[serde(rename = "EOW")]
    pub end_of_word: Option<Prf>,
    #[serde(rename = "NO_PREF")]
    pub no_prefix: Option<Prf>,
}

pub fn seg_report(items: &[SegItem], words: &WordList, prefixes: &Prefixes) -> Result<SegReport> {
    let get = |s| match seg_metrics(items, words, prefixes, s) {
        Ok(m) => Ok(Some(m)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    };
    Ok(SegReport {
        all: get(Setting::All)?,
        word_edge: get(Setting::WordEdge)?,
        not_word_edge: get(Setting::NotWordEdge)?,
        end_of_word: get(Setting::EndOfWord)?,
        no_prefix: get(Setting::NoPrefix)?,
    })
}
