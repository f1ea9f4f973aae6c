use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::decoder::{ProbeDecoder, ProbeExample};
use super::encode::encode_primed_many;
use crate::charlm::CharLm;
use crate::corpus::{TaggedSentence, Upos};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numerics::{argmax, Matrix, Rng};

/// Sequences per decoder call during evaluation.
pub const TAG_BATCH: usize = 64;

/// The 17 UPOS tags in canonical order; index = `Upos as usize`.
pub fn tag_labels() -> Vec<String> {
    Upos::ALL.iter().map(|u| u.as_str().to_string()).collect()
}

/// A sentence as characters, each labelled with its word's tag (X on spaces).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagInstance {
    pub text: String,
    pub labels: Vec<u32>,
    /// Character index of each word's final character, with the word's gold tag.
    pub word_ends: Vec<(usize, Upos)>,
    pub forms: Vec<String>,
}

impl TagInstance {
    pub fn new(sentence: &TaggedSentence) -> Result<Self> {
        let mut labels = Vec::new();
        let mut word_ends = Vec::new();
        for (i, tok) in sentence.tokens.iter().enumerate() {
            if tok.form.is_empty() || tok.form.chars().any(char::is_whitespace) {
                return Err(Error::invalid(format!("token form {:?} is empty or contains whitespace", tok.form)));
            }
            if i > 0 {
                labels.push(Upos::X as u32);
            }
            labels.extend(std::iter::repeat_n(tok.upos as u32, tok.form.chars().count()));
            word_ends.push((labels.len() - 1, tok.upos));
        }
        Ok(TagInstance {
            text: sentence.text(),
            labels,
            word_ends,
            forms: sentence.tokens.iter().map(|t| t.form.clone()).collect(),
        })
    }
}

/// Seeded split by sentence: returns `(train, test)`, each in corpus order.
pub fn split_sentences(
    sentences: &[TaggedSentence],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<TaggedSentence>, Vec<TaggedSentence>)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::invalid("train fraction must lie in [0, 1]"));
    }
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    Rng::new(seed).shuffle(&mut order);
    let cut = (sentences.len() as f64 * train_fraction).round() as usize;
    let mut is_train = vec![false; sentences.len()];
    for &i in &order[..cut] {
        is_train[i] = true;
    }
    let (train, test): (Vec<_>, Vec<_>) = sentences.iter().zip(&is_train).partition(|(_, &t)| t);
    Ok((train.into_iter().map(|(s, _)| s.clone()).collect(), test.into_iter().map(|(s, _)| s.clone()).collect()))
}

pub fn tag_examples(model: &CharLm<f32>, instances: &[TagInstance], exec: Exec) -> Result<Vec<ProbeExample<f32>>> {
    let texts: Vec<String> = instances.iter().map(|i| i.text.clone()).collect();
    let enc = encode_primed_many(model, &texts, exec)?;
    Ok(enc.into_iter().zip(instances).map(|(inputs, i)| ProbeExample { inputs, labels: i.labels.clone() }).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TagPrediction {
    /// `len × 17` tag distributions.
    pub probs: Matrix<f32>,
    pub char_tags: Vec<Upos>,
}

impl TagPrediction {
    /// Tag of the word ending at character `end`.
    pub fn word_tag(&self, end: usize) -> Upos {
        self.char_tags[end]
    }

    /// Probability of the argmax tag at character `end`.
    pub fn confidence(&self, end: usize) -> f32 {
        self.probs.row(end)[self.char_tags[end] as usize]
    }
}

fn check_labels(decoder: &ProbeDecoder<f32>) -> Result<()> {
    if decoder.labels != tag_labels() {
        return Err(Error::invalid("decoder label vocabulary is not the UPOS tag set"));
    }
    Ok(())
}

/// Per-character tag distributions and argmax tags for each text.
pub fn tag(
    decoder: &ProbeDecoder<f32>,
    model: &CharLm<f32>,
    texts: &[String],
    exec: Exec,
) -> Result<Vec<TagPrediction>> {
    check_labels(decoder)?;
    let enc = encode_primed_many(model, texts, exec)?;
    let refs: Vec<&Matrix<f32>> = enc.iter().collect();
    let chunks: Vec<&[&Matrix<f32>]> = refs.chunks(TAG_BATCH).collect();
    let dists = exec.try_map(&chunks, |c| decoder.distributions(c))?;
    Ok(dists
        .into_iter()
        .flatten()
        .map(|probs| {
            let char_tags = (0..probs.rows()).map(|t| Upos::ALL[argmax(probs.row(t))]).collect();
            TagPrediction { probs, char_tags }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagReport {
    /// Over every character, spaces included.
    pub char_accuracy: f64,
    /// Tag at each word's final character against the gold tag.
    pub word_accuracy: f64,
    /// Every test word tagged with the most frequent training tag.
    pub majority_baseline: f64,
    pub majority_tag: Upos,
    /// Most frequent training tag per word form, falling back to the majority tag.
    pub per_type_baseline: f64,
    pub chars: usize,
    pub words: usize,
}

pub fn evaluate_tagging(
    decoder: &ProbeDecoder<f32>,
    model: &CharLm<f32>,
    test: &[TagInstance],
    train: &[TagInstance],
    exec: Exec,
) -> Result<TagReport> {
    let texts: Vec<String> = test.iter().map(|i| i.text.clone()).collect();
    let preds = tag(decoder, model, &texts, exec)?;
    let (mut char_ok, mut chars, mut word_ok, mut words) = (0usize, 0usize, 0usize, 0usize);
    for (inst, pred) in test.iter().zip(&preds) {
        for (t, &gold) in inst.labels.iter().enumerate() {
            chars += 1;
            char_ok += usize::from(pred.char_tags[t] as u32 == gold);
        }
        for &(end, gold) in &inst.word_ends {
            words += 1;
            word_ok += usize::from(pred.word_tag(end) == gold);
        }
    }
    if words == 0 {
        return Err(Error::UndefinedMetric("tagging test set has no words".into()));
    }

    let mut global: HashMap<Upos, usize> = HashMap::new();
    let mut by_type: HashMap<&str, HashMap<Upos, usize>> = HashMap::new();
    for inst in train {
        for (form, &(_, tag)) in inst.forms.iter().zip(&inst.word_ends) {
            *global.entry(tag).or_default() += 1;
            *by_type.entry(form).or_default().entry(tag).or_default() += 1;
        }
    }
    let most_frequent =
        |counts: &HashMap<Upos, usize>| counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&u, _)| u);
    let majority_tag = most_frequent(&global).unwrap_or(Upos::NOUN);
    let (mut maj_ok, mut type_ok) = (0usize, 0usize);
    for inst in test {
        for (form, &(_, gold)) in inst.forms.iter().zip(&inst.word_ends) {
            maj_ok += usize::from(gold == majority_tag);
            let guess = by_type.get(form.as_str()).and_then(most_frequent).unwrap_or(majority_tag);
            type_ok += usize::from(gold == guess);
        }
    }
    Ok(TagReport {
        char_accuracy: char_ok as f64 / chars as f64,
        word_accuracy: word_ok as f64 / words as f64,
        majority_baseline: maj_ok as f64 / words as f64,
        majority_tag,
        per_type_baseline: type_ok as f64 / words as f64,
        chars,
        words,
    })
}

/// Full tag distribution after every character of `text`.
pub fn tag_evolution(decoder: &ProbeDecoder<f32>, model: &CharLm<f32>, text: &str) -> Result<Matrix<f32>> {
    Ok(tag(decoder, model, &[text.to_string()], Exec::Sequential)?.remove(0).probs)
}

/// CSV with header `pos,char,<labels…>`, one row per character.
pub fn write_evolution_csv<W: Write>(out: W, text: &str, labels: &[String], probs: &Matrix<f32>) -> Result<()> {
    let mut w = crate::report::csv_writer(out);
    let mut header = vec!["pos".to_string(), "char".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for (t, c) in text.chars().enumerate() {
        let mut row = vec![t.to_string(), c.to_string()];
        row.extend(probs.row(t).iter().map(|&p| crate::report::fmt_num(p as f64)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TaggedToken;

    fn sentence(words: &[(&str, Upos)]) -> TaggedSentence {
        TaggedSentence { tokens: words.iter().map(|&(f, u)| TaggedToken { form: f.into(), upos: u }).collect() }
    }

    #[test]
    fn character_labels_follow_words() {
        let inst = TagInstance::new(&sentence(&[("I", Upos::PRON), ("like", Upos::VERB)])).unwrap();
        assert_eq!(inst.text, "I like");
        let v = Upos::VERB as u32;
        assert_eq!(inst.labels, [Upos::PRON as u32, Upos::X as u32, v, v, v, v]);
        assert_eq!(inst.word_ends, [(0, Upos::PRON), (5, Upos::VERB)]);
    }

    #[test]
    fn word_tag_reads_final_character() {
        let mut probs = Matrix::zeros(4, 17);
        let tags = [Upos::NOUN, Upos::ADJ, Upos::ADJ, Upos::VERB];
        for (t, u) in tags.iter().enumerate() {
            probs.set(t, *u as usize, 1.0);
        }
        let pred = TagPrediction { probs, char_tags: tags.to_vec() };
        assert_eq!(pred.word_tag(3), Upos::VERB);
        assert_eq!(pred.confidence(3), 1.0);
    }

    #[test]
    fn evolution_csv_layout() {
        let labels = vec!["A".to_string(), "B".to_string()];
        let probs = Matrix::from_rows(&[&[0.25f32, 0.75], &[1.0, 0.0]]).unwrap();
        let mut buf = Vec::new();
        write_evolution_csv(&mut buf, "a,", &labels, &probs).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "pos,char,A,B\n0,a,0.25,0.75\n1,\",\",1,0\n");
    }

    #[test]
    fn sentence_split_partitions_in_order() {
        let all: Vec<TaggedSentence> =
            (0..20).map(|i| sentence(&[(["a", "b", "c", "d"][i % 4], Upos::NOUN)])).collect();
        let (train, test) = split_sentences(&all, 0.75, 3).unwrap();
        assert_eq!((train.len(), test.len()), (15, 5));
        let (again, _) = split_sentences(&all, 0.75, 3).unwrap();
        assert_eq!(train, again);
    }
}
