use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::tokenize_words;
use crate::numerics::Rng;

pub const DEFAULT_MAX_OCCURRENCES: usize = 15;
pub const DEFAULT_WINDOW: usize = 15;

/// A target word together with the word tokens that preceded it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextedWord {
    pub word: String,
    /// Preceding tokens joined by single spaces (empty at stream start).
    pub context: String,
    /// Token index of the occurrence in the source corpus.
    pub occurrence: usize,
}

impl ContextedWord {
    pub fn new(word: impl Into<String>, context: impl Into<String>) -> Self {
        ContextedWord { word: word.into(), context: context.into(), occurrence: 0 }
    }

    /// The text the language model consumes: context, one space, word.
    pub fn full_text(&self) -> String {
        if self.context.is_empty() {
            self.word.clone()
        } else {
            format!("{} {}", self.context, self.word)
        }
    }
}

/// Token positions of every word in a corpus, for repeated context lookups.
#[derive(Debug, Clone)]
pub struct ContextIndex {
    tokens: Vec<String>,
    positions: HashMap<String, Vec<usize>>,
}

impl ContextIndex {
    pub fn new(corpus: &str) -> Self {
        let tokens: Vec<String> = tokenize_words(corpus).into_iter().map(|t| t.text).collect();
        let mut positions: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, t) in tokens.iter().enumerate() {
            positions.entry(t.clone()).or_default().push(i);
        }
        ContextIndex { tokens, positions }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, word: &str) -> usize {
        self.positions.get(word).map_or(0, Vec::len)
    }

    /// `n` distinct occurrences drawn uniformly (seeded) from tokens accepted
    /// by `keep`, returned in corpus order.
    pub fn sample_occurrences(
        &self,
        n: usize,
        window: usize,
        seed: u64,
        keep: impl Fn(&str) -> bool,
    ) -> Vec<ContextedWord> {
        let mut eligible: Vec<usize> = (0..self.tokens.len()).filter(|&i| keep(&self.tokens[i])).collect();
        Rng::new(seed).shuffle(&mut eligible);
        eligible.truncate(n);
        eligible.sort_unstable();
        eligible
            .into_iter()
            .map(|i| ContextedWord {
                word: self.tokens[i].clone(),
                context: self.tokens[i.saturating_sub(window)..i].join(" "),
                occurrence: i,
            })
            .collect()
    }

    /// The first `max_occurrences` exact-match occurrences of `word`, each with
    /// up to `window` preceding tokens.
    pub fn contexts(&self, word: &str, max_occurrences: usize, window: usize) -> Vec<ContextedWord> {
        let Some(pos) = self.positions.get(word) else {
            return Vec::new();
        };
        pos.iter()
            .take(max_occurrences)
            .map(|&i| ContextedWord {
                word: word.to_string(),
                context: self.tokens[i.saturating_sub(window)..i].join(" "),
                occurrence: i,
            })
            .collect()
    }
}

pub fn extract_contexts(corpus: &str, word: &str, max_occurrences: usize, window: usize) -> Vec<ContextedWord> {
    ContextIndex::new(corpus).contexts(word, max_occurrences, window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_occurrences_are_seeded_and_filtered() {
        let idx = ContextIndex::new("a B c d E f g h");
        let lower = |w: &str| w.chars().all(char::is_lowercase);
        let s = idx.sample_occurrences(4, 2, 9, lower);
        assert_eq!(s.len(), 4);
        assert!(s.windows(2).all(|w| w[0].occurrence < w[1].occurrence));
        assert!(s.iter().all(
            |w| lower(&w.word) && w.context == idx.tokens()[w.occurrence.saturating_sub(2)..w.occurrence].join(" ")
        ));
        assert_eq!(s, idx.sample_occurrences(4, 2, 9, lower));
        assert_eq!(idx.sample_occurrences(100, 2, 9, lower).len(), 6);
    }

    #[test]
    fn contexts_by_hand() {
        let c = extract_contexts("a b c target d target", "target", 15, 15);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].context, "a b c");
        assert_eq!(c[1].context, "a b c target d");
        assert_eq!(c[1].occurrence, 5);
    }

    #[test]
    fn stream_start_and_limits() {
        let c = extract_contexts("target x target y target", "target", 1, 15);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].context, "");
        assert_eq!(c[0].full_text(), "target");
        let c = extract_contexts("a b c d e target", "target", 15, 2);
        assert_eq!(c[0].context, "d e");
        assert_eq!(c[0].full_text(), "d e target");
    }

    #[test]
    fn absent_word() {
        assert!(extract_contexts("a b c", "zzz", 15, 15).is_empty());
    }
}
