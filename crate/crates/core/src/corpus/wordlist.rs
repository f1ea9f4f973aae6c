use std::collections::HashSet;
use std::path::Path;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    Exact,
    CaseFolded,
}

/// A set of known words with exact and case-folded membership.
#[derive(Debug, Clone, Default)]
pub struct WordList {
    exact: HashSet<String>,
    folded: HashSet<String>,
}

impl WordList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: &str) {
        self.folded.insert(word.to_lowercase());
        self.exact.insert(word.to_string());
    }

    pub fn contains(&self, word: &str, mode: Lookup) -> bool {
        match mode {
            Lookup::Exact => self.exact.contains(word),
            Lookup::CaseFolded => self.folded.contains(&word.to_lowercase()),
        }
    }

    pub fn len(&self) -> usize {
        self.exact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty()
    }

    pub fn extend(&mut self, other: &WordList) {
        self.exact.extend(other.exact.iter().cloned());
        self.folded.extend(other.folded.iter().cloned());
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.exact.iter().map(String::as_str)
    }
}

impl<S: AsRef<str>> FromIterator<S> for WordList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut w = WordList::new();
        for s in iter {
            w.insert(s.as_ref());
        }
        w
    }
}

/// One word per line; blank lines are ignored.
pub fn load_wordlist(path: &Path) -> Result<WordList> {
    let text = std::fs::read_to_string(path)?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).collect())
}
