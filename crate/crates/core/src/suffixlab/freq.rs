use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

/// Endings appended to a stripped remainder when looking for its standalone base.
pub const DEFAULT_RECOVERY: [&str; 5] = ["", "e", "s", "es", "ed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffixFrequency {
    /// Tokens ending in the suffix (with a non-empty remainder).
    pub suffixed: usize,
    /// Corpus occurrences of recovered bases, each distinct remainder counted once.
    pub standalone: usize,
}

/// Case-folded token counts, reusable across suffixes.
#[derive(Debug, Clone, Default)]
pub struct TokenCounts(HashMap<String, usize>);

impl TokenCounts {
    pub fn new<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut m = HashMap::new();
        for t in tokens {
            *m.entry(t.to_lowercase()).or_insert(0) += 1;
        }
        TokenCounts(m)
    }

    pub fn count(&self, form: &str) -> usize {
        self.0.get(form).copied().unwrap_or(0)
    }
}

pub fn suffix_frequency(counts: &TokenCounts, suffix: &str, recovery: &[&str]) -> SuffixFrequency {
    let suffix = suffix.to_lowercase();
    let mut suffixed = 0;
    let mut remainders = BTreeSet::new();
    for (form, &n) in &counts.0 {
        if let Some(rest) = form.strip_suffix(&suffix) {
            if !rest.is_empty() {
                suffixed += n;
                remainders.insert(rest.to_string());
            }
        }
    }
    let standalone = remainders
        .iter()
        .map(|r| {
            let forms: BTreeSet<String> = recovery.iter().map(|e| format!("{r}{e}")).collect();
            forms.iter().map(|f| counts.count(f)).sum::<usize>()
        })
        .sum();
    SuffixFrequency { suffixed, standalone }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_bases() {
        let c = TokenCounts::new("population populate populates".split(' '));
        assert_eq!(suffix_frequency(&c, "ion", &DEFAULT_RECOVERY), SuffixFrequency { suffixed: 1, standalone: 2 });
        assert_eq!(suffix_frequency(&c, "ness", &DEFAULT_RECOVERY), SuffixFrequency { suffixed: 0, standalone: 0 });
    }

    #[test]
    fn remainders_count_once_and_case_folds() {
        let c = TokenCounts::new("Action action act acts".split(' '));
        assert_eq!(suffix_frequency(&c, "ion", &DEFAULT_RECOVERY), SuffixFrequency { suffixed: 2, standalone: 2 });
    }
}
