use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory as G};

/// A word token with character (not byte) offsets into its source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordToken {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// Whitespace, punctuation (P*) and symbols (S*) separate words.
pub fn is_delimiter(c: char) -> bool {
    if c.is_whitespace() {
        return true;
    }
    matches!(
        get_general_category(c),
        G::ConnectorPunctuation
            | G::DashPunctuation
            | G::OpenPunctuation
            | G::ClosePunctuation
            | G::InitialPunctuation
            | G::FinalPunctuation
            | G::OtherPunctuation
            | G::MathSymbol
            | G::CurrencySymbol
            | G::ModifierSymbol
            | G::OtherSymbol
    )
}

/// Maximal runs of non-delimiter characters.
pub fn tokenize_words(text: &str) -> Vec<WordToken> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    let mut pos = 0;
    for c in text.chars() {
        if is_delimiter(c) {
            if !current.is_empty() {
                out.push(WordToken { text: std::mem::take(&mut current), start, end: pos });
            }
        } else {
            if current.is_empty() {
                start = pos;
            }
            current.push(c);
        }
        pos += 1;
    }
    if !current.is_empty() {
        out.push(WordToken { text: current, start, end: pos });
    }
    out
}

/// Per-character flag: true where the character is the last one of a word token.
pub fn word_end_flags(text: &str) -> Vec<bool> {
    let n = text.chars().count();
    let mut flags = vec![false; n];
    for t in tokenize_words(text) {
        flags[t.end - 1] = true;
    }
    flags
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(s: &str) -> Vec<String> {
        tokenize_words(s).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn bracket_is_a_delimiter() {
        assert_eq!(words("its daily paper) grew"), vec!["its", "daily", "paper", "grew"]);
    }

    #[test]
    fn dash_is_a_delimiter() {
        assert_eq!(words("1973 - or"), vec!["1973", "or"]);
        assert_eq!(words("weaken-little"), vec!["weaken", "little"]);
    }

    #[test]
    fn empty_text() {
        assert!(tokenize_words("").is_empty());
        assert!(tokenize_words("  ,. ").is_empty());
    }

    #[test]
    fn char_offsets_not_bytes() {
        let t = tokenize_words("café au");
        assert_eq!((t[0].start, t[0].end), (0, 4));
        assert_eq!((t[1].start, t[1].end), (5, 7));
    }

    #[test]
    fn word_end_positions() {
        assert_eq!(word_end_flags("ab c."), vec![false, true, false, true, false]);
    }

    proptest! {
        #[test]
        fn offsets_slice_back_to_tokens(text in "[a-zA-Z0-9 ,.;()'\\-é]{0,80}") {
            let chars: Vec<char> = text.chars().collect();
            for t in tokenize_words(&text) {
                let s: String = chars[t.start..t.end].iter().collect();
                prop_assert_eq!(&s, &t.text);
                prop_assert!(!t.text.chars().any(is_delimiter));
            }
        }
    }
}
