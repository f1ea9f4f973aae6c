use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar stored at index 0 of every vocabulary.
pub const UNK_CHAR: char = '\u{FFFD}';
pub const UNK: u32 = 0;

/// Bijective character/index map. Index 0 is the UNK symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<char>", into = "Vec<char>")]
pub struct Vocab {
    chars: Vec<char>,
    index: HashMap<char, u32>,
}

impl Vocab {
    /// Vocabulary of every distinct character in `text`, in first-occurrence order after UNK.
    pub fn build(text: &str) -> Result<Self> {
        if text.is_empty() {
            return Err(Error::invalid("cannot build a vocabulary from empty text"));
        }
        let mut chars = vec![UNK_CHAR];
        let mut index = HashMap::new();
        index.insert(UNK_CHAR, UNK);
        for c in text.chars() {
            index.entry(c).or_insert_with(|| {
                chars.push(c);
                (chars.len() - 1) as u32
            });
        }
        Ok(Vocab { chars, index })
    }

    /// Rebuilds a vocabulary from its stored order; `chars[0]` must be [`UNK_CHAR`].
    pub fn from_chars(chars: Vec<char>) -> Result<Self> {
        if chars.first() != Some(&UNK_CHAR) {
            return Err(Error::Format("vocabulary must start with the UNK symbol".into()));
        }
        let mut index = HashMap::with_capacity(chars.len());
        for (i, &c) in chars.iter().enumerate() {
            if index.insert(c, i as u32).is_some() {
                return Err(Error::Format(format!("duplicate vocabulary entry {c:?}")));
            }
        }
        Ok(Vocab { chars, index })
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn get(&self, c: char) -> Option<u32> {
        self.index.get(&c).copied()
    }

    pub fn contains(&self, c: char) -> bool {
        self.index.contains_key(&c)
    }

    /// Index of `c`, or UNK for characters never seen in training.
    pub fn encode_char(&self, c: char) -> u32 {
        self.get(c).unwrap_or(UNK)
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        text.chars().map(|c| self.encode_char(c)).collect()
    }

    /// Strict encoding: fails on the first out-of-vocabulary character.
    pub fn encode_strict(&self, text: &str) -> Result<Vec<u32>> {
        text.chars()
            .map(|c| self.get(c).ok_or_else(|| Error::invalid(format!("character {c:?} not in vocabulary"))))
            .collect()
    }

    pub fn decode_char(&self, i: u32) -> char {
        self.chars.get(i as usize).copied().unwrap_or(UNK_CHAR)
    }

    pub fn decode(&self, ids: &[u32]) -> String {
        ids.iter().map(|&i| self.decode_char(i)).collect()
    }
}

impl TryFrom<Vec<char>> for Vocab {
    type Error = Error;

    fn try_from(chars: Vec<char>) -> Result<Self> {
        Vocab::from_chars(chars)
    }
}

impl From<Vocab> for Vec<char> {
    fn from(v: Vocab) -> Self {
        v.chars
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_occurrence_order() {
        let v = Vocab::build("aba").unwrap();
        assert_eq!(v.chars(), &[UNK_CHAR, 'a', 'b']);
        assert_eq!(v.get('a'), Some(1));
        assert_eq!(v.get('b'), Some(2));
    }

    #[test]
    fn space_and_case() {
        assert!(Vocab::build("a b").unwrap().contains(' '));
        let v = Vocab::build("Aa").unwrap();
        assert_ne!(v.get('A'), v.get('a'));
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn empty_text_rejected() {
        assert!(Vocab::build("").is_err());
    }

    #[test]
    fn unseen_maps_to_unk() {
        let v = Vocab::build("abc").unwrap();
        assert_eq!(v.encode("az"), vec![1, UNK]);
        assert!(v.encode_strict("az").is_err());
    }

    #[test]
    fn stored_order_round_trip() {
        let v = Vocab::build("hello world").unwrap();
        assert_eq!(Vocab::from_chars(v.chars().to_vec()).unwrap(), v);
        assert!(Vocab::from_chars(vec!['a', 'b']).is_err());
        assert!(Vocab::from_chars(vec![UNK_CHAR, 'a', 'a']).is_err());
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(text in "\\PC{1,60}") {
            let v = Vocab::build(&text).unwrap();
            prop_assert_eq!(v.decode(&v.encode(&text)), text);
        }
    }
}
