//! Corpus ingestion: vocabulary, stream batching, gold segmentations,
//! CoNLL-U treebanks, word lists and word-in-context extraction.

mod conllu;
mod contexts;
mod segfile;
mod stream;
mod tokenize;
mod vocab;
mod wordlist;

pub use conllu::{parse_conllu, parse_conllu_str, TaggedSentence, TaggedToken, Upos};
pub use contexts::{extract_contexts, ContextIndex, ContextedWord, DEFAULT_MAX_OCCURRENCES, DEFAULT_WINDOW};
pub use segfile::{parse_segmentations, parse_segmentations_str, SegRecord};
pub use stream::{stream_batches, Block, StreamBatches, StreamSplit};
pub use tokenize::{is_delimiter, tokenize_words, word_end_flags, WordToken};
pub use vocab::{Vocab, UNK, UNK_CHAR};
pub use wordlist::{load_wordlist, Lookup, WordList};

pub fn read_text(path: &std::path::Path) -> crate::Result<String> {
    Ok(std::fs::read_to_string(path)?)
}
