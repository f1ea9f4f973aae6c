//! Derivational-suffix selectional restrictions over generated nonce bases,
//! plus a corpus estimate of suffixed versus standalone base frequency.

mod freq;
mod inventory;
mod nonce;
mod score;

pub use freq::{suffix_frequency, SuffixFrequency, TokenCounts, DEFAULT_RECOVERY};
pub use inventory::{default_inventory, read_inventory, Category, SuffixClass, SuffixSpec};
pub use nonce::{
    generate_nonce_bases, measure_real_word_stats, observe_words, read_bases_tsv, read_contexts_tsv, write_bases_tsv,
    write_contexts_tsv, BaseLine, FilterStage, FilterThresholds, MeanStd, NonceBase, NonceConfig, NonceFilter,
    NonceGeneration, RejectionLog, WordObservation, MIN_REFERENCE_WORDS,
};
pub use score::{
    base_state, run_selectional_experiment, suffix_probability, verdict, write_report_csv, CategoryCounts,
    CategoryMeans, ScoredBase, SuffixProbability, SuffixReport, SuffixRow,
};
