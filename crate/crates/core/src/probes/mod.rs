//! Frozen-encoder sequence-labelling probes: morphological segmentation and
//! part-of-speech tagging over language-model hidden states.

mod decoder;
mod encode;
mod seg;
mod tag;

pub use decoder::{
    train_probe, ProbeCheckpoint, ProbeDecoder, ProbeEpochLog, ProbeExample, ProbeMeta, ProbeTrainConfig,
};
pub use encode::{encode_contexted, encode_contexted_many, encode_primed_many, ENCODE_CHUNK};
pub use seg::{
    boundaries_from_labels, build_seg_instances, classify_boundary, evaluate_instances, f1_score, seg_examples,
    seg_metrics, seg_report, segment, split_by_type, BoundaryClass, BoundaryKind, Prefixes, Prf, SegInstance, SegItem,
    SegReport, Setting, BOUNDARY, DEFAULT_PREFIXES, NO_BOUNDARY, SEG_LABELS,
};
pub use tag::{
    evaluate_tagging, split_sentences, tag, tag_evolution, tag_examples, tag_labels, write_evolution_csv, TagInstance,
    TagPrediction, TagReport, TAG_BATCH,
};
