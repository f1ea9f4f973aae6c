//! Character-level LSTM language model: parameters, training, checkpoints, sampling.

mod checkpoint;
mod lstm;
mod model;
mod sample;
mod train;

pub(crate) use checkpoint::{
    expect_header, get_f32s, get_json, get_string, get_u32, get_u8, put_f32s, put_json, put_string, put_u32,
};
pub use checkpoint::{Checkpoint, CheckpointMeta, LM_VERSION, MAGIC, PROBE_VERSION};
pub use lstm::{softmax_xent_backward, Linear, LstmLayer, LstmState, LstmTrace};
pub use model::{encode_batch, CharLm, Inference, LmParams, FORGET_BIAS, INIT_SCALE};
pub use sample::{nonce_rate, sample, sample_complete_words, NonceRate, SampledWord, WordSampler};
pub use train::{
    bits_per_char, block_loss, nats_per_char, train, train_with, unigram_bits_per_char, EpochLog, TrainConfig,
    TrainOutcome, CLIP_NORM,
};
