use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Training and development streams cut from one corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSplit {
    pub train: Vec<u32>,
    pub dev: Vec<u32>,
    pub train_fraction: f64,
}

impl StreamSplit {
    /// Holds out one contiguous window of `1 - train_fraction` of the stream
    /// at a seeded random offset; the remainder (in stream order) is training data.
    pub fn new(stream: &[u32], train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::invalid("train fraction must lie in (0, 1)"));
        }
        let n = stream.len();
        let dev_len = ((1.0 - train_fraction) * n as f64).round() as usize;
        if dev_len < 2 || n - dev_len < 2 {
            return Err(Error::invalid(format!("stream of {n} characters too short to split")));
        }
        let start = Rng::new(seed).below(n - dev_len + 1);
        let dev = stream[start..start + dev_len].to_vec();
        let mut train = Vec::with_capacity(n - dev_len);
        train.extend_from_slice(&stream[..start]);
        train.extend_from_slice(&stream[start + dev_len..]);
        Ok(StreamSplit { train, dev, train_fraction })
    }
}

/// One truncated-BPTT block: `batch` lanes of `bptt` steps, lane-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub inputs: Vec<u32>,
    pub targets: Vec<u32>,
    /// False for the first block of a pass (state starts at zero).
    pub carry: bool,
    pub batch: usize,
    pub bptt: usize,
}

impl Block {
    pub fn input(&self, lane: usize, step: usize) -> u32 {
        self.inputs[lane * self.bptt + step]
    }

    pub fn target(&self, lane: usize, step: usize) -> u32 {
        self.targets[lane * self.bptt + step]
    }
}

/// Splits a stream into `batch` contiguous lanes and walks them `bptt` steps at a time.
#[derive(Debug, Clone)]
pub struct StreamBatches<'a> {
    stream: &'a [u32],
    batch: usize,
    bptt: usize,
    lane_len: usize,
    blocks: usize,
    next: usize,
}

pub fn stream_batches(stream: &[u32], batch: usize, bptt: usize) -> Result<StreamBatches<'_>> {
    if batch == 0 || bptt == 0 {
        return Err(Error::invalid("batch and bptt must be at least 1"));
    }
    if stream.len() < batch * (bptt + 1) {
        return Err(Error::invalid(format!(
            "stream of {} characters is shorter than batch x (bptt + 1) = {}",
            stream.len(),
            batch * (bptt + 1)
        )));
    }
    let lane_len = stream.len() / batch;
    Ok(StreamBatches { stream, batch, bptt, lane_len, blocks: (lane_len - 1) / bptt, next: 0 })
}

impl StreamBatches<'_> {
    pub fn lane_offset(&self, lane: usize) -> usize {
        lane * self.lane_len
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks
    }
}

impl Iterator for StreamBatches<'_> {
    type Item = Block;

    fn next(&mut self) -> Option<Block> {
        if self.next >= self.blocks {
            return None;
        }
        let k = self.next;
        self.next += 1;
        let mut inputs = Vec::with_capacity(self.batch * self.bptt);
        let mut targets = Vec::with_capacity(self.batch * self.bptt);
        for lane in 0..self.batch {
            let base = lane * self.lane_len + k * self.bptt;
            inputs.extend_from_slice(&self.stream[base..base + self.bptt]);
            targets.extend_from_slice(&self.stream[base + 1..base + self.bptt + 1]);
        }
        Some(Block { inputs, targets, carry: k > 0, batch: self.batch, bptt: self.bptt })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.blocks - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for StreamBatches<'_> {}
