use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A gold-standard segmentation of one word form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegRecord {
    pub surface: String,
    pub morphs: Vec<String>,
    /// Internal boundaries as character counts from the word start, ascending.
    pub boundaries: Vec<usize>,
}

impl SegRecord {
    pub fn new(surface: &str, morphs: Vec<String>) -> Result<Self> {
        let joined: String = morphs.concat();
        if joined != surface {
            return Err(Error::invalid(format!("morphs {:?} do not concatenate to {surface:?}", morphs.join("+"))));
        }
        if morphs.iter().any(|m| m.is_empty()) {
            return Err(Error::invalid("empty morph"));
        }
        let mut boundaries = Vec::with_capacity(morphs.len().saturating_sub(1));
        let mut pos = 0;
        for m in &morphs[..morphs.len() - 1] {
            pos += m.chars().count();
            boundaries.push(pos);
        }
        Ok(SegRecord { surface: surface.to_string(), morphs, boundaries })
    }

    pub fn len(&self) -> usize {
        self.surface.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.surface.is_empty()
    }
}

/// Reads `surface<TAB>m1+m2+…` lines.
///
/// Also accepts the common upstream variants: alternative analyses separated
/// by `,` (the first is kept), space-separated morphs, and `morph:LABEL` tags.
pub fn parse_segmentations(path: &Path) -> Result<Vec<SegRecord>> {
    let text = std::fs::read_to_string(path)?;
    parse_segmentations_str(&text, path)
}

pub fn parse_segmentations_str(text: &str, origin: &Path) -> Result<Vec<SegRecord>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (surface, analysis) =
            line.split_once('\t').ok_or_else(|| Error::parse(origin, lineno, "expected surface<TAB>segmentation"))?;
        let surface = surface.trim();
        let first = analysis.split(',').next().unwrap_or("").trim();
        let morphs: Vec<String> = first
            .split_whitespace()
            .map(|tok| tok.split(':').next().unwrap_or(tok))
            .flat_map(|tok| tok.split('+'))
            .filter(|m| !m.is_empty())
            .map(str::to_string)
            .collect();
        if surface.is_empty() || morphs.is_empty() {
            return Err(Error::parse(origin, lineno, "empty surface or segmentation"));
        }
        let rec = SegRecord::new(surface, morphs).map_err(|e| match e {
            Error::InvalidArgument(msg) => Error::parse(origin, lineno, msg),
            other => other,
        })?;
        out.push(rec);
    }
    Ok(out)
}
