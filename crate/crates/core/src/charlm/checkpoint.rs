use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{CharLm, LmParams};
use crate::corpus::Vocab;
use crate::error::{Error, Result};
use crate::numerics::AdamState;

pub const MAGIC: &[u8; 4] = b"CLM1";
pub const LM_VERSION: u32 = 1;
pub const PROBE_VERSION: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub epoch: u32,
    pub seed: u64,
    pub dev_bpc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: CharLm<f32>,
    /// Optimizer moments, one per parameter array in storage order.
    pub adam: Option<Vec<AdamState<f32>>>,
    pub meta: CheckpointMeta,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let p = &self.model.params;
        w.write_all(MAGIC)?;
        put_u32(w, LM_VERSION)?;
        put_vocab(w, &self.model.vocab)?;
        put_u32(w, p.embed_dim() as u32)?;
        put_u32(w, p.hidden() as u32)?;
        for m in p.params() {
            put_f32s(w, m.as_slice())?;
        }
        match &self.adam {
            Some(states) => {
                w.write_all(&[1])?;
                for s in states {
                    w.write_all(&s.t.to_le_bytes())?;
                    put_f32s(w, s.m.as_slice())?;
                    put_f32s(w, s.v.as_slice())?;
                }
            }
            None => w.write_all(&[0])?,
        }
        put_json(w, &self.meta)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        expect_header(r, LM_VERSION)?;
        let vocab = get_vocab(r)?;
        let d = get_u32(r)? as usize;
        let n = get_u32(r)? as usize;
        if d == 0 || n == 0 {
            return Err(Error::Format("checkpoint has zero-sized dimensions".into()));
        }
        let mut params = LmParams::<f32>::zeros(vocab.len(), d, n);
        for m in params.params_mut() {
            get_f32s(r, m.as_mut_slice())?;
        }
        let adam = match get_u8(r)? {
            0 => None,
            1 => {
                let mut states = Vec::with_capacity(6);
                for m in params.params() {
                    let mut s = AdamState::for_param(m);
                    let mut t = [0u8; 8];
                    r.read_exact(&mut t)?;
                    s.t = u64::from_le_bytes(t);
                    get_f32s(r, s.m.as_mut_slice())?;
                    get_f32s(r, s.v.as_mut_slice())?;
                    states.push(s);
                }
                Some(states)
            }
            f => return Err(Error::Format(format!("invalid optimizer-state flag {f}"))),
        };
        let meta = get_json(r)?;
        Ok(Checkpoint { model: CharLm::new(vocab, params)?, adam, meta })
    }
}

pub(crate) fn expect_header<R: Read>(r: &mut R, version: u32) -> Result<()> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let found = get_u32(r)?;
    if found != version {
        return Err(Error::Format(format!("unsupported checkpoint version {found}, expected {version}")));
    }
    Ok(())
}

pub(crate) fn put_u32<W: Write>(w: &mut W, x: u32) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

pub(crate) fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn get_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

pub(crate) fn put_f32s<W: Write>(w: &mut W, xs: &[f32]) -> Result<()> {
    let mut buf = Vec::with_capacity(xs.len() * 4);
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub(crate) fn get_f32s<R: Read>(r: &mut R, out: &mut [f32]) -> Result<()> {
    let mut buf = vec![0u8; out.len() * 4];
    r.read_exact(&mut buf)?;
    for (x, b) in out.iter_mut().zip(buf.chunks_exact(4)) {
        *x = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
    }
    Ok(())
}

pub(crate) fn put_vocab<W: Write>(w: &mut W, vocab: &Vocab) -> Result<()> {
    put_u32(w, vocab.len() as u32)?;
    for &c in vocab.chars() {
        put_u32(w, c as u32)?;
    }
    Ok(())
}

pub(crate) fn get_vocab<R: Read>(r: &mut R) -> Result<Vocab> {
    let len = get_u32(r)? as usize;
    if len == 0 || len > 0x11_0000 {
        return Err(Error::Format(format!("implausible vocabulary size {len}")));
    }
    let mut chars = Vec::with_capacity(len);
    for _ in 0..len {
        let v = get_u32(r)?;
        chars.push(char::from_u32(v).ok_or_else(|| Error::Format(format!("invalid scalar value {v:#x}")))?);
    }
    Vocab::from_chars(chars)
}

pub(crate) fn put_string<W: Write>(w: &mut W, s: &str) -> Result<()> {
    put_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub(crate) fn get_string<R: Read>(r: &mut R) -> Result<String> {
    let len = get_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Format(format!("invalid UTF-8: {e}")))
}

pub(crate) fn put_json<W: Write, S: Serialize>(w: &mut W, value: &S) -> Result<()> {
    put_string(w, &serde_json::to_string(value)?)
}

pub(crate) fn get_json<R: Read, S: for<'de> Deserialize<'de>>(r: &mut R) -> Result<S> {
    Ok(serde_json::from_str(&get_string(r)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let vocab = Vocab::build("ab c").unwrap();
        let model = CharLm::init(vocab, 3, 4, 9);
        let adam = model.params.params().iter().map(|p| AdamState::for_param(p)).collect();
        Checkpoint { model, adam: Some(adam), meta: CheckpointMeta { epoch: 2, seed: 9, dev_bpc: 3.25 } }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ck = sample();
        let mut bytes = Vec::new();
        ck.write_to(&mut bytes).unwrap();
        let back = Checkpoint::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, ck);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn header_layout() {
        let mut bytes = Vec::new();
        sample().write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"CLM1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 0xFFFD);
    }

    #[test]
    fn rejects_bad_magic_version_and_truncation() {
        let mut bytes = Vec::new();
        sample().write_to(&mut bytes).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Checkpoint::read_from(&mut bad.as_slice()), Err(Error::Format(_))));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(Checkpoint::read_from(&mut v2.as_slice()), Err(Error::Format(_))));
        let cut = &bytes[..bytes.len() / 2];
        assert!(matches!(Checkpoint::read_from(&mut &cut[..]), Err(Error::Io(_))));
    }
}
