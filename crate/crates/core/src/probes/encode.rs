use crate::charlm::{encode_batch, CharLm};
use crate::corpus::ContextedWord;
use crate::error::Result;
use crate::exec::Exec;
use crate::numerics::{Matrix, Scalar};

/// Sequences per batched encoder call. Fixed so results never depend on the thread count.
pub const ENCODE_CHUNK: usize = 64;

/// Encoder states over the target word after consuming its context and one space.
pub fn encode_contexted<T: Scalar>(model: &CharLm<T>, word: &ContextedWord) -> Result<Matrix<T>> {
    let full = model.vocab.encode(&word.full_text());
    let states = model.inference().hidden_states(&full)?;
    let len = word.word.chars().count();
    let mut out = Matrix::zeros(len, model.hidden());
    for (t, h) in states[full.len() - len..].iter().enumerate() {
        out.row_mut(t).copy_from_slice(h);
    }
    Ok(out)
}

/// [`encode_contexted`] for many words, batched and optionally parallel.
pub fn encode_contexted_many<T: Scalar>(
    model: &CharLm<T>,
    words: &[ContextedWord],
    exec: Exec,
) -> Result<Vec<Matrix<T>>> {
    let seqs: Vec<(Vec<u32>, usize)> =
        words.iter().map(|w| (model.vocab.encode(&w.full_text()), w.word.chars().count())).collect();
    encode_suffixes(model, &seqs, exec)
}

/// States over `text` after a single-space primer.
pub fn encode_primed_many<T: Scalar>(model: &CharLm<T>, texts: &[String], exec: Exec) -> Result<Vec<Matrix<T>>> {
    let seqs: Vec<(Vec<u32>, usize)> =
        texts.iter().map(|t| (model.vocab.encode(&format!(" {t}")), t.chars().count())).collect();
    encode_suffixes(model, &seqs, exec)
}

/// Encodes each sequence from zero state and keeps the states of its last `keep` positions.
fn encode_suffixes<T: Scalar>(model: &CharLm<T>, seqs: &[(Vec<u32>, usize)], exec: Exec) -> Result<Vec<Matrix<T>>> {
    let chunks: Vec<&[(Vec<u32>, usize)]> = seqs.chunks(ENCODE_CHUNK).collect();
    let n = model.hidden();
    let encoded = exec.try_map(&chunks, |chunk| {
        let ids: Vec<Vec<u32>> = chunk.iter().map(|(s, _)| s.clone()).collect();
        let full = encode_batch(model, &ids)?;
        Ok(full
            .into_iter()
            .zip(chunk.iter())
            .map(|(m, (s, keep))| {
                let start = s.len() - keep;
                let mut out = Matrix::zeros(*keep, n);
                for t in 0..*keep {
                    out.row_mut(t).copy_from_slice(m.row(start + t));
                }
                out
            })
            .collect::<Vec<_>>())
    })?;
    Ok(encoded.into_iter().flatten().collect())
}
