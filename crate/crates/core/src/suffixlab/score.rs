use std::io::Write;

use serde::{Deserialize, Serialize};

use super::inventory::{Category, SuffixSpec};
use crate::charlm::{CharLm, LstmState};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numerics::Scalar;
use crate::report::{csv_writer, fmt_num};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffixProbability {
    pub probability: f64,
    /// `p(s_i | history, s_<i)` for each suffix character.
    pub factors: Vec<f64>,
}

/// Joint probability of `suffix` continuing from `state` (the state after the base).
pub fn suffix_probability<T: Scalar>(
    model: &CharLm<T>,
    state: &LstmState<T>,
    suffix: &str,
) -> Result<SuffixProbability> {
    let ids = suffix
        .chars()
        .map(|c| {
            model.vocab.get(c).ok_or_else(|| Error::invalid(format!("suffix character {c:?} is not in the vocabulary")))
        })
        .collect::<Result<Vec<u32>>>()?;
    let inf = model.inference();
    let mut st = state.clone();
    let mut factors = Vec::with_capacity(ids.len());
    for (i, &c) in ids.iter().enumerate() {
        factors.push(inf.distribution(&st.h)[c as usize].as_f64());
        if i + 1 < ids.len() {
            inf.step(&mut st, c)?;
        }
    }
    Ok(SuffixProbability { probability: factors.iter().product(), factors })
}

/// State after a space primer, the optional context and one space, then `base`.
pub fn base_state<T: Scalar>(model: &CharLm<T>, context: &str, base: &str) -> Result<LstmState<T>> {
    let text = if context.is_empty() { format!(" {base}") } else { format!(" {context} {base}") };
    let inf = model.inference();
    let mut st = inf.zero_state();
    inf.consume(&mut st, &model.vocab.encode(&text))?;
    Ok(st)
}

/// A base ready for scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredBase {
    pub surface: String,
    pub category: Category,
    pub state: LstmState<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct CategoryMeans {
    pub NOUN: f64,
    pub VERB: f64,
    pub ADJ: f64,
}

impl CategoryMeans {
    pub fn get(&self, c: Category) -> f64 {
        match c {
            Category::NOUN => self.NOUN,
            Category::VERB => self.VERB,
            Category::ADJ => self.ADJ,
        }
    }

    pub fn from_fn(mut f: impl FnMut(Category) -> f64) -> Self {
        CategoryMeans { NOUN: f(Category::NOUN), VERB: f(Category::VERB), ADJ: f(Category::ADJ) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct CategoryCounts {
    pub NOUN: usize,
    pub VERB: usize,
    pub ADJ: usize,
}

/// Highest-mean category, first in `NOUN < VERB < ADJ` order on ties, and whether a tie occurred.
pub fn verdict(means: &CategoryMeans) -> (Category, bool) {
    let mut best = Category::NOUN;
    for c in [Category::VERB, Category::ADJ] {
        if means.get(c) > means.get(best) {
            best = c;
        }
    }
    let top = means.get(best);
    let tie = Category::ALL.iter().filter(|&&c| means.get(c) == top).count() > 1;
    (best, tie)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffixRow {
    pub surface: String,
    pub expected: Category,
    pub means: CategoryMeans,
    pub argmax: Category,
    #[serde(rename = "match")]
    pub matched: bool,
    pub tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffixReport {
    pub suffixes: Vec<SuffixRow>,
    pub match_count: usize,
    pub bases_per_category: CategoryCounts,
}

/// Scores every suffix after every base and averages per base category.
pub fn run_selectional_experiment(
    model: &CharLm<f32>,
    bases: &[ScoredBase],
    suffixes: &[SuffixSpec],
    exec: Exec,
) -> Result<SuffixReport> {
    let count = |c| bases.iter().filter(|b| b.category == c).count();
    let counts = CategoryCounts { NOUN: count(Category::NOUN), VERB: count(Category::VERB), ADJ: count(Category::ADJ) };
    if let Some(c) = Category::ALL.into_iter().find(|&c| count(c) == 0) {
        return Err(Error::UndefinedMetric(format!("no {c} bases to average over")));
    }
    // probs[b][s], computed in parallel over bases.
    let probs = exec.try_map(bases, |b| {
        suffixes
            .iter()
            .map(|s| suffix_probability(model, &b.state, &s.surface).map(|p| p.probability))
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut rows = Vec::with_capacity(suffixes.len());
    for (si, s) in suffixes.iter().enumerate() {
        let means = CategoryMeans::from_fn(|c| {
            let (mut sum, mut n) = (0.0, 0usize);
            for (b, p) in bases.iter().zip(&probs) {
                if b.category == c {
                    sum += p[si];
                    n += 1;
                }
            }
            sum / n as f64
        });
        let (argmax, tie) = verdict(&means);
        let expected = s.class.expected();
        rows.push(SuffixRow { surface: s.surface.clone(), expected, means, argmax, matched: argmax == expected, tie });
    }
    Ok(SuffixReport {
        match_count: rows.iter().filter(|r| r.matched).count(),
        suffixes: rows,
        bases_per_category: counts,
    })
}

/// One row per (suffix, category, mean).
pub fn write_report_csv<W: Write>(out: W, report: &SuffixReport) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["suffix", "category", "mean"])?;
    for r in &report.suffixes {
        for c in Category::ALL {
            w.write_record([r.surface.as_str(), c.as_str(), &fmt_num(r.means.get(c))])?;
        }
    }
    w.flush()?;
    Ok(())
}
