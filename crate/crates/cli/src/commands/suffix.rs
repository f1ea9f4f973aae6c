use std::collections::HashMap;
use std::path::PathBuf;

use log::{info, warn};
use morphoscope::charlm::CharLm;
use morphoscope::corpus::{read_text, ContextIndex, WordList};
use morphoscope::probes::ProbeDecoder;
use morphoscope::suffixlab::{
    base_state, generate_nonce_bases, measure_real_word_stats, read_bases_tsv, read_contexts_tsv,
    run_selectional_experiment, write_bases_tsv, write_contexts_tsv, write_report_csv, Category, CategoryCounts,
    FilterThresholds, NonceConfig, NonceFilter, RejectionLog, ScoredBase,
};
use serde::Serialize;

use super::lm::{inventory, known_words};
use super::probe::POS_TASK;
use crate::failure::Failure;
use crate::run::Run;

fn is_plain_word(w: &str) -> bool {
    !w.is_empty() && w.chars().all(|c| c.is_alphabetic() && c.is_lowercase())
}

fn measure(run: &mut Run, model: &CharLm<f32>, tagger: &ProbeDecoder<f32>) -> Result<FilterThresholds, Failure> {
    let text = read_text(&run.input("corpus")?)?;
    let index = ContextIndex::new(&text);
    let sample = index.sample_occurrences(
        run.cfg.get("reference_size")?,
        run.cfg.get("context_window")?,
        run.seed,
        is_plain_word,
    );
    info!("measuring reference statistics over {} real-word occurrences", sample.len());
    Ok(measure_real_word_stats(model, tagger, &sample, run.exec)?)
}

pub fn stats(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    let tagger = run.load_probe("tagger", POS_TASK)?.decoder;
    let thresholds = measure(run, &model, &tagger)?;
    run.write_json("thresholds.json", &thresholds)
}

#[derive(Serialize)]
struct GenerationSummary {
    complete: bool,
    per_category: CategoryCounts,
    thresholds: FilterThresholds,
    log: RejectionLog,
}

pub fn bases(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    let tagger = run.load_probe("tagger", POS_TASK)?.decoder;
    let thresholds = match run.opt_input("thresholds")? {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(&p)?).map_err(morphoscope::Error::from)?,
        None => measure(run, &model, &tagger)?,
    };
    let dictionaries = known_words(run)?;
    if dictionaries.is_empty() {
        return Err(Failure::Usage("suffix bases needs `corpus` or `words` as a dictionary".into()));
    }
    let suffixes = inventory(run)?;
    let filter =
        NonceFilter { thresholds, dictionaries: dictionaries.iter().collect::<Vec<&WordList>>(), suffixes: &suffixes };
    let config = NonceConfig {
        per_category: run.cfg.get("per_category")?,
        budget: run.cfg.get("budget")?,
        streams: run.cfg.get("streams")?,
        seed: run.seed,
        ..NonceConfig::default()
    };
    let generation = generate_nonce_bases(&model, &tagger, &filter, &config, run.exec)?;
    let count = |c| generation.bases.iter().filter(|b| b.tag == c).count();
    let per_category =
        CategoryCounts { NOUN: count(Category::NOUN), VERB: count(Category::VERB), ADJ: count(Category::ADJ) };
    if !generation.complete {
        warn!("budget exhausted before every category was filled: {per_category:?}");
    }
    info!("accepted {} of {} sampled words", generation.log.accepted, generation.log.sampled);
    write_bases_tsv(std::fs::File::create(run.output("bases.tsv"))?, &generation.bases)?;
    write_contexts_tsv(std::fs::File::create(run.output("bases.contexts.tsv"))?, &generation.bases)?;
    run.write_json(
        "bases_log.json",
        &GenerationSummary { complete: generation.complete, per_category, thresholds, log: generation.log },
    )
}

/// `x.tsv` → `x.contexts.tsv`.
fn default_contexts_path(bases: &std::path::Path) -> PathBuf {
    let stem = bases.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    bases.with_file_name(format!("{stem}.contexts.tsv"))
}

pub fn run_experiment(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    if run.cfg.opt_path("tagger").is_some() {
        run.load_probe("tagger", POS_TASK)?;
    }
    let bases_path = run.input("bases")?;
    if run.cfg.opt_path("contexts").is_none() {
        let p = default_contexts_path(&bases_path);
        run.cfg.set("contexts", &p.display().to_string())?;
    }
    let contexts: HashMap<String, String> = read_contexts_tsv(&run.input("contexts")?)?.into_iter().collect();
    let lines = read_bases_tsv(&bases_path)?;
    let mut scored = Vec::with_capacity(lines.len());
    for b in lines {
        let context = contexts
            .get(&b.surface)
            .ok_or_else(|| morphoscope::Error::Format(format!("no context recorded for base {:?}", b.surface)))?;
        scored.push(ScoredBase {
            state: base_state(&model, context, &b.surface)?,
            surface: b.surface,
            category: b.tag,
        });
    }
    let suffixes = inventory(run)?;
    let report = run_selectional_experiment(&model, &scored, &suffixes, run.exec)?;
    info!("{} of {} suffixes prefer their expected base category", report.match_count, report.suffixes.len());
    run.write_json("suffix_report.json", &report)?;
    write_report_csv(std::fs::File::create(run.output("suffix_report.csv"))?, &report)?;
    Ok(())
}
