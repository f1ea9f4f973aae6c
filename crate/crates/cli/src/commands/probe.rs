use log::{info, warn};
use morphoscope::charlm::CharLm;
use morphoscope::corpus::{
    parse_conllu, parse_segmentations, read_text, ContextIndex, SegRecord, TaggedSentence, WordList,
};
use morphoscope::probes::{
    build_seg_instances, evaluate_instances, evaluate_tagging, seg_examples, seg_report, split_by_type,
    split_sentences, tag_evolution, tag_examples, tag_labels, train_probe, write_evolution_csv, Prefixes,
    ProbeCheckpoint, ProbeDecoder, ProbeEpochLog, ProbeExample, ProbeMeta, ProbeTrainConfig, SegInstance, SegReport,
    TagInstance, DEFAULT_PREFIXES, SEG_LABELS,
};
use serde::Serialize;

use crate::failure::Failure;
use crate::run::Run;

pub const SEG_TASK: &str = "seg";
pub const POS_TASK: &str = "pos";

fn probe_config(run: &Run) -> Result<ProbeTrainConfig, Failure> {
    Ok(ProbeTrainConfig {
        hidden: run.cfg.get("probe_hidden")?,
        epochs: run.cfg.get("probe_epochs")?,
        lr: run.cfg.get("probe_lr")?,
        batch: run.cfg.get("probe_batch")?,
        seed: run.seed,
    })
}

#[derive(Serialize)]
struct ProbeTrainLog<'a> {
    task: &'static str,
    config: &'a ProbeTrainConfig,
    sequences: usize,
    epochs: &'a [ProbeEpochLog],
}

fn fit(
    run: &mut Run,
    task: &'static str,
    labels: Vec<String>,
    model: &CharLm<f32>,
    data: &[ProbeExample<f32>],
) -> Result<(), Failure> {
    let config = probe_config(run)?;
    let mut decoder = ProbeDecoder::init(labels, model.hidden(), config.hidden, config.seed)?;
    info!("training {task} probe on {} sequences", data.len());
    let log = train_probe(&mut decoder, data, &config)?;
    for e in &log {
        info!("epoch {}: loss {:.4}, {} batches clipped", e.epoch, e.loss, e.clipped);
    }
    let ckpt = ProbeCheckpoint {
        decoder,
        meta: ProbeMeta { task: task.to_string(), epochs: config.epochs as u32, seed: config.seed },
    };
    ckpt.save(&run.output(&format!("{task}.ckpt")))?;
    run.write_json(
        &format!("{task}_train_log.json"),
        &ProbeTrainLog { task, config: &config, sequences: data.len(), epochs: &log },
    )
}

/// Whether evaluation uses the held-out split or everything.
fn eval_on_all(run: &Run) -> Result<bool, Failure> {
    match run.cfg.get::<String>("eval_split")?.as_str() {
        "test" => Ok(false),
        "all" => Ok(true),
        other => Err(Failure::Usage(format!("eval_split must be `test` or `all`, got {other:?}"))),
    }
}

fn seg_split(run: &mut Run) -> Result<(Vec<SegRecord>, Vec<SegRecord>), Failure> {
    let records = parse_segmentations(&run.input("segmentations")?)?;
    Ok(split_by_type(&records, run.cfg.get("probe_train_fraction")?, run.seed)?)
}

fn seg_index(run: &mut Run) -> Result<ContextIndex, Failure> {
    Ok(match run.opt_input("corpus")? {
        Some(p) => ContextIndex::new(&read_text(&p)?),
        None => ContextIndex::new(""),
    })
}

fn seg_instances(run: &mut Run, records: &[SegRecord], index: &ContextIndex) -> Result<Vec<SegInstance>, Failure> {
    Ok(build_seg_instances(records, index, run.cfg.get("max_occurrences")?, run.cfg.get("context_window")?))
}

pub fn seg_train(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    let (train, _) = seg_split(run)?;
    let index = seg_index(run)?;
    let instances = seg_instances(run, &train, &index)?;
    let data = seg_examples(&model, &instances, run.exec)?;
    fit(run, SEG_TASK, SEG_LABELS.iter().map(|s| s.to_string()).collect(), &model, &data)
}

#[derive(Serialize)]
struct SegEvaluation {
    split: String,
    types: usize,
    instances: usize,
    settings: SegReport,
}

pub fn seg_eval(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    let probe = run.load_probe("probe", SEG_TASK)?;
    let all = eval_on_all(run)?;
    let (train, test) = seg_split(run)?;
    let records: Vec<SegRecord> = if all { train.iter().chain(&test).cloned().collect() } else { test };
    let index = seg_index(run)?;
    let instances = seg_instances(run, &records, &index)?;
    let items = evaluate_instances(&probe.decoder, &model, &instances, run.exec)?;

    let mut words = WordList::new();
    for t in index.tokens() {
        words.insert(t);
    }
    for r in train.iter().chain(&records) {
        words.insert(&r.surface);
    }
    for p in run.inputs("words")? {
        words.extend(&morphoscope::corpus::load_wordlist(&p)?);
    }
    let listed = run.cfg.list("prefixes");
    let prefixes = if listed.is_empty() { Prefixes::new(DEFAULT_PREFIXES) } else { Prefixes::new(listed) };
    let settings = seg_report(&items, &words, &prefixes)?;
    if let (Some(eow), Some(we), Some(nwe)) = (&settings.end_of_word, &settings.word_edge, &settings.not_word_edge) {
        info!("F1: EOW {:.4}, WE {:.4}, NOT_WE {:.4}", eow.f1, we.f1, nwe.f1);
    }
    run.write_json(
        "seg_report.json",
        &SegEvaluation {
            split: if all { "all" } else { "test" }.into(),
            types: records.len(),
            instances: instances.len(),
            settings,
        },
    )
}

fn pos_split(run: &mut Run) -> Result<(Vec<TaggedSentence>, Vec<TaggedSentence>), Failure> {
    let sentences = parse_conllu(&run.input("treebank")?)?;
    Ok(split_sentences(&sentences, run.cfg.get("probe_train_fraction")?, run.seed)?)
}

fn instances(sentences: &[TaggedSentence]) -> Vec<TagInstance> {
    let mut out = Vec::with_capacity(sentences.len());
    let mut skipped = 0;
    for s in sentences {
        match TagInstance::new(s) {
            Ok(i) => out.push(i),
            Err(_) => skipped += 1,
        }
    }
    if skipped > 0 {
        warn!("skipped {skipped} sentences with whitespace inside a token");
    }
    out
}

pub fn pos_train(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    let (train, _) = pos_split(run)?;
    let data = tag_examples(&model, &instances(&train), run.exec)?;
    fit(run, POS_TASK, tag_labels(), &model, &data)
}

pub fn pos_eval(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    let probe = run.load_probe("probe", POS_TASK)?;
    let (train, test) = pos_split(run)?;
    let test = if eval_on_all(run)? { train.iter().chain(&test).cloned().collect() } else { test };
    let report = evaluate_tagging(&probe.decoder, &model, &instances(&test), &instances(&train), run.exec)?;
    info!(
        "{} words: word accuracy {:.4}, character accuracy {:.4}, majority baseline {:.4}",
        report.words, report.word_accuracy, report.char_accuracy, report.majority_baseline
    );
    run.write_json("pos_report.json", &report)
}

pub fn pos_evolve(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    let probe = run.load_probe("probe", POS_TASK)?;
    let text: String = run.cfg.get("text")?;
    let probs = tag_evolution(&probe.decoder, &model, &text)?;
    let out = std::fs::File::create(run.output("evolution.csv"))?;
    write_evolution_csv(out, &text, &probe.decoder.labels, &probs)?;
    Ok(())
}
