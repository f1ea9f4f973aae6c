use log::info;
use morphoscope::charlm::{
    bits_per_char, nonce_rate, sample, train_with, unigram_bits_per_char, CharLm, EpochLog, TrainConfig,
};
use morphoscope::corpus::{load_wordlist, read_text, tokenize_words, StreamSplit, Vocab, WordList};
use morphoscope::report;
use morphoscope::suffixlab::{
    default_inventory, read_inventory, suffix_frequency, SuffixClass, SuffixSpec, TokenCounts,
};
use serde::Serialize;

use crate::failure::Failure;
use crate::run::Run;

pub fn train_config(run: &Run) -> Result<TrainConfig, Failure> {
    let c = &run.cfg;
    let cfg = TrainConfig {
        embed_dim: c.get("embed_dim")?,
        hidden: c.get("hidden")?,
        lr: c.get("lr")?,
        batch: c.get("batch")?,
        dropout: c.get("dropout")?,
        bptt: c.get("bptt")?,
        epochs: c.get("epochs")?,
        seed: run.seed,
        patience: c.get("patience")?,
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

#[derive(Serialize)]
struct TrainLog<'a> {
    config: &'a TrainConfig,
    vocab_size: usize,
    train_chars: usize,
    dev_chars: usize,
    unigram_bpc: f64,
    epochs: &'a [EpochLog],
}

pub fn train(run: &mut Run) -> Result<(), Failure> {
    let cfg = train_config(run)?;
    let train_fraction: f64 = run.cfg.get("train_fraction")?;
    let text = read_text(&run.input("corpus")?)?;
    let vocab = Vocab::build(&text)?;
    let split = StreamSplit::new(&vocab.encode(&text), train_fraction, run.seed)?;
    let unigram_bpc = unigram_bits_per_char(&split.train, &split.dev, vocab.len());
    info!(
        "vocabulary {} symbols, {} training / {} dev characters, unigram {:.4} bpc",
        vocab.len(),
        split.train.len(),
        split.dev.len(),
        unigram_bpc
    );
    let log_path = run.output("train_log.json");
    let out = run.out.clone();
    let mut epochs: Vec<EpochLog> = Vec::new();
    let write_log = |epochs: &[EpochLog]| {
        report::write_json(
            &log_path,
            &TrainLog {
                config: &cfg,
                vocab_size: vocab.len(),
                train_chars: split.train.len(),
                dev_chars: split.dev.len(),
                unigram_bpc,
                epochs,
            },
        )
    };
    let outcome = train_with(&cfg, &vocab, &split, |ckpt, log| {
        info!(
            "epoch {}: train {:.4} bpc, dev {:.4} bpc, {} of {} updates clipped",
            log.epoch, log.train_bpc, log.dev_bpc, log.clipped, log.blocks
        );
        ckpt.save(&out.join(format!("lm.epoch{}.ckpt", log.epoch)))?;
        epochs.push(log.clone());
        write_log(&epochs)
    })?;
    for e in &outcome.log {
        run.output(&format!("lm.epoch{}.ckpt", e.epoch));
    }
    write_log(&outcome.log)?;
    outcome.best.save(&run.output("lm.ckpt"))?;
    info!("best dev {:.4} bpc at epoch {}", outcome.best.meta.dev_bpc, outcome.best.meta.epoch);
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    dev_chars: usize,
    dev_bpc: f64,
    unigram_bpc: f64,
    /// Unigram minus model, in bits per character.
    margin: f64,
}

pub fn eval(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    let train_fraction: f64 = run.cfg.get("train_fraction")?;
    let text = read_text(&run.input("corpus")?)?;
    let split = StreamSplit::new(&model.vocab.encode(&text), train_fraction, run.seed)?;
    let dev_bpc = bits_per_char(&model, &split.dev)?;
    let unigram_bpc = unigram_bits_per_char(&split.train, &split.dev, model.vocab.len());
    info!("dev {dev_bpc:.4} bpc, unigram {unigram_bpc:.4} bpc");
    run.write_json(
        "eval.json",
        &EvalReport { dev_chars: split.dev.len(), dev_bpc, unigram_bpc, margin: unigram_bpc - dev_bpc },
    )
}

pub fn sample_text(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    let prefix = run.cfg.raw("prefix").unwrap_or("").to_string();
    let text = sample(&model, &prefix, run.cfg.get("length")?, run.cfg.get("temperature")?, run.seed)?;
    std::fs::write(run.output("sample.txt"), &text)?;
    println!("{prefix}{text}");
    Ok(())
}

/// Word lists from `words` plus, when a corpus is given, its tokens.
pub fn known_words(run: &mut Run) -> Result<Vec<WordList>, Failure> {
    let mut lists = Vec::new();
    if let Some(p) = run.opt_input("corpus")? {
        let mut w = WordList::new();
        for t in tokenize_words(&read_text(&p)?) {
            w.insert(&t.text);
        }
        lists.push(w);
    }
    for p in run.inputs("words")? {
        lists.push(load_wordlist(&p)?);
    }
    Ok(lists)
}

/// Tokens of the training side of the corpus split (same fraction and seed as `train`).
fn training_tokens(run: &mut Run, model: &CharLm<f32>) -> Result<Option<WordList>, Failure> {
    let Some(p) = run.opt_input("corpus")? else {
        return Ok(None);
    };
    let split = StreamSplit::new(&model.vocab.encode(&read_text(&p)?), run.cfg.get("train_fraction")?, run.seed)?;
    let mut w = WordList::new();
    for t in tokenize_words(&model.vocab.decode(&split.train)) {
        w.insert(&t.text);
    }
    Ok(Some(w))
}

pub fn nonce(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    let mut lists: Vec<WordList> = training_tokens(run, &model)?.into_iter().collect();
    for p in run.inputs("words")? {
        lists.push(load_wordlist(&p)?);
    }
    if lists.is_empty() {
        return Err(Failure::Usage("nonce-rate needs `corpus` or `words`".into()));
    }
    let refs: Vec<&WordList> = lists.iter().collect();
    let rate = nonce_rate(&model, &refs, run.cfg.get("sample_size")?, run.seed)?;
    info!("{} of {} sampled words are nonce (rate {:.4})", rate.nonce, rate.sampled, rate.rate);
    run.write_json("nonce_rate.json", &rate)
}

pub fn inventory(run: &mut Run) -> Result<Vec<SuffixSpec>, Failure> {
    Ok(match run.opt_input("inventory")? {
        Some(p) => read_inventory(&p)?,
        None => default_inventory(),
    })
}

#[derive(Serialize)]
struct FreqRow {
    suffix: String,
    class: SuffixClass,
    suffixed: usize,
    standalone: usize,
}

pub fn freq(run: &mut Run) -> Result<(), Failure> {
    let text = read_text(&run.input("corpus")?)?;
    let suffixes = inventory(run)?;
    let recovery = run.cfg.list("recovery");
    let recovery: Vec<&str> = recovery.iter().map(String::as_str).collect();
    let tokens = tokenize_words(&text);
    let counts = TokenCounts::new(tokens.iter().map(|t| t.text.as_str()));
    let rows: Vec<FreqRow> = suffixes
        .iter()
        .map(|s| {
            let f = suffix_frequency(&counts, &s.surface, &recovery);
            FreqRow { suffix: s.surface.clone(), class: s.class, suffixed: f.suffixed, standalone: f.standalone }
        })
        .collect();
    run.write_json("freq.json", &rows)?;
    let mut w = report::csv_file(&run.output("freq.csv"))?;
    w.write_record(["suffix", "class", "suffixed", "standalone"])?;
    for r in &rows {
        w.write_record([r.suffix.clone(), format!("{:?}", r.class), r.suffixed.to_string(), r.standalone.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
