mod commands;
mod config;
mod failure;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use config::Config;
use failure::Failure;
use run::{resolve_threads, Run};

/// Character-level LSTM language-model lab: train, probe and run
/// morphology experiments. Every run writes its artifacts plus a
/// manifest.json into the output directory.
#[derive(Parser)]
#[command(name = "morphoscope", version, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Key-value config file (`key = value` lines, `#` comments)
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (falls back to MORPHOSCOPE_THREADS, then 1)
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override any config key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the character LM; writes lm.ckpt, per-epoch checkpoints and train_log.json
    Train(TrainArgs),
    /// Dev-split bits per character against the unigram baseline
    Eval(EvalArgs),
    /// Sample text from the LM
    Sample(SampleArgs),
    /// Fraction of sampled words found in no known-word list
    NonceRate(NonceArgs),
    /// Hidden-unit analyses
    #[command(subcommand)]
    Units(UnitsCommand),
    /// Frozen-encoder probes
    #[command(subcommand)]
    Probe(ProbeCommand),
    /// Derivational-suffix selectional-restriction experiment
    #[command(subcommand)]
    Suffix(SuffixCommand),
    /// Corpus counts of suffixed words and their recovered bases
    Freq(FreqArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Plain-text training corpus
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Maximum epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Hidden units
    #[arg(long)]
    hidden: Option<usize>,
    /// Dropout probability
    #[arg(long)]
    dropout: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// LM checkpoint
    #[arg(long)]
    lm: Option<PathBuf>,
    /// Corpus the model was trained on (split with the same seed)
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    /// LM checkpoint
    #[arg(long)]
    lm: Option<PathBuf>,
    /// Text to condition on
    #[arg(long)]
    prefix: Option<String>,
    /// Characters to generate
    #[arg(long)]
    length: Option<usize>,
    /// Softmax temperature
    #[arg(long)]
    temperature: Option<f64>,
}

#[derive(Args)]
struct NonceArgs {
    #[command(flatten)]
    common: Common,
    /// LM checkpoint
    #[arg(long)]
    lm: Option<PathBuf>,
    /// Training corpus; tokens of its training split count as known words
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Word-list file (repeatable)
    #[arg(long)]
    words: Vec<PathBuf>,
    /// Words to sample
    #[arg(long)]
    sample_size: Option<usize>,
}

#[derive(Args)]
struct UnitArgs {
    #[command(flatten)]
    common: Common,
    /// LM checkpoint
    #[arg(long)]
    lm: Option<PathBuf>,
    /// Corpus to scan
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Hidden unit index
    #[arg(long)]
    unit: Option<usize>,
    /// Characters of the corpus to scan (0 = all)
    #[arg(long)]
    max_chars: Option<usize>,
}

#[derive(Args)]
struct TopArgs {
    #[command(flatten)]
    unit: UnitArgs,
    /// Triggers kept per unit
    #[arg(long)]
    top_k: Option<usize>,
    /// Characters of context per trigger
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    common: Common,
    /// LM checkpoint
    #[arg(long)]
    lm: Option<PathBuf>,
    /// Hidden unit index
    #[arg(long)]
    unit: Option<usize>,
    /// Text to trace
    #[arg(long)]
    query: Option<String>,
}

#[derive(Subcommand)]
enum UnitsCommand {
    /// Top-activating contexts for every unit; writes triggers.json
    Top(TopArgs),
    /// One unit's activation over a query string; writes trace.csv
    Trace(TraceArgs),
    /// Correlation of a unit with the predicted space probability
    Correlate(UnitArgs),
    /// Rank units by alignment with word-final positions
    Rank(UnitArgs),
}

#[derive(Subcommand)]
enum ProbeCommand {
    /// Morpheme-boundary probe
    #[command(subcommand)]
    Seg(SegCommand),
    /// Part-of-speech probe
    #[command(subcommand)]
    Pos(PosCommand),
}

#[derive(Args)]
struct SegArgs {
    #[command(flatten)]
    common: Common,
    /// LM checkpoint
    #[arg(long)]
    lm: Option<PathBuf>,
    /// Probe checkpoint (eval only)
    #[arg(long)]
    probe: Option<PathBuf>,
    /// Gold segmentation file
    #[arg(long)]
    data: Option<PathBuf>,
    /// Corpus supplying word contexts and the word list
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Extra word-list file for boundary classification (repeatable)
    #[arg(long)]
    words: Vec<PathBuf>,
    /// Evaluate on `test` (held-out types) or `all`
    #[arg(long)]
    eval_split: Option<String>,
}

#[derive(Subcommand)]
enum SegCommand {
    /// Train on the training types; writes seg.ckpt
    Train(SegArgs),
    /// Precision/recall/F1 per boundary setting; writes seg_report.json
    Eval(SegArgs),
}

#[derive(Args)]
struct PosArgs {
    #[command(flatten)]
    common: Common,
    /// LM checkpoint
    #[arg(long)]
    lm: Option<PathBuf>,
    /// Probe checkpoint (eval and evolve)
    #[arg(long)]
    probe: Option<PathBuf>,
    /// CoNLL-U treebank
    #[arg(long)]
    treebank: Option<PathBuf>,
    /// Sentence to tag character by character (evolve)
    #[arg(long)]
    text: Option<String>,
    /// Evaluate on `test` (held-out sentences) or `all`
    #[arg(long)]
    eval_split: Option<String>,
}

#[derive(Subcommand)]
enum PosCommand {
    /// Train on the training sentences; writes pos.ckpt
    Train(PosArgs),
    /// Character and word accuracy with baselines; writes pos_report.json
    Eval(PosArgs),
    /// Tag distribution after every character; writes evolution.csv
    Evolve(PosArgs),
}

#[derive(Args)]
struct SuffixArgs {
    #[command(flatten)]
    common: Common,
    /// LM checkpoint
    #[arg(long)]
    lm: Option<PathBuf>,
    /// POS probe checkpoint
    #[arg(long)]
    tagger: Option<PathBuf>,
    /// Corpus for reference statistics and as a dictionary
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Dictionary word-list file (repeatable)
    #[arg(long)]
    words: Vec<PathBuf>,
    /// Filter thresholds from `suffix stats`
    #[arg(long)]
    thresholds: Option<PathBuf>,
    /// Nonce-base TSV (run)
    #[arg(long)]
    bases: Option<PathBuf>,
    /// Nonce-base context TSV (run; defaults to <bases>.contexts.tsv)
    #[arg(long)]
    contexts: Option<PathBuf>,
    /// Suffix inventory TSV (`suffix<TAB>class`)
    #[arg(long)]
    inventory: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SuffixCommand {
    /// Real-word filter statistics; writes thresholds.json
    Stats(SuffixArgs),
    /// Generate filtered nonce bases; writes bases.tsv and bases.contexts.tsv
    Bases(SuffixArgs),
    /// Score every suffix after every base; writes suffix_report.json and .csv
    Run(SuffixArgs),
}

#[derive(Args)]
struct FreqArgs {
    #[command(flatten)]
    common: Common,
    /// Corpus to count
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Suffix inventory TSV (`suffix<TAB>class`)
    #[arg(long)]
    inventory: Option<PathBuf>,
}

type Overrides = Vec<(&'static str, Option<String>)>;

fn path(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn paths(ps: &[PathBuf]) -> Option<String> {
    (!ps.is_empty()).then(|| ps.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(","))
}

fn show<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(T::to_string)
}

fn unit_overrides(a: &UnitArgs) -> Overrides {
    vec![("lm", path(&a.lm)), ("corpus", path(&a.corpus)), ("unit", show(&a.unit)), ("max_chars", show(&a.max_chars))]
}

fn seg_overrides(a: &SegArgs) -> Overrides {
    vec![
        ("lm", path(&a.lm)),
        ("probe", path(&a.probe)),
        ("segmentations", path(&a.data)),
        ("corpus", path(&a.corpus)),
        ("words", paths(&a.words)),
        ("eval_split", a.eval_split.clone()),
    ]
}

fn pos_overrides(a: &PosArgs) -> Overrides {
    vec![
        ("lm", path(&a.lm)),
        ("probe", path(&a.probe)),
        ("treebank", path(&a.treebank)),
        ("text", a.text.clone()),
        ("eval_split", a.eval_split.clone()),
    ]
}

fn suffix_overrides(a: &SuffixArgs) -> Overrides {
    vec![
        ("lm", path(&a.lm)),
        ("tagger", path(&a.tagger)),
        ("corpus", path(&a.corpus)),
        ("words", paths(&a.words)),
        ("thresholds", path(&a.thresholds)),
        ("bases", path(&a.bases)),
        ("contexts", path(&a.contexts)),
        ("inventory", path(&a.inventory)),
    ]
}

type Handler = fn(&mut Run) -> Result<(), Failure>;

/// Resolves the command name, shared flags, specific overrides and handler.
fn resolve(cmd: &Command) -> (&'static str, &Common, Overrides, Handler) {
    use commands::{lm, probe, suffix, units};
    match cmd {
        Command::Train(a) => (
            "train",
            &a.common,
            vec![
                ("corpus", path(&a.corpus)),
                ("epochs", show(&a.epochs)),
                ("hidden", show(&a.hidden)),
                ("dropout", show(&a.dropout)),
            ],
            lm::train,
        ),
        Command::Eval(a) => ("eval", &a.common, vec![("lm", path(&a.lm)), ("corpus", path(&a.corpus))], lm::eval),
        Command::Sample(a) => (
            "sample",
            &a.common,
            vec![
                ("lm", path(&a.lm)),
                ("prefix", a.prefix.clone()),
                ("length", show(&a.length)),
                ("temperature", show(&a.temperature)),
            ],
            lm::sample_text,
        ),
        Command::NonceRate(a) => (
            "nonce-rate",
            &a.common,
            vec![
                ("lm", path(&a.lm)),
                ("corpus", path(&a.corpus)),
                ("words", paths(&a.words)),
                ("sample_size", show(&a.sample_size)),
            ],
            lm::nonce,
        ),
        Command::Units(UnitsCommand::Top(a)) => {
            let mut ov = unit_overrides(&a.unit);
            ov.extend([("top_k", show(&a.top_k)), ("trigger_window", show(&a.window))]);
            ("units top", &a.unit.common, ov, units::top)
        }
        Command::Units(UnitsCommand::Trace(a)) => (
            "units trace",
            &a.common,
            vec![("lm", path(&a.lm)), ("unit", show(&a.unit)), ("query", a.query.clone())],
            units::trace,
        ),
        Command::Units(UnitsCommand::Correlate(a)) => {
            ("units correlate", &a.common, unit_overrides(a), units::correlate)
        }
        Command::Units(UnitsCommand::Rank(a)) => ("units rank", &a.common, unit_overrides(a), units::rank),
        Command::Probe(ProbeCommand::Seg(SegCommand::Train(a))) => {
            ("probe seg train", &a.common, seg_overrides(a), probe::seg_train)
        }
        Command::Probe(ProbeCommand::Seg(SegCommand::Eval(a))) => {
            ("probe seg eval", &a.common, seg_overrides(a), probe::seg_eval)
        }
        Command::Probe(ProbeCommand::Pos(PosCommand::Train(a))) => {
            ("probe pos train", &a.common, pos_overrides(a), probe::pos_train)
        }
        Command::Probe(ProbeCommand::Pos(PosCommand::Eval(a))) => {
            ("probe pos eval", &a.common, pos_overrides(a), probe::pos_eval)
        }
        Command::Probe(ProbeCommand::Pos(PosCommand::Evolve(a))) => {
            ("probe pos evolve", &a.common, pos_overrides(a), probe::pos_evolve)
        }
        Command::Suffix(SuffixCommand::Stats(a)) => ("suffix stats", &a.common, suffix_overrides(a), suffix::stats),
        Command::Suffix(SuffixCommand::Bases(a)) => ("suffix bases", &a.common, suffix_overrides(a), suffix::bases),
        Command::Suffix(SuffixCommand::Run(a)) => {
            ("suffix run", &a.common, suffix_overrides(a), suffix::run_experiment)
        }
        Command::Freq(a) => {
            ("freq", &a.common, vec![("corpus", path(&a.corpus)), ("inventory", path(&a.inventory))], lm::freq)
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let (name, common, overrides, handler) = resolve(&cli.command);
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    cfg.apply(&common.set)?;
    for (key, value) in overrides.into_iter().chain([("seed", show(&common.seed)), ("out", path(&common.out))]) {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    let mut run = Run::new(name, cfg, resolve_threads(common.threads)?)?;
    log::info!("{name}: writing to {}", run.out.display());
    handler(&mut run)?;
    run.finish()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let keys: String = config::KEYS
        .iter()
        .map(
            |(k, d, doc)| {
                if d.is_empty() {
                    format!("  {k}: {doc}\n")
                } else {
                    format!("  {k}: {doc} [default: {d}]\n")
                }
            },
        )
        .collect();
    let matches = Cli::command()
        .after_long_help(format!("Config keys (settable in --config files or with --set):\n{keys}"))
        .try_get_matches();
    let cli = match matches.and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
