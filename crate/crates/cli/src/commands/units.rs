use log::info;
use morphoscope::corpus::read_text;
use morphoscope::unitprobe::{
    correlate_with_space, rank_units_by_boundary_alignment, top_triggers, trace_unit, write_trace_csv,
};
use serde::Serialize;

use crate::failure::Failure;
use crate::run::Run;

/// The corpus prefix scanned by unit analyses.
fn scan_text(run: &mut Run) -> Result<String, Failure> {
    let text = read_text(&run.input("corpus")?)?;
    let max: usize = run.cfg.get("max_chars")?;
    Ok(if max == 0 { text } else { text.chars().take(max).collect() })
}

fn unit(run: &Run, hidden: usize) -> Result<usize, Failure> {
    let u: usize = run.cfg.get("unit")?;
    if u >= hidden {
        return Err(Failure::Usage(format!("unit {u} out of range for {hidden} hidden units")));
    }
    Ok(u)
}

pub fn top(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    let ids = model.vocab.encode(&scan_text(run)?);
    let triggers = top_triggers(&model, &ids, run.cfg.get("top_k")?, run.cfg.get("trigger_window")?)?;
    info!("scanned {} characters over {} units", ids.len(), triggers.len());
    run.write_json("triggers.json", &triggers)
}

pub fn trace(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    let u = unit(run, model.hidden())?;
    let query: String = run.cfg.get("query")?;
    let t = trace_unit(&model, u, &query)?;
    write_trace_csv(std::fs::File::create(run.output("trace.csv"))?, &t)?;
    Ok(())
}

#[derive(Serialize)]
struct Correlation {
    unit: usize,
    chars: usize,
    pearson: f64,
}

pub fn correlate(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    let u = unit(run, model.hidden())?;
    let ids = model.vocab.encode(&scan_text(run)?);
    let r = correlate_with_space(&model, &ids, u)?;
    info!("unit {u}: correlation with p(space) {r:.4}");
    run.write_json("correlation.json", &Correlation { unit: u, chars: ids.len(), pearson: r })
}

pub fn rank(run: &mut Run) -> Result<(), Failure> {
    let model = run.load_lm()?;
    let scores = rank_units_by_boundary_alignment(&model, &scan_text(run)?)?;
    if let Some(best) = scores.first() {
        info!("best boundary-aligned unit {} (score {:.4})", best.unit, best.score);
    }
    run.write_json("unit_rank.json", &scores)
}
