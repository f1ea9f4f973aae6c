use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use morphoscope::charlm::CharLm;
use morphoscope::corpus::{ContextedWord, Vocab};
use morphoscope::exec::Exec;
use morphoscope::probes::encode_contexted_many;
use morphoscope::suffixlab::{base_state, default_inventory, run_selectional_experiment, Category, ScoredBase};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn model() -> CharLm<f32> {
    let vocab = Vocab::build("abcdefghijklmnopqrstuvwxyz .,").unwrap();
    CharLm::init(vocab, 32, 128, 7)
}

fn words(n: usize) -> Vec<ContextedWord> {
    let pool = ["walking", "kindness", "movement", "quickly", "reddish", "arrival", "bright"];
    (0..n).map(|i| ContextedWord::new(pool[i % pool.len()], "the old man saw that the")).collect()
}

fn encoding(c: &mut Criterion) {
    let m = model();
    let ws = words(256);
    let mut group = c.benchmark_group("encode_contexted_many");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| encode_contexted_many(&m, &ws, exec).unwrap())
        });
    }
    group.finish();
}

fn suffix_scoring(c: &mut Criterion) {
    let m = model();
    let bases: Vec<ScoredBase> = ["blick", "wug", "frop", "tave", "zorp", "glim"]
        .iter()
        .zip(Category::ALL.iter().cycle())
        .map(|(&s, &category)| ScoredBase {
            surface: s.to_string(),
            category,
            state: base_state(&m, "the", s).unwrap(),
        })
        .collect();
    let inventory = default_inventory();
    let mut group = c.benchmark_group("run_selectional_experiment");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_selectional_experiment(&m, &bases, &inventory, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, encoding, suffix_scoring);
criterion_main!(benches);
