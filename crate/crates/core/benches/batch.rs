//! Batch throughput: the rayon path against the single-threaded one.
//!
//! Built with `--no-default-features` both variants run sequentially.

use std::hint::black_box;
use std::path::Path;
use std::sync::Arc;

use ariel_core::ariel::{compile, parse, tokenize, ConstantTable};
use ariel_core::batch;
use ariel_core::entity::{DbSnapshot, EntityRef, EntityState};
use ariel_core::harness::load_system;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RULES: &str = "
IF [ FAULTY TASK 10 AND NOT ISOLATED TASK 10 ]
THEN
    IF [ TRANSIENT TASK 10 ] THEN RESTART TASK 10
    ELSE ISOLATE TASK 10 START TASK 12 SEND 7 GROUP 3 FI
FI
IF [ FAULTY NODE 0 OR FAULTY NODE 1 ] THEN WARN TASK 20 FI
IF [ ( RESTARTED TASK 11 AND ACTIVE TASK 11 ) OR PHASE TASK 11 == 2 ] THEN SEND 1 GROUP 3 FI
";

fn snapshots(n: usize) -> Vec<DbSnapshot> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let entities = [
        EntityRef::task(10),
        EntityRef::task(11),
        EntityRef::node(0),
        EntityRef::node(1),
    ];
    (0..n)
        .map(|_| {
            entities
                .iter()
                .map(|e| {
                    let st = EntityState {
                        active: rng.random(),
                        faulty: rng.random(),
                        transient: rng.random(),
                        isolated: rng.random(),
                        restarted: rng.random(),
                        phase: rng.random_range(0..3),
                    };
                    (*e, st)
                })
                .collect()
        })
        .collect()
}

fn bench_evaluate(c: &mut Criterion) {
    let script = parse(&tokenize(RULES).unwrap(), &ConstantTable::new()).unwrap();
    let program = compile(&script.rules);
    let mut group = c.benchmark_group("evaluate_many");
    for size in [1_000, 100_000] {
        let snaps = snapshots(size);
        group.bench_with_input(BenchmarkId::new("parallel", size), &snaps, |b, s| {
            b.iter(|| black_box(batch::evaluate_many(&program, s)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", size), &snaps, |b, s| {
            b.iter(|| black_box(batch::sequential::evaluate_many(&program, s)))
        });
    }
    group.finish();
}

fn bench_seeds(c: &mut Criterion) {
    let scn = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/task10/task10.scn");
    let spec = Arc::new(load_system(&scn).unwrap());
    let mut group = c.benchmark_group("run_seeds");
    group.sample_size(10);
    for size in [4u64, 16] {
        let seeds: Vec<u64> = (0..size).collect();
        group.bench_with_input(BenchmarkId::new("parallel", size), &seeds, |b, s| {
            b.iter(|| black_box(batch::run_seeds(&spec, s)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", size), &seeds, |b, s| {
            b.iter(|| black_box(batch::sequential::run_seeds(&spec, s)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_evaluate, bench_seeds);
criterion_main!(benches);
