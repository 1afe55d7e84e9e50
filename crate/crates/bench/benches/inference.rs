use std::hint::black_box;
use std::sync::Arc;

use cliquetree::{compile, fixtures, query_with_mode, AbsorptionMode, EvidenceSet, InferenceSession};
use cliquetree_bench::{nested_evidence, template};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn compilation(c: &mut Criterion) {
    let asia = fixtures::asia();
    let alarm = fixtures::alarm();
    let mut group = c.benchmark_group("compile");
    group.bench_function("asia", |b| b.iter(|| compile(black_box(&asia)).unwrap()));
    group.bench_function("alarm", |b| b.iter(|| compile(black_box(&alarm)).unwrap()));
    group.finish();
}

fn evidence_sweep(c: &mut Criterion) {
    let net = fixtures::alarm();
    let t = template(&net);
    let mut group = c.benchmark_group("alarm_query");
    for ev in nested_evidence(&net, 12, 1).into_iter().step_by(4) {
        for (name, mode) in [("removal", AbsorptionMode::Removal), ("zeroing", AbsorptionMode::Zeroing)] {
            group.bench_with_input(BenchmarkId::new(name, ev.len()), &ev, |b, ev| {
                b.iter(|| query_with_mode(&t, black_box(ev), mode).unwrap())
            });
        }
    }
    group.finish();
}

fn incremental(c: &mut Criterion) {
    let net = fixtures::alarm();
    let t = template(&net);
    let sets = nested_evidence(&net, 5, 2);
    let (before, after) = (&sets[4], &sets[5]);
    let step: EvidenceSet =
        after.iter().filter(|(id, _)| before.get(id).is_none()).fold(EvidenceSet::new(), |ev, (id, v)| ev.with(id, v));

    let mut calibrated = InferenceSession::new(Arc::clone(&t));
    calibrated.absorb_evidence(before).unwrap();
    calibrated.propagate().unwrap();

    let mut group = c.benchmark_group("alarm_add_one");
    group.bench_function("incremental", |b| {
        b.iter_batched(
            || calibrated.clone(),
            |mut s| s.add_evidence_incremental(black_box(&step)).unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
    group.bench_function("fresh", |b| {
        b.iter(|| query_with_mode(&t, black_box(after), AbsorptionMode::Removal).unwrap())
    });
    group.finish();
}

fn worked_clique(c: &mut Criterion) {
    let t = template(&fixtures::worked_clique());
    let ev = EvidenceSet::new().with("C", 0);
    let mut group = c.benchmark_group("worked_clique");
    for (name, mode) in [("removal", AbsorptionMode::Removal), ("zeroing", AbsorptionMode::Zeroing)] {
        group.bench_function(name, |b| b.iter(|| query_with_mode(&t, black_box(&ev), mode).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, compilation, evidence_sweep, incremental, worked_clique);
criterion_main!(benches);
