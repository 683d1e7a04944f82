use std::hint::black_box;

use contractcheck::{compare, CompareOptions};
use contractcheck_bench::comparison;
use criterion::{criterion_group, criterion_main, Criterion};

fn comparisons(c: &mut Criterion) {
    for name in ["gcdc_cs", "gcdc_ml", "pizza_prepay"] {
        let cmp = comparison(name);
        let options = cmp.entry.options();
        c.bench_function(&format!("compare/{name}"), |b| {
            b.iter(|| {
                compare(
                    black_box(&cmp.ground.net),
                    &cmp.candidate.net,
                    &cmp.align,
                    &options,
                )
                .unwrap()
            })
        });
    }

    // Pruning an illegal sequence versus comparing every candidate behavior.
    let cmp = comparison("transactive");
    let mut group = c.benchmark_group("transactive");
    group.sample_size(10);
    for prune in [true, false] {
        let options = CompareOptions {
            prune,
            ..cmp.entry.options()
        };
        let label = if prune { "pruned" } else { "unpruned" };
        group.bench_function(label, |b| {
            b.iter(|| {
                compare(
                    black_box(&cmp.ground.net),
                    &cmp.candidate.net,
                    &cmp.align,
                    &options,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, comparisons);
criterion_main!(benches);
