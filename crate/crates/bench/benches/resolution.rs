use std::hint::black_box;

use confcurate_bench::{name_pairs, name_variants};
use confcurate_core::normalize::normalize_name;
use confcurate_core::resolve::{resolve, token_sort_ratio, ScoringPolicy};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn similarity(c: &mut Criterion) {
    let pairs = name_pairs(1000, 7);
    let mut group = c.benchmark_group("token_sort_ratio");
    group.throughput(Throughput::Elements(pairs.len() as u64));
    group.bench_function("1000_pairs", |b| {
        b.iter(|| {
            pairs
                .iter()
                .map(|(x, y)| u32::from(token_sort_ratio(black_box(x), black_box(y))))
                .sum::<u32>()
        })
    });
    group.finish();
}

fn normalization(c: &mut Criterion) {
    let names: Vec<String> = name_pairs(1000, 11)
        .into_iter()
        .map(|(a, b)| format!("{a}* Mü{b}é"))
        .collect();
    c.bench_function("normalize_name/1000", |b| {
        b.iter(|| {
            names
                .iter()
                .map(|n| normalize_name(black_box(n)).normalized.len())
                .sum::<usize>()
        })
    });
}

fn clustering(c: &mut Criterion) {
    let policy = ScoringPolicy::default();
    let mut group = c.benchmark_group("resolve");
    for people in [100, 1000, 5000] {
        let (variants, ctx) = name_variants(people, 3);
        group.throughput(Throughput::Elements(variants.len() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(people), &variants, |b, v| {
            b.iter(|| resolve(black_box(v), &ctx, &policy).len())
        });
    }
    group.finish();
}

criterion_group!(benches, similarity, normalization, clustering);
criterion_main!(benches);
