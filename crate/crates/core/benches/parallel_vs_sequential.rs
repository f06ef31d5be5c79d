//! The same per-input workloads through `par::map_slice` (rayon when the
//! `parallel` feature is on) and through a plain sequential iterator.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hardy_core::harness::{build_suite, ModelParams, SpaceKind, SuiteConfig, Workspace};
use hardy_core::maximal::grand_maximal_dict;
use hardy_core::par;
use hardy_core::square::lusin_area;
use std::hint::black_box;

fn workspace() -> Workspace {
    let kind = SpaceKind::Grid1d { n: 64, spacing: 1.0 / 32.0 };
    Workspace::build(&kind, &ModelParams::default()).expect("workspace")
}

fn bench(c: &mut Criterion) {
    let ws = workspace();
    let s = ws.space();
    let inputs: Vec<Vec<f64>> = build_suite(s, &ws.gauss, &SuiteConfig { size: 32, ..Default::default() }, 1.0)
        .expect("suite")
        .into_iter()
        .map(|i| i.f)
        .collect();

    let mut group = c.benchmark_group(format!("parallel_vs_sequential/{}", if par::is_parallel() { "rayon" } else { "no-rayon" }));
    group.sample_size(10);

    let grand = |f: &Vec<f64>| grand_maximal_dict(&ws.dict, f).expect("grand maximal");
    group.bench_function(BenchmarkId::new("grand_maximal", "par"), |b| b.iter(|| black_box(par::map_slice(&inputs, grand))));
    group.bench_function(BenchmarkId::new("grand_maximal", "seq"), |b| {
        b.iter(|| black_box(inputs.iter().map(grand).collect::<Vec<_>>()))
    });

    let lusin = |f: &Vec<f64>| lusin_area(&ws.haar, s, f, 1.0).expect("lusin");
    group.bench_function(BenchmarkId::new("lusin_area", "par"), |b| b.iter(|| black_box(par::map_slice(&inputs, lusin))));
    group.bench_function(BenchmarkId::new("lusin_area", "seq"), |b| {
        b.iter(|| black_box(inputs.iter().map(lusin).collect::<Vec<_>>()))
    });
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
