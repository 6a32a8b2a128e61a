// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use cmerw_bench::lattice_points;
use cmerw_core::montecarlo::ensemble::{run_ensemble, EnsembleConfig};
use cmerw_core::{convex_hull_2d, ModelParams, Tracking, WalkState};

const STEPS: u64 = 100_000;

fn step_throughput(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    group.throughput(Throughput::Elements(STEPS));
    let cases = [
        (1, Tracking::Position, "position"),
        (2, Tracking::Position, "position"),
        (2, Tracking::Martingale, "martingale"),
        (2, Tracking::QuadraticVariation, "quadratic_variation"),
        (3, Tracking::Martingale, "martingale"),
    ];
    for (d, tracking, label) in cases {
        let params = ModelParams::from_ratio(d, 5, 8).unwrap();
        group.bench_with_input(BenchmarkId::new(label, format!("d{d}")), &params, |b, &params| {
            b.iter(|| {
                let mut state = WalkState::new(params, 1, tracking).unwrap();
                state.advance(STEPS);
                black_box(state.position_sum()[0])
            })
        });
    }
    group.finish();
}

fn ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    let params = ModelParams::from_ratio(2, 1, 2).unwrap();
    for workers in [1, 4] {
        let config = EnsembleConfig::new(params, 10_000, 256, 7).parallelism(workers);
        group.throughput(Throughput::Elements(10_000 * 256));
        group.bench_with_input(BenchmarkId::new("d2_n1e4_r256", workers), &config, |b, config| {
            b.iter(|| black_box(run_ensemble(config).unwrap().aggregate.mean[0]))
        });
    }
    group.finish();
}

fn hull(c: &mut Criterion) {
    let mut group = c.benchmark_group("convex_hull");
    for count in [1_000, 100_000] {
        let points = lattice_points(count, 10_000, 3);
        group.throughput(Throughput::Elements(count as u64));
        group.bench_with_input(BenchmarkId::from_parameter(count), &points, |b, points| {
            b.iter(|| black_box(convex_hull_2d(points).unwrap().vertices.len()))
        });
    }
    // A walk path is the intended input: long, with many collinear and repeated points.
    let params = ModelParams::from_ratio(2, 3, 4).unwrap();
    let mut state = WalkState::new(params, 5, Tracking::Position).unwrap();
    let path: Vec<_> = (0..1_000_000)
        .map(|_| {
            state.step();
            [state.position()[0], state.position()[1]]
        })
        .collect();
    group.throughput(Throughput::Elements(path.len() as u64));
    group.bench_function("walk_path_1e6", |b| b.iter(|| black_box(convex_hull_2d(&path).unwrap().vertices.len())));
    group.finish();
}

criterion_group!(benches, step_throughput, ensemble, hull);
criterion_main!(benches);
