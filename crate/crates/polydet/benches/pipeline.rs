//! Pipeline benchmarks: the deterministic moment recursion at experiment
//! size, per-trial empirical moments, and a small end-to-end sweep in both
//! execution modes.

use criterion::{Criterion, criterion_group, criterion_main};
use polydet::channel::{self, CorrelationProfile};
use polydet::moments;
use polydet::rng::{EntryLaw, SeedSpec};
use polydet::sim::{self, ExperimentConfig};
use std::hint::black_box;

fn jakes_profile(n_rx: usize, n_tx: usize, m: usize) -> CorrelationProfile {
    let mut rng = SeedSpec::profile(1).rng();
    let intervals = channel::draw_angle_intervals(m, &mut rng);
    channel::make_jakes_profile(n_rx, n_tx, 2.0, &intervals, None, channel::JAKES_QUAD_TOL).unwrap()
}

fn bench_recursion(c: &mut Criterion) {
    let mut group = c.benchmark_group("moment_recursion");
    group.sample_size(10);
    let experiment = jakes_profile(100, 40, 40);
    group.bench_function("jakes_100x40_order12", |b| {
        b.iter(|| black_box(moments::compute_recursion(&experiment, 12)))
    });
    let large = jakes_profile(256, 102, 3);
    group.bench_function("jakes_256x102_order6", |b| {
        b.iter(|| black_box(moments::compute_recursion(&large, 6)))
    });
    group.finish();
}

fn bench_empirical_moments(c: &mut Criterion) {
    let mut group = c.benchmark_group("empirical_moments");
    group.sample_size(10);
    let profile = jakes_profile(256, 102, 3);
    group.bench_function("draw_and_moments_256x102", |b| {
        let mut t = 0usize;
        b.iter(|| {
            t += 1;
            let ch = channel::draw_channel(&profile, SeedSpec::trial(2, t), EntryLaw::Gaussian);
            black_box(moments::empirical_moments_channel(&ch, 6))
        })
    });
    group.finish();
}

fn sweep_config(parallel: bool) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_json(
        r#"{
            "scenario": {"type": "jakes", "num_intervals": 8},
            "n_rx": 64,
            "n_tx": 24,
            "l_values": [2, 3],
            "snr_grid_db": [0.0, 10.0, 20.0],
            "trials": 32,
            "seed": 4
        }"#,
    )
    .unwrap();
    cfg.parallel = parallel;
    cfg
}

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sinr_sweep_64x24_32trials");
    group.sample_size(10);
    let seq = sweep_config(false);
    group.bench_function("seq", |b| b.iter(|| black_box(sim::run_sinr_sweep(&seq).unwrap())));
    let par = sweep_config(true);
    group.bench_function("par", |b| b.iter(|| black_box(sim::run_sinr_sweep(&par).unwrap())));
    group.finish();
}

criterion_group!(benches, bench_recursion, bench_empirical_moments, bench_sweep);
criterion_main!(benches);
