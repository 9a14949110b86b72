use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vgo_core::analysis::{pe_stats, window_beta};
use vgo_core::measurement::VelocityMode;
use vgo_core::observer::{GainSpec, ObserverState};
use vgo_core::sim::{frames_from_measurements, run_monte_carlo, synth_stream, SimConfig};
use vgo_core::so3::{exp_so3, log_so3, project_to_so3, random_rotation, UnitDirection};

fn bench_so3_kernel(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let vectors: Vec<Vector3<f64>> = (0..256)
        .map(|_| Vector3::new(rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0))
        .collect();
    c.bench_function("exp_log_round_trip", |b| {
        let mut i = 0;
        b.iter(|| {
            let v = &vectors[i % vectors.len()];
            i += 1;
            black_box(log_so3(&exp_so3(v)))
        })
    });

    let rotations: Vec<_> = (0..256).map(|_| random_rotation(&mut rng, PI)).collect();
    c.bench_function("project_to_so3", |b| {
        let mut i = 0;
        b.iter(|| {
            let r = &rotations[i % rotations.len()];
            i += 1;
            black_box(project_to_so3(r.matrix()).unwrap())
        })
    });
}

fn bench_observer_step(c: &mut Criterion) {
    let cfg = SimConfig {
        steps: 2000,
        ..SimConfig::default()
    };
    let (_, rels, vels) = synth_stream(&cfg);
    let frames = frames_from_measurements(&rels, &vels, VelocityMode::Linear).unwrap();
    let gain = GainSpec::scalar(cfg.gain).unwrap();
    c.bench_function("observer_step", |b| {
        let mut state = ObserverState::new();
        let mut i = 0;
        b.iter(|| {
            state = state.step(&frames[i % frames.len()], &gain);
            i += 1;
            black_box(state.attitude().matrix()[(0, 0)])
        })
    });
}

fn bench_pe_statistics(c: &mut Criterion) {
    let dirs: Vec<UnitDirection> = (0..1000)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / 500.0;
            UnitDirection::new_normalize(Vector3::new(theta.cos(), theta.sin(), 0.0)).unwrap()
        })
        .collect();
    c.bench_function("window_beta_500", |b| {
        b.iter(|| black_box(window_beta(&dirs[..500])))
    });
    c.bench_function("pe_stats_1000x500", |b| {
        b.iter(|| black_box(pe_stats(&dirs, 499).unwrap()))
    });
}

fn bench_monte_carlo(c: &mut Criterion) {
    let cfg = SimConfig {
        steps: 500,
        runs: 4,
        ..SimConfig::default()
    };
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    group.bench_function("4x500", |b| b.iter(|| black_box(run_monte_carlo(&cfg))));
    group.finish();
}

criterion_group!(
    benches,
    bench_so3_kernel,
    bench_observer_step,
    bench_pe_statistics,
    bench_monte_carlo
);
criterion_main!(benches);
