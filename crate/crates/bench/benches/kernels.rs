use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use twinfront::noise::NoiseSource;
use twinfront::spde::Integrator;
use twinfront::{assemble_operator, build_grid, eigen_spectrum, find_center, Field, SimConfig};

fn step(c: &mut Criterion) {
    let config = SimConfig::new(0.05, 1.0).with_seed(1);
    let integrator = Integrator::new(&config).unwrap();
    let mut state = integrator.initial_state().unwrap();
    let mut source = NoiseSource::new(1, 0);
    c.bench_function("coupled step, 401 nodes", |b| {
        b.iter(|| integrator.step(black_box(&mut state), &mut source).unwrap())
    });
}

fn eigen(c: &mut Criterion) {
    let grid = build_grid(0.05, 0.1, None).unwrap();
    let op = assemble_operator(&grid, 0.0, 0.0).unwrap();
    c.bench_function("top 5 eigenpairs, 401 nodes", |b| {
        b.iter(|| eigen_spectrum(black_box(&op), 5).unwrap())
    });
}

fn center(c: &mut Criterion) {
    let grid = build_grid(0.05, 0.1, None).unwrap();
    let m = Field::from_fn(grid, |x| {
        (x - 0.3).tanh() + 0.05 * (3.0 * x).sin() * (-x * x / 10.0).exp()
    });
    c.bench_function("find_center, 401 nodes", |b| {
        b.iter(|| find_center(black_box(&m), 0.0))
    });
}

criterion_group!(benches, step, eigen, center);
criterion_main!(benches);
