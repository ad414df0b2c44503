use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use liouville_bench::{basis, galerkin, lqg};
use liouville_core::dynamics::{langevin_step_with_noise, Energy, RemainderSolver, RemainderState};
use liouville_core::fields::{fill_gff, OuState};
use liouville_core::gmc::{ChaosField, PunctureSet};
use liouville_core::spectral::{sigma_n, GridTransform};
use liouville_core::RngStream;

fn transform(c: &mut Criterion) {
    let mut g = c.benchmark_group("grid_transform");
    for cutoff in [24.0, 48.0, 96.0] {
        let b = basis(cutoff);
        let res = GridTransform::min_resolution(&b);
        let t = GridTransform::new(Arc::clone(&b), res).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        let mut coeffs = vec![0.0; b.dim()];
        fill_gff(&b, &mut rng, &mut coeffs);
        g.bench_with_input(BenchmarkId::new("to_grid", cutoff), &coeffs, |bch, c| {
            bch.iter(|| t.to_grid(black_box(c)))
        });
        let grid = t.to_grid(&coeffs);
        g.bench_with_input(BenchmarkId::new("project", cutoff), &grid, |bch, f| {
            bch.iter(|| t.project(black_box(f)))
        });
    }
    g.finish();
}

fn gff(c: &mut Criterion) {
    let mut g = c.benchmark_group("gff_sample");
    for cutoff in [48.0, 96.0] {
        let b = basis(cutoff);
        let mut rng = RngStream::new(2, 0).rng();
        let mut out = vec![0.0; b.dim()];
        g.bench_function(BenchmarkId::from_parameter(cutoff), |bch| {
            bch.iter(|| fill_gff(&b, &mut rng, black_box(&mut out)))
        });
    }
    g.finish();
}

fn theta(c: &mut Criterion) {
    let b = basis(48.0);
    let chaos = ChaosField::new(Arc::clone(&b), &lqg(8.0).gmc(), &PunctureSet::empty(), 192).unwrap();
    let mut rng = RngStream::new(3, 0).rng();
    let mut coeffs = vec![0.0; b.dim()];
    fill_gff(&b, &mut rng, &mut coeffs);
    c.bench_function("theta_field/N=8", |bch| {
        bch.iter(|| chaos.theta(black_box(&coeffs)).unwrap())
    });
    c.bench_function("sigma_n/cutoff=48", |bch| {
        bch.iter(|| sigma_n(black_box(&b), 8.0).unwrap())
    });
}

fn remainder(c: &mut Criterion) {
    let b = basis(48.0);
    let solver = RemainderSolver::new(Arc::clone(&b), &lqg(8.0), 192).unwrap();
    let tables = solver.tables(1e-3).unwrap();
    let mut rng = RngStream::new(4, 0).rng();
    let ou = OuState::stationary(&b, &mut rng).unwrap();
    let theta = solver.theta(&ou).unwrap();
    let state = RemainderState::zero(Arc::clone(&b));
    c.bench_function("v_step/N=8", |bch| {
        bch.iter(|| solver.v_step(black_box(&state), &theta, 0.0, &tables).unwrap())
    });
}

fn langevin(c: &mut Criterion) {
    let e = galerkin();
    let mut rng = RngStream::new(5, 0).rng();
    let mut u = e.approximate_sample(&mut rng).unwrap();
    let mut noise = vec![0.0; e.dim()];
    let mut grad = vec![0.0; e.dim()];
    c.bench_function("langevin_step/cutoff=8", |bch| {
        bch.iter(|| {
            rng.fill_normal(&mut noise);
            langevin_step_with_noise(&e, &mut u, 1e-3, &noise, &mut grad).unwrap();
        })
    });
}

criterion_group!(benches, transform, gff, theta, remainder, langevin);
criterion_main!(benches);
