use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use hdp_core::ensembles::{estimate_psi2, sample_matrix, EnsembleSpec};
use hdp_core::geometry::{gaussian_complexity_mc, LpExponent, SetDescriptor};
use hdp_core::jl::project;
use hdp_core::linalg::{svd, sym_eig, truncate_rank, SymMatrix};
use hdp_core::networks::{sample_sbm, spectral_cluster, SbmParams};
use hdp_core::recovery::{basis_pursuit, plant_sparse_signal, RecoveryProblem};
use hdp_core::rng::RngStream;

fn bench_eig(c: &mut Criterion) {
    let mut rng = RngStream::new(1);
    let mut entries = vec![0.0; 64 * 64];
    rng.fill_gaussian(&mut entries);
    let x = SymMatrix::new(64, entries).unwrap();
    c.bench_function("sym_eig_64", |b| b.iter(|| sym_eig(black_box(&x)).unwrap()));
}

fn bench_svd_truncate(c: &mut Criterion) {
    let mut rng = RngStream::new(2);
    let a = sample_matrix(&EnsembleSpec::gaussian(40), 80, &mut rng);
    c.bench_function("svd_80x40", |b| b.iter(|| svd(black_box(&a)).unwrap()));
    c.bench_function("truncate_rank_80x40_r5", |b| {
        b.iter(|| truncate_rank(black_box(&a), 5).unwrap())
    });
}

fn bench_basis_pursuit(c: &mut Criterion) {
    let rng = RngStream::new(3);
    c.bench_function("basis_pursuit_m40_n80", |b| {
        b.iter_batched(
            || {
                let mut s = rng.split(7);
                let a = sample_matrix(&EnsembleSpec::gaussian(80), 40, &mut s);
                let x = plant_sparse_signal(80, 4, &mut s);
                let y = a.mat_vec(&x);
                RecoveryProblem::new(a, y).unwrap()
            },
            |p| basis_pursuit(black_box(&p)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_sbm(c: &mut Criterion) {
    let params = SbmParams::new(128, 0.1, 0.01).unwrap();
    let rng = RngStream::new(4);
    c.bench_function("sbm_sample_cluster_128", |b| {
        b.iter_batched(
            || rng.split(11),
            |mut s| {
                let (g, _) = sample_sbm(&params, &mut s).unwrap();
                spectral_cluster(black_box(&g)).unwrap()
            },
            BatchSize::SmallInput,
        )
    });
}

fn bench_width(c: &mut Criterion) {
    let t = SetDescriptor::lp_ball(LpExponent::One, 1.0, 256).unwrap();
    let rng = RngStream::new(5);
    c.bench_function("gaussian_complexity_b1_256", |b| {
        b.iter(|| gaussian_complexity_mc(black_box(&t), 500, &rng).unwrap())
    });
}

fn bench_psi2(c: &mut Criterion) {
    let mut rng = RngStream::new(6);
    let mut xs = vec![0.0; 100_000];
    rng.fill_gaussian(&mut xs);
    c.bench_function("estimate_psi2_100k", |b| {
        b.iter(|| estimate_psi2(black_box(&xs)).unwrap())
    });
}

fn bench_project(c: &mut Criterion) {
    let mut rng = RngStream::new(7);
    let spec = EnsembleSpec::gaussian(64);
    let pts = sample_matrix(&spec, 100, &mut rng);
    c.bench_function("jl_project_100pts_64to128", |b| {
        b.iter_batched(
            || rng.split(3),
            |mut s| project(black_box(&pts), 128, &spec, &mut s),
            BatchSize::SmallInput,
        )
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_eig, bench_svd_truncate, bench_basis_pursuit, bench_sbm,
        bench_width, bench_psi2, bench_project
}
criterion_main!(benches);
