//! Benchmarks of the four computational kernels: transient evolution on
//! the largest (sector) chain, absorption-moment solves, a Monte Carlo
//! trial batch, and delay-equation stepping.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use raidrel::{
    build_generator, build_raid5_delay, dde_integrate, evolve, moments_via_resolvent,
    pde_rebuild_integrate, simulate, ModelKind, RaidConfig,
};

fn bench_evolve_sector(c: &mut Criterion) {
    let cfg = RaidConfig::new(16, 4);
    let gen = build_generator(ModelKind::Sector, &cfg).unwrap();
    let times: Vec<f64> = (0..=20).map(|i| 0.25 * i as f64).collect();
    c.bench_function("evolve sector N=16 M=4, 20 grid points", |b| {
        b.iter(|| evolve(black_box(&gen), black_box(&times)).unwrap())
    });
}

fn bench_moments(c: &mut Criterion) {
    let cfg = RaidConfig::new(32, 6);
    let gen = build_generator(ModelKind::SectorImperfect, &cfg).unwrap();
    c.bench_function("moments sector-imperfect N=32 M=6", |b| {
        b.iter(|| moments_via_resolvent(black_box(&gen), 2).unwrap())
    });
}

fn bench_simulation_batch(c: &mut Criterion) {
    let cfg = RaidConfig::new(8, 3).with_mu(2.0).with_sector_rates(0.5, 4.0);
    c.bench_function("simulate sector N=8 M=3, 10k trials", |b| {
        b.iter(|| simulate(ModelKind::Sector, black_box(&cfg), 10_000, 1, false).unwrap())
    });
}

fn bench_delay_stepping(c: &mut Criterion) {
    let sys = build_raid5_delay(1, 0.01, 0.01, 300.0);
    c.bench_function("dde integrate h=300 to t=2000", |b| {
        b.iter(|| dde_integrate(black_box(&sys), 2000.0, 300.0 / 256.0).unwrap())
    });
    c.bench_function("pde rebuild integrate h=300 to t=2000", |b| {
        b.iter(|| {
            pde_rebuild_integrate(1, 0.01, 0.01, 300.0, 2000.0, 300.0 / 256.0).unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_evolve_sector,
    bench_moments,
    bench_simulation_batch,
    bench_delay_stepping
);
criterion_main!(benches);
