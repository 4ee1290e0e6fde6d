//! Compares the rayon-parallel replication map against the sequential
//! fallback on a realistic Monte Carlo cell (private KDE, n = 500).
//!
//! Run with `cargo bench` (parallel build) and
//! `cargo bench --no-default-features` to get the sequential-only numbers.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ldp_density::densities::TestDensity;
use ldp_density::exec::{map_reps, map_reps_seq, stream_seed};
use ldp_density::kde::{kde_private, kde_release, KdeConfig, Kernel};
use ldp_density::privacy::PrivacyBudget;

fn one_replication(seed: u64) -> f64 {
    let f = TestDensity::uniform01();
    let budget = PrivacyBudget::single(0.5).unwrap();
    let cfg = KdeConfig::new(0.5, 0.1, Kernel::Epanechnikov, budget).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = f.sample_with(500, &mut rng).unwrap();
    let releases: Vec<_> =
        xs.iter().map(|&x| kde_release(x, &cfg, &mut rng).unwrap()).collect();
    kde_private(&releases).unwrap()
}

fn bench_replication_maps(c: &mut Criterion) {
    let mut group = c.benchmark_group("mc_cell");
    for reps in [64usize, 256] {
        group.bench_with_input(BenchmarkId::new("parallel_default", reps), &reps, |b, &reps| {
            b.iter(|| map_reps(reps, |r| one_replication(stream_seed(1, 0, r as u64))))
        });
        group.bench_with_input(BenchmarkId::new("sequential", reps), &reps, |b, &reps| {
            b.iter(|| map_reps_seq(reps, |r| one_replication(stream_seed(1, 0, r as u64))))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_replication_maps);
criterion_main!(benches);
