//! Replication execution and seed discipline.
//!
//! Every Monte Carlo replication derives its own RNG seed from
//! `(base_seed, cell, rep)` through a splitmix64 chain, so parallel workers
//! never share a stream and the map over replications is order-independent.
//! Results are collected positionally, which keeps aggregation (and any CSV
//! derived from it) byte-identical between the rayon and sequential builds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// splitmix64 finalizer; good avalanche behaviour for seed derivation.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for replication `rep` of grid cell `cell` under `base_seed`.
pub fn stream_seed(base_seed: u64, cell: u64, rep: u64) -> u64 {
    let h = splitmix64(base_seed);
    let h = splitmix64(h ^ cell.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    splitmix64(h ^ rep)
}

/// Map `f` over `0..reps`, in parallel when the `parallel` feature is on.
pub fn map_reps<T, F>(reps: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..reps).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_reps_seq(reps, f)
    }
}

/// Sequential fallback, always available (used by the benchmark suite as the
/// single-core baseline).
pub fn map_reps_seq<T, F>(reps: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..reps).map(f).collect()
}
