//! Benchmarks live in `benches/`; run them with `cargo bench -p srwlab-bench`.

/// Horizons used by the walk and tally benchmarks.
pub const BENCH_HORIZONS: [u64; 2] = [10_000, 100_000];
