//! Benchmark-only package; see `benches/core_benches.rs`.
