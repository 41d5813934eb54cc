//! Criterion benchmarks for the `rkhs-radon` crate; see `benches/`.
