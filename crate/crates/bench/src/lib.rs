//! Criterion benchmarks for the arithmetic kernels and the selftest; see `benches/`.
