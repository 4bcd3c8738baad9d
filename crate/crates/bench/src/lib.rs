//! Criterion benchmarks for the core evaluators live in `benches/`.
