//! Criterion benchmarks for `simcal-core`. See `benches/`.
