//! Criterion benchmarks for the `qmimo` crate; see `benches/`.
