//! Criterion benchmarks for panelforge; see `benches/`.
