//! Benchmarks for the coexistence toolkit live under `benches/`.
