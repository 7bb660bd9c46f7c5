//! Criterion benchmarks for mesh propagation and annealing runs live under `benches/`.
