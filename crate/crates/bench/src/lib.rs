//! Criterion benchmarks for the simulator and the network kernels. See `benches/`.
