//! Criterion benchmarks for the numerical kernels of `aseplab`; see `benches/`.
