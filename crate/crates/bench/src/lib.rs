//! Benchmark-only crate; the benchmarks live in `benches/` and exercise the
//! hot kernels of `conical_glimm`.
