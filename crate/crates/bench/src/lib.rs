//! Benchmarks live under `benches/`; run them with `cargo bench -p logdet-dspg-bench`.
