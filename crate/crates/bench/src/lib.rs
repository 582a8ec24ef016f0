//! Benchmarks of the engine live in `benches/engine.rs`; run them with `cargo bench -p aptc-bench`.
