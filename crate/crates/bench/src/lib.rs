//! Benchmarks live in `benches/`; run them with `cargo bench -p nes-bench`.

pub use nes_core;
