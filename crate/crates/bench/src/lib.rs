//! Benchmark-only crate; see `benches/observer.rs`. Run with `cargo bench`.
