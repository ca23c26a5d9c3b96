//! Criterion benchmarks for the simulator; see `benches/pipeline.rs`.
//! Run with `cargo bench -p privspi-bench`.
