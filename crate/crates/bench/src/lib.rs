//! Criterion benchmarks for the encoder, the floorplanner and the laser sweep; see `benches/`.
