//! Criterion benchmarks for geoboost live under `benches/`.
