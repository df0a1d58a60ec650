//! Benchmark harness behind the `mib` binary.

pub mod harness;

pub use harness::{
    emit_csv, emit_gnuplot, metadata, parse_fractions, radius_for, run_bench, sample_queries,
    to_csv, BagFilter, BenchConfig, BenchError, BenchReport, BenchRow, CSV_HEADER,
};
