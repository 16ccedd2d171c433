//! Command-line plumbing: configuration, file formats, chain archives,
//! replicated experiments and the timing benchmark.

pub mod archive;
pub mod benchmark;
pub mod config;
pub mod experiment;
pub mod io;

pub use archive::{load_chain, save_chain};
pub use benchmark::{benchmark, benchmark_csv, BenchmarkRow, BenchmarkSpec};
pub use config::{DataSource, ExperimentConfig, Method, NetworkKind, Overrides, ScoreSource};
pub use experiment::{run_experiment, ExperimentReport, WORKERS_ENV};
pub use io::{ingest_csv, read_edges_csv};
