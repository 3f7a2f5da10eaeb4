//! Data ingestion, run configuration and output files.

pub mod config;
pub mod data;
pub mod output;

pub use config::{ModelKind, OutputPaths, PhiConfig, RunConfig};
pub use data::{EpochKey, RankingData, TimeUnit};
pub use output::{chain_header, read_chains, write_chains, write_summaries, ChainHeader, PosteriorSummary};
