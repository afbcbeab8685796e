//! Experiment orchestration: load a run configuration, simulate one cube,
//! run each requested DIM method on every trade, and write CSV, plot data
//! and a cost/accuracy report.

mod config;
mod report;
mod run;

pub use config::{
    FixedRate, MarketConfig, MethodsConfig, OutputConfig, Overrides, RunConfig, SimulationConfig,
    TradeConfig, MONEYNESS_OFFSET,
};
pub use report::{compare, RunSummary, SummaryRow};
pub use run::{execute, resolve_trade, run, write_outputs, MethodOutcome, RunOutcome, TradeOutcome};

use std::path::PathBuf;

use thiserror::Error;

use crate::dim::{DimError, Method};
use crate::rfem::ModelError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {}: {message}", path.display())]
    Csv { path: PathBuf, message: String },
    #[error("simulation failed: {0}")]
    Simulation(#[from] ModelError),
    #[error("method {method} failed on trade {trade}: {source}")]
    Method {
        method: Method,
        trade: String,
        #[source]
        source: DimError,
    },
    #[error("trade {trade}: {message}")]
    Trade { trade: String, message: String },
    #[error("cannot build thread pool: {0}")]
    ThreadPool(String),
}
