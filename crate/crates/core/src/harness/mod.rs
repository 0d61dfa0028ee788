//! Dataset ingestion, parameter selection and the experiment drivers behind
//! the command line.

pub mod bench;
pub mod data;
pub mod eval;
pub mod experiment;
pub mod scenarios;

use crate::fixedpoint::FixedPointError;
use crate::kde::KdeError;
use crate::paillier::PaillierError;
use crate::protocol::ProtocolError;
use thiserror::Error;

pub use bench::{
    bench, fit_fixed_point, paillier_timings, protocol_replay, BenchReport, REFERENCE_ENCRYPT_MS,
};
pub use data::{
    load_csv, prepare, read_csv, scaled_dataset, stratified_folds, stratified_split, write_csv,
    CsvSchema, LabelColumn, MinMaxScaler, Prepared, SplitIndices, Table,
};
pub use eval::{
    accuracy_pct, agreement_pct, cross_validate, Algorithm, CvResult, DistanceMatrix, Hyper,
};
pub use experiment::{
    compare, compare_prepared, prepare_experiment, AlgoResult, ComparisonReport, DatasetSpec,
    ExperimentConfig, ProtocolCheck, ProtocolRun,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("io: {0}")]
    Io(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("row {row}: non-numeric feature {value:?}")]
    NonNumeric { row: usize, value: String },
    #[error("{bad} of {total} rows malformed")]
    Malformed { bad: usize, total: usize },
    #[error("no rows")]
    Empty,
    #[error("a fold has {n} training tuples, fewer than k = {k}")]
    FoldTooSmall { k: usize, n: usize },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Kde(#[from] KdeError),
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
    #[error(transparent)]
    Paillier(#[from] PaillierError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}
