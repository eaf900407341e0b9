//! Functional reference: materialized tables, lookup and the top MLP.

mod mlp;
mod quant;
mod store;

use thiserror::Error;

pub use mlp::{logistic, mlp_forward, Activation, DenseLayer, MlpWeights, Precision, PreparedMlp};
pub use quant::{quantize_q15, round_f32};
pub use store::{logical_table, EmbeddingStore, Query, DEFAULT_STORE_CAP_BYTES};

use crate::cartesian::CartesianError;
use crate::model::TableId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("{what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("query has {got} indices, expected {expected}")]
    QueryLength { expected: usize, got: usize },
    #[error("index {index} out of range for {table} with {rows} rows")]
    IndexOutOfRange {
        table: TableId,
        index: u64,
        rows: u64,
    },
    #[error("store needs {bytes} bytes, cap is {cap}")]
    StoreCap { bytes: u64, cap: u64 },
    #[error("plan does not match model: {0}")]
    PlanMismatch(String),
    #[error(transparent)]
    Cartesian(#[from] CartesianError),
}
