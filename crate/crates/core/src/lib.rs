//! Embedding table combination and placement for recommendation inference.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`] — table/model/memory-hierarchy descriptions, JSON ingestion and
//!   synthetic model generation.
//! * [`cartesian`] — Cartesian-product grouping of tables, row addressing and
//!   materialization.
//! * [`planner`] — placement plans, the cost model, the heuristic planner and
//!   the exhaustive reference planner.
//! * [`simulator`] — closed-form lookup and pipelined-dataflow timing.
//! * [`engine`] — a functional embedding store, lookup-and-concatenate and a
//!   fixed/floating point MLP forward pass.
//!
//! Numeric code in [`engine`] and [`cartesian::materialize`] is generic over
//! [`Scalar`]; concrete aliases for `f32` and `f64` live at the crate root.

#![forbid(unsafe_code)]

pub mod cartesian;
pub mod engine;
pub mod model;
pub mod planner;
pub mod scalar;
pub mod simulator;

pub use cartesian::{CartesianError, CartesianGroup, PhysicalSource, PhysicalTable};
pub use engine::{EmbeddingStore, EngineError, MlpWeights, Precision, Query};
pub use model::{
    ElemBits, MemoryHierarchySpec, ModelSpec, SizeProfile, SpecError, TableId, TableSpec,
};
pub use planner::{CostEstimate, PlacementPlan, PlanError, PlannerConfig};
pub use scalar::Scalar;
pub use simulator::{PipelineConfig, SimulationReport};

/// Embedding store holding single-precision values.
pub type EmbeddingStoreF32 = EmbeddingStore<f32>;
/// Embedding store holding double-precision values.
pub type EmbeddingStoreF64 = EmbeddingStore<f64>;
/// MLP weights in single precision.
pub type MlpWeightsF32 = MlpWeights<f32>;
/// MLP weights in double precision.
pub type MlpWeightsF64 = MlpWeights<f64>;
