//! Table combination and placement planning.

mod allocate;
mod brute_force;
mod compare;
mod heuristic;
mod plan;

use thiserror::Error;

pub use allocate::allocate_to_banks;
pub use brute_force::brute_force_plan;
pub use compare::{compare_planners, ComparisonStats};
pub use heuristic::{heuristic_plan, no_cartesian_plan};
pub use plan::{
    cost, onchip_within_bound, validate_plan, ConcatSlice, CostEstimate, Location, PlacementPlan,
    PlanDocument,
};

use crate::cartesian::DEFAULT_PRODUCT_CAP_BYTES;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannerConfig {
    /// Products larger than this are never formed.
    pub product_cap_bytes: u64,
    /// Largest model the exhaustive planner accepts.
    pub brute_force_limit: usize,
    /// Largest group the exhaustive planner forms; the heuristic always uses pairs.
    pub max_group_size: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            product_cap_bytes: DEFAULT_PRODUCT_CAP_BYTES,
            brute_force_limit: 8,
            max_group_size: 2,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("infeasible allocation: {reason}")]
    Infeasible { reason: String },
    #[error("exhaustive search refuses {tables} tables (limit {limit})")]
    TooManyTables { tables: usize, limit: usize },
    #[error("invalid plan: {reason}")]
    Invalid { reason: String },
    #[error("{location} holds {bytes} bytes, capacity {capacity}")]
    Capacity {
        location: String,
        bytes: u64,
        capacity: u64,
    },
    #[error("on-chip bank {bank} takes {bank_ns} ns, above the off-chip bound of {bound_ns} ns")]
    OnChipBound {
        bank: usize,
        bank_ns: f64,
        bound_ns: f64,
    },
}
