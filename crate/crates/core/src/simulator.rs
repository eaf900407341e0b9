//! Closed-form timing for the lookup stage and the pipelined dataflow.
//!
//! Items stream through the stages one at a time; once the pipe is full a
//! new item completes every `max stage` nanoseconds, so
//! `makespan(k) = sum(stages) + (k - 1) * max(stages)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MemoryHierarchySpec, ModelSpec};
use crate::planner::{cost, PlacementPlan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("item count must be at least 1")]
    NoItems,
    #[error("stage `{name}` has non-positive time {ns} ns")]
    NonPositiveStage { name: String, ns: f64 },
}

/// Stage timing parameters.
///
/// Defaults: 4096 parallel MACs at 0.2 GHz and a one-element-per-cycle
/// broadcast/gather path. With these, the 47-table model (352-wide input,
/// hidden layers 1024/512/256) lands near 20 us end to end and the slowest
/// stage is the 1024-element broadcast/gather at about 5.1 us.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub parallel_macs: u32,
    pub clock_ghz: f64,
    /// Elements moved per cycle when broadcasting inputs or gathering results.
    pub io_elems_per_cycle: f64,
    /// Fixed cost added to every lookup (controller, FIFO, concat).
    pub lookup_overhead_ns: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            parallel_macs: 4096,
            clock_ghz: 0.2,
            io_elems_per_cycle: 1.0,
            lookup_overhead_ns: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub ns: f64,
}

impl Stage {
    pub fn new(name: impl Into<String>, ns: f64) -> Self {
        Self {
            name: name.into(),
            ns,
        }
    }
}

impl PipelineConfig {
    fn io_ns(&self, elems: u32) -> f64 {
        elems as f64 / (self.io_elems_per_cycle * self.clock_ghz)
    }

    fn gemm_ns(&self, in_dim: u32, out_dim: u32) -> f64 {
        (in_dim as f64 * out_dim as f64) / (self.parallel_macs as f64 * self.clock_ghz)
    }

    /// `[lookup] ++ [broadcast, gemm, gather] per hidden layer ++ [output]`.
    pub fn stages(&self, model: &ModelSpec, lookup_latency_ns: f64) -> Vec<Stage> {
        let mut stages = vec![Stage::new(
            "lookup",
            lookup_latency_ns + self.lookup_overhead_ns,
        )];
        let mut in_dim = model.concat_length() as u32;
        for (l, &out_dim) in model.hidden_dims.iter().enumerate() {
            stages.push(Stage::new(format!("fc{l}.broadcast"), self.io_ns(in_dim)));
            stages.push(Stage::new(
                format!("fc{l}.gemm"),
                self.gemm_ns(in_dim, out_dim),
            ));
            stages.push(Stage::new(format!("fc{l}.gather"), self.io_ns(out_dim)));
            in_dim = out_dim;
        }
        stages.push(Stage::new("output", self.gemm_ns(in_dim, 1)));
        stages
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub ns: f64,
    /// Fraction of each steady-state cycle the stage is busy.
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub stages: Vec<StageReport>,
    pub single_item_latency_ns: f64,
    pub max_stage_ns: f64,
    pub steady_throughput_items_per_s: f64,
    pub item_count: u64,
    pub makespan_ns: f64,
}

impl SimulationReport {
    pub fn makespan_for(&self, items: u64) -> f64 {
        if items == 0 {
            return 0.0;
        }
        self.single_item_latency_ns + (items - 1) as f64 * self.max_stage_ns
    }

    /// `stage,ns,utilization` rows.
    pub fn stages_csv(&self) -> String {
        let mut out = String::from("stage,ns,utilization\n");
        for s in &self.stages {
            out.push_str(&format!("{},{},{}\n", s.name, s.ns, s.utilization));
        }
        out
    }
}

/// Evaluates the pipeline formulas over explicit stage times.
pub fn simulate_stages(
    stages: &[Stage],
    item_count: u64,
) -> Result<SimulationReport, SimulationError> {
    if item_count == 0 {
        return Err(SimulationError::NoItems);
    }
    if let Some(s) = stages.iter().find(|s| !(s.ns > 0.0 && s.ns.is_finite())) {
        return Err(SimulationError::NonPositiveStage {
            name: s.name.clone(),
            ns: s.ns,
        });
    }
    let total: f64 = stages.iter().map(|s| s.ns).sum();
    let max = stages.iter().map(|s| s.ns).fold(0.0, f64::max);
    let mut report = SimulationReport {
        stages: stages
            .iter()
            .map(|s| StageReport {
                name: s.name.clone(),
                ns: s.ns,
                utilization: if max > 0.0 { s.ns / max } else { 0.0 },
            })
            .collect(),
        single_item_latency_ns: total,
        max_stage_ns: max,
        steady_throughput_items_per_s: if max > 0.0 { 1e9 / max } else { 0.0 },
        item_count,
        makespan_ns: 0.0,
    };
    report.makespan_ns = report.makespan_for(item_count);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookupStats {
    pub query_count: u64,
    pub dram_rounds: u64,
    pub per_query_ns: f64,
    /// Back-to-back queries with no overlap.
    pub unpipelined_total_ns: f64,
}

/// Lookup-stage latency of `plan`; channels work in parallel, accesses on
/// one channel or bank are sequential.
pub fn simulate_lookup(
    plan: &PlacementPlan,
    h: &MemoryHierarchySpec,
    query_count: u64,
    overhead_ns: f64,
) -> LookupStats {
    let c = cost(plan, h);
    let per_query_ns = c.lookup_latency_ns + overhead_ns;
    LookupStats {
        query_count,
        dram_rounds: c.dram_rounds,
        per_query_ns,
        unpipelined_total_ns: query_count as f64 * per_query_ns,
    }
}

pub fn simulate_pipeline(
    model: &ModelSpec,
    plan: &PlacementPlan,
    h: &MemoryHierarchySpec,
    cfg: &PipelineConfig,
    item_count: u64,
) -> Result<SimulationReport, SimulationError> {
    let lookup = cost(plan, h).lookup_latency_ns;
    simulate_stages(&cfg.stages(model, lookup), item_count)
}
