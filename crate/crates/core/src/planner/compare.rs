//! Heuristic-versus-exhaustive comparison over seeded random instances.

use serde::{Deserialize, Serialize};

use super::{brute_force_plan, heuristic_plan, PlanError, PlannerConfig};
use crate::model::{random_instance, CapacityRegime};

/// Outcome of comparing both planners at one table count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonStats {
    pub n_tables: usize,
    /// Instances where both planners found a plan.
    pub instances: usize,
    /// Instances neither planner could place.
    pub skipped: usize,
    /// Instances where the heuristic reached the optimal latency.
    pub matches: usize,
    pub mean_gap_ns: f64,
    /// Largest heuristic/optimal latency ratio.
    pub max_ratio: f64,
    /// Instances where the exhaustive plan was worse; always 0 for a correct oracle.
    pub dominance_violations: usize,
}

impl ComparisonStats {
    pub fn match_rate(&self) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            self.matches as f64 / self.instances as f64
        }
    }
}

/// Runs both planners on `random_instance(n_tables, seed, regime)` for each seed.
pub fn compare_planners(
    n_tables: usize,
    seeds: impl IntoIterator<Item = u64>,
    regime: CapacityRegime,
    cfg: &PlannerConfig,
) -> Result<ComparisonStats, PlanError> {
    if n_tables > cfg.brute_force_limit {
        return Err(PlanError::TooManyTables {
            tables: n_tables,
            limit: cfg.brute_force_limit,
        });
    }
    let mut s = ComparisonStats {
        n_tables,
        instances: 0,
        skipped: 0,
        matches: 0,
        mean_gap_ns: 0.0,
        max_ratio: 1.0,
        dominance_violations: 0,
    };
    let mut gap_sum = 0.0;
    for seed in seeds {
        let (model, h) =
            random_instance(n_tables, seed, regime).map_err(|e| PlanError::Invalid {
                reason: e.to_string(),
            })?;
        let (Ok((_, hc)), Ok((_, bc))) = (
            heuristic_plan(&model, &h, cfg),
            brute_force_plan(&model, &h, cfg),
        ) else {
            s.skipped += 1;
            continue;
        };
        s.instances += 1;
        if bc.lookup_latency_ns > hc.lookup_latency_ns {
            s.dominance_violations += 1;
        }
        if hc.lookup_latency_ns == bc.lookup_latency_ns {
            s.matches += 1;
        }
        gap_sum += hc.lookup_latency_ns - bc.lookup_latency_ns;
        s.max_ratio = s.max_ratio.max(hc.lookup_latency_ns / bc.lookup_latency_ns);
    }
    if s.instances > 0 {
        s.mean_gap_ns = gap_sum / s.instances as f64;
    }
    Ok(s)
}
