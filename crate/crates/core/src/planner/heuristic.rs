//! Rule-based search over Cartesian pairings.
//!
//! For an even candidate count `n`, the `n` smallest tables of a candidate
//! pool are paired smallest-with-largest, the result is allocated, and the
//! plan with the lowest lookup latency (then fewest bytes) wins. Up to three
//! pools are searched: all tables; all tables except the ones the uncombined
//! allocation caches on chip; and all except as many as stay cacheable at
//! one round fewer. Each step is linear in the table count and there are at
//! most N/2 steps per pool.

use super::allocate::allocate_to_banks;
use super::plan::{cost, max_bank_tables, CostEstimate, PlacementPlan};
use super::{PlanError, PlannerConfig};
use crate::cartesian::{CartesianGroup, PhysicalTable};
use crate::model::{MemoryHierarchySpec, ModelSpec, TableId};

/// Plan with no products.
pub fn no_cartesian_plan(
    model: &ModelSpec,
    h: &MemoryHierarchySpec,
) -> Result<(PlacementPlan, CostEstimate), PlanError> {
    let tables = model.tables.iter().map(PhysicalTable::single).collect();
    let plan = allocate_to_banks(model, tables, h)?;
    let c = cost(&plan, h);
    Ok((plan, c))
}

/// Physical tables for `pairs`, ordered by smallest member id.
pub(crate) fn physical_with_groups(
    model: &ModelSpec,
    groups: Vec<CartesianGroup>,
) -> Vec<PhysicalTable> {
    let mut grouped = vec![false; model.num_tables()];
    for g in &groups {
        for id in g.members() {
            grouped[id.0] = true;
        }
    }
    let mut out: Vec<PhysicalTable> = model
        .tables
        .iter()
        .filter(|t| !grouped[t.id.0])
        .map(PhysicalTable::single)
        .chain(groups.into_iter().map(PhysicalTable::group))
        .collect();
    out.sort_by_key(PhysicalTable::min_member);
    out
}

fn better(a: &CostEstimate, b: &CostEstimate) -> bool {
    a.lookup_latency_ns < b.lookup_latency_ns
        || (a.lookup_latency_ns == b.lookup_latency_ns && a.total_bytes < b.total_bytes)
}

pub fn heuristic_plan(
    model: &ModelSpec,
    h: &MemoryHierarchySpec,
    cfg: &PlannerConfig,
) -> Result<(PlacementPlan, CostEstimate), PlanError> {
    let mut by_size: Vec<TableId> = model.tables.iter().map(|t| t.id).collect();
    by_size.sort_by_key(|&id| (model.table(id).byte_size(), id));

    let baseline = no_cartesian_plan(model, h);
    let mut pools = vec![0usize];
    if let Ok((plan, c)) = &baseline {
        // Skip what the baseline caches, and what stays cacheable once the
        // round count drops by one and the on-chip bound tightens with it.
        let cached = plan.onchip_count();
        let rounds = c.dram_rounds as usize;
        let per_bank = max_bank_tables(rounds.saturating_sub(1), h, cached);
        let tighter = cached.min(h.onchip_banks * per_bank);
        for skip in [cached, tighter] {
            if skip > 0 && skip < by_size.len() && !pools.contains(&skip) {
                pools.push(skip);
            }
        }
    }
    let mut best = baseline.as_ref().ok().cloned();
    let mut last_err = baseline.err();

    for skip in pools {
        let pool = &by_size[skip..];
        let n_cap = pool.len();
        for n in (2..=n_cap).step_by(2) {
            let candidates = &pool[..n];
            let groups: Vec<CartesianGroup> = (0..n / 2)
                .filter_map(|i| {
                    let a = model.table(candidates[i]);
                    let b = model.table(candidates[n - 1 - i]);
                    CartesianGroup::new(&[a, b], cfg.product_cap_bytes).ok()
                })
                .collect();
            if groups.is_empty() {
                continue;
            }
            let tables = physical_with_groups(model, groups);
            match allocate_to_banks(model, tables, h) {
                Ok(plan) => {
                    let c = cost(&plan, h);
                    if best.as_ref().is_none_or(|(_, bc)| better(&c, bc)) {
                        best = Some((plan, c));
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| PlanError::Infeasible {
            reason: "no allocation found".into(),
        })
    })
}
