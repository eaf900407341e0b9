//! Exhaustive reference planner for small models.
//!
//! Enumerates every grouping of tables into singletons and products (pairs
//! by default, larger groups when `max_group_size > 2`) and, for each,
//! finds a minimum-latency assignment by backtracking over bins with
//! interchangeable empty bins collapsed. Ties in latency go to the grouping
//! with fewer bytes, then to the first grouping in enumeration order.

use super::allocate::Assignment;
use super::heuristic::physical_with_groups;
use super::plan::{cost, onchip_within_bound, CostEstimate, PlacementPlan};
use super::{PlanError, PlannerConfig};
use crate::cartesian::{CartesianGroup, PhysicalTable};
use crate::model::{MemoryHierarchySpec, ModelSpec, TableId};

pub fn brute_force_plan(
    model: &ModelSpec,
    h: &MemoryHierarchySpec,
    cfg: &PlannerConfig,
) -> Result<(PlacementPlan, CostEstimate), PlanError> {
    let n = model.num_tables();
    if n > cfg.brute_force_limit {
        return Err(PlanError::TooManyTables {
            tables: n,
            limit: cfg.brute_force_limit,
        });
    }

    let mut best: Option<(PlacementPlan, CostEstimate)> = None;
    let mut blocks: Vec<Vec<TableId>> = Vec::new();
    let mut used = vec![false; n];
    let max_group = cfg.max_group_size.max(1);
    enumerate_partitions(&mut used, &mut blocks, max_group, &mut |blocks| {
        let mut groups = Vec::new();
        for b in blocks.iter().filter(|b| b.len() > 1) {
            let members: Vec<_> = b.iter().map(|&id| model.table(id)).collect();
            match CartesianGroup::new(&members, cfg.product_cap_bytes) {
                Ok(g) => groups.push(g),
                Err(_) => return,
            }
        }
        let tables = physical_with_groups(model, groups);
        let bytes: u64 = tables.iter().map(PhysicalTable::byte_size).sum();
        if let Some((_, bc)) = &best {
            // Bytes do not depend on the assignment; skip groupings that
            // cannot win even at the best latency seen so far.
            if bytes >= bc.total_bytes && lower_bound_ns(&tables, h, model) >= bc.lookup_latency_ns
            {
                return;
            }
        }
        if let Some(a) = exact_assignment(&tables, h, model.lookups_per_table) {
            let plan = PlacementPlan::assemble(model, tables, a.onchip, a.dram);
            let c = cost(&plan, h);
            let wins = match &best {
                None => true,
                Some((_, bc)) => {
                    c.lookup_latency_ns < bc.lookup_latency_ns
                        || (c.lookup_latency_ns == bc.lookup_latency_ns
                            && c.total_bytes < bc.total_bytes)
                }
            };
            if wins {
                best = Some((plan, c));
            }
        }
    });
    best.ok_or_else(|| PlanError::Infeasible {
        reason: "no grouping admits a feasible assignment".into(),
    })
}

/// Calls `visit` with every set partition of the unused tables whose blocks
/// have at most `max_group` members. Blocks are anchored at their lowest id.
fn enumerate_partitions(
    used: &mut [bool],
    blocks: &mut Vec<Vec<TableId>>,
    max_group: usize,
    visit: &mut dyn FnMut(&[Vec<TableId>]),
) {
    let Some(first) = used.iter().position(|&u| !u) else {
        visit(blocks);
        return;
    };
    used[first] = true;
    blocks.push(vec![TableId(first)]);
    extend_block(used, blocks, first + 1, max_group, visit);
    blocks.pop();
    used[first] = false;
}

fn extend_block(
    used: &mut [bool],
    blocks: &mut Vec<Vec<TableId>>,
    from: usize,
    max_group: usize,
    visit: &mut dyn FnMut(&[Vec<TableId>]),
) {
    // Close the current block here.
    enumerate_partitions(used, blocks, max_group, visit);
    if blocks.last().map_or(0, Vec::len) >= max_group {
        return;
    }
    for j in from..used.len() {
        if used[j] {
            continue;
        }
        used[j] = true;
        blocks.last_mut().expect("open block").push(TableId(j));
        extend_block(used, blocks, j + 1, max_group, visit);
        blocks.last_mut().expect("open block").pop();
        used[j] = false;
    }
}

fn lower_bound_ns(tables: &[PhysicalTable], h: &MemoryHierarchySpec, model: &ModelSpec) -> f64 {
    // Every table costs at least one on-chip access.
    let lpt = model.lookups_per_table as f64;
    if tables.is_empty() {
        return 0.0;
    }
    lpt * h.onchip_access_ns
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BinKind {
    Bank,
    Hbm,
    Ddr,
}

struct Bin {
    kind: BinKind,
    capacity: u64,
    max_count: usize,
    load: u64,
    items: Vec<usize>,
}

/// Minimum-latency assignment of `tables`, or `None` if none exists.
pub(crate) fn exact_assignment(
    tables: &[PhysicalTable],
    h: &MemoryHierarchySpec,
    lookups_per_table: u32,
) -> Option<Assignment> {
    let m = tables.len();
    let lpt = lookups_per_table as f64;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| {
        (
            std::cmp::Reverse(tables[i].byte_size()),
            tables[i].min_member(),
        )
    });

    let mut limits: Vec<(f64, usize, usize)> = Vec::new();
    let max_bank = if h.onchip_banks == 0 { 0 } else { m };
    for bank_max in 0..=max_bank {
        for chan_max in 0..=m {
            if bank_max * h.onchip_banks + chan_max * h.offchip_channels() < m {
                continue;
            }
            if !onchip_within_bound(bank_max, chan_max, lookups_per_table, h) {
                continue;
            }
            let ns = (bank_max as f64 * lpt * h.onchip_access_ns)
                .max(chan_max as f64 * lpt * h.dram_access_ns);
            limits.push((ns, bank_max, chan_max));
        }
    }
    limits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    for &(_, bank_max, chan_max) in &limits {
        let mut bins: Vec<Bin> = (0..h.onchip_banks)
            .map(|_| Bin {
                kind: BinKind::Bank,
                capacity: h.onchip_bank_capacity,
                max_count: bank_max,
                load: 0,
                items: Vec::new(),
            })
            .chain((0..h.offchip_channels()).map(|c| Bin {
                kind: if c < h.hbm_channels {
                    BinKind::Hbm
                } else {
                    BinKind::Ddr
                },
                capacity: h.channel_capacity(c),
                max_count: chan_max,
                load: 0,
                items: Vec::new(),
            }))
            .collect();
        if place(&order, 0, tables, &mut bins, h, lookups_per_table) {
            let onchip = bins[..h.onchip_banks]
                .iter()
                .map(|b| b.items.clone())
                .collect();
            let dram = bins[h.onchip_banks..]
                .iter()
                .map(|b| b.items.clone())
                .collect();
            return Some(Assignment { onchip, dram });
        }
    }
    None
}

fn place(
    order: &[usize],
    k: usize,
    tables: &[PhysicalTable],
    bins: &mut [Bin],
    h: &MemoryHierarchySpec,
    lpt: u32,
) -> bool {
    if k == order.len() {
        let busiest_bank = bins
            .iter()
            .filter(|b| b.kind == BinKind::Bank)
            .map(|b| b.items.len())
            .max()
            .unwrap_or(0);
        let busiest_channel = bins
            .iter()
            .filter(|b| b.kind != BinKind::Bank)
            .map(|b| b.items.len())
            .max()
            .unwrap_or(0);
        return onchip_within_bound(busiest_bank, busiest_channel, lpt, h);
    }
    let i = order[k];
    let bytes = tables[i].byte_size();
    let mut tried_empty = [false; 3];
    for b in 0..bins.len() {
        let bin = &bins[b];
        if bin.items.len() >= bin.max_count || bin.load + bytes > bin.capacity {
            continue;
        }
        if bin.items.is_empty() {
            // Empty bins of one kind are interchangeable.
            let slot = bin.kind as usize;
            if tried_empty[slot] {
                continue;
            }
            tried_empty[slot] = true;
        }
        bins[b].items.push(i);
        bins[b].load += bytes;
        if place(order, k + 1, tables, bins, h, lpt) {
            return true;
        }
        bins[b].items.pop();
        bins[b].load -= bytes;
    }
    false
}
