//! Greedy bank/channel allocation.
//!
//! The smallest tables are cached on chip while each bank stays no slower
//! than the off-chip critical path (added in ascending size, repacked
//! largest-first when an addition does not fit); the rest go largest-first onto the
//! channel holding the fewest tables (then the lightest byte load).

use super::plan::{max_bank_tables, PlacementPlan};
use super::PlanError;
use crate::cartesian::PhysicalTable;
use crate::model::{MemoryHierarchySpec, ModelSpec};

/// Per-bank and per-channel lists of indices into the input table list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Assignment {
    pub onchip: Vec<Vec<usize>>,
    pub dram: Vec<Vec<usize>>,
}

/// Allocates `tables` and assembles a plan for `model`.
pub fn allocate_to_banks(
    model: &ModelSpec,
    tables: Vec<PhysicalTable>,
    h: &MemoryHierarchySpec,
) -> Result<PlacementPlan, PlanError> {
    let a = assign(&tables, h)?;
    Ok(PlacementPlan::assemble(model, tables, a.onchip, a.dram))
}

pub(crate) fn assign(
    tables: &[PhysicalTable],
    h: &MemoryHierarchySpec,
) -> Result<Assignment, PlanError> {
    let m = tables.len();
    let channels = h.offchip_channels();
    let banks = h.onchip_banks;

    let mut ascending: Vec<usize> = (0..m).collect();
    ascending.sort_by_key(|&i| (tables[i].byte_size(), tables[i].min_member()));

    // Lowest round count the table count alone permits.
    let mut rounds = 1usize;
    while m.saturating_sub(banks * max_bank_tables(rounds, h, m)) > rounds * channels {
        rounds += 1;
    }

    let mut last_err = None;
    while rounds <= m.max(1) {
        // Caching beyond this would let the off-chip side drop below `rounds`,
        // shrinking the bound the banks were filled against.
        let onchip_limit = if rounds == 1 {
            m
        } else {
            m.saturating_sub((rounds - 1) * channels + 1)
        };
        let needed = m.saturating_sub(rounds * channels);
        let per_bank = max_bank_tables(rounds, h, m);

        let mut onchip: Vec<Vec<usize>> = vec![Vec::new(); banks];
        let mut bank_load = vec![0u64; banks];
        let mut cached = 0usize;
        for &i in &ascending {
            if cached == onchip_limit {
                break;
            }
            let bytes = tables[i].byte_size();
            match bank_slot(&onchip, &bank_load, bytes, per_bank, h.onchip_bank_capacity) {
                Some(b) => {
                    onchip[b].push(i);
                    bank_load[b] += bytes;
                }
                None => {
                    // Adding in ascending order can strand a larger table;
                    // repack the whole prefix largest-first before giving up.
                    match pack_banks(
                        tables,
                        &ascending[..=cached],
                        banks,
                        per_bank,
                        h.onchip_bank_capacity,
                    ) {
                        Some((packed, load)) => {
                            onchip = packed;
                            bank_load = load;
                        }
                        None => break,
                    }
                }
            }
            cached += 1;
        }
        if cached < needed {
            rounds += 1;
            continue;
        }

        match place_offchip(tables, &ascending[cached..], h) {
            Ok(dram) => return Ok(Assignment { onchip, dram }),
            Err(e) => {
                last_err = Some(e);
                rounds += 1;
            }
        }
    }
    Err(last_err.unwrap_or_else(|| PlanError::Infeasible {
        reason: format!("{m} tables cannot be placed on the hierarchy"),
    }))
}

/// Bank with the fewest tables, then the least load, that can take `bytes`.
fn bank_slot(
    onchip: &[Vec<usize>],
    load: &[u64],
    bytes: u64,
    per_bank: usize,
    capacity: u64,
) -> Option<usize> {
    (0..onchip.len())
        .filter(|&b| onchip[b].len() < per_bank && load[b] + bytes <= capacity)
        .min_by_key(|&b| (onchip[b].len(), load[b], b))
}

/// Largest-first packing of `items` into `banks` banks.
fn pack_banks(
    tables: &[PhysicalTable],
    items: &[usize],
    banks: usize,
    per_bank: usize,
    capacity: u64,
) -> Option<(Vec<Vec<usize>>, Vec<u64>)> {
    let mut onchip: Vec<Vec<usize>> = vec![Vec::new(); banks];
    let mut load = vec![0u64; banks];
    for &i in items.iter().rev() {
        let bytes = tables[i].byte_size();
        let b = bank_slot(&onchip, &load, bytes, per_bank, capacity)?;
        onchip[b].push(i);
        load[b] += bytes;
    }
    Some((onchip, load))
}

fn place_offchip(
    tables: &[PhysicalTable],
    remaining: &[usize],
    h: &MemoryHierarchySpec,
) -> Result<Vec<Vec<usize>>, PlanError> {
    let channels = h.offchip_channels();
    let mut dram: Vec<Vec<usize>> = vec![Vec::new(); channels];
    let mut load = vec![0u64; channels];
    // Largest first; `remaining` is ascending so walk it backwards, keeping
    // lower member ids first among equal sizes.
    let mut order = remaining.to_vec();
    order.sort_by(|&a, &b| {
        tables[b]
            .byte_size()
            .cmp(&tables[a].byte_size())
            .then(tables[a].min_member().cmp(&tables[b].min_member()))
    });
    for i in order {
        let bytes = tables[i].byte_size();
        let ch = (0..channels)
            .filter(|&c| load[c] + bytes <= h.channel_capacity(c))
            .min_by_key(|&c| (dram[c].len(), load[c], c))
            .ok_or_else(|| PlanError::Infeasible {
                reason: format!(
                    "table of {bytes} bytes ({}) fits no remaining channel",
                    tables[i]
                        .members()
                        .iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join(" x ")
                ),
            })?;
        dram[ch].push(i);
        load[ch] += bytes;
    }
    Ok(dram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartesian::DEFAULT_PRODUCT_CAP_BYTES;
    use crate::model::{ElemBits, TableSpec, KIB, MIB};
    use crate::planner::{cost, validate_plan};

    fn model(sizes: &[(u64, u32)]) -> ModelSpec {
        let tables = sizes
            .iter()
            .enumerate()
            .map(|(i, &(r, d))| TableSpec::new(i, r, d, ElemBits::B32).unwrap())
            .collect();
        ModelSpec::new(tables, vec![], 1).unwrap()
    }

    fn singles(m: &ModelSpec) -> Vec<PhysicalTable> {
        m.tables.iter().map(PhysicalTable::single).collect()
    }

    fn offchip_only(channels: usize) -> MemoryHierarchySpec {
        MemoryHierarchySpec {
            hbm_channels: channels,
            ddr_channels: 0,
            onchip_banks: 0,
            ..Default::default()
        }
    }

    #[test]
    fn one_table_per_channel_when_counts_match() {
        let m = model(&vec![(10_000, 16); 34]);
        let h = MemoryHierarchySpec::default();
        let plan = allocate_to_banks(&m, singles(&m), &h).unwrap();
        validate_plan(&m, &h, &plan, DEFAULT_PRODUCT_CAP_BYTES).unwrap();
        assert!(plan.dram_assignment.iter().all(|c| c.len() == 1));
        let c = cost(&plan, &h);
        assert_eq!(c.dram_rounds, 1);
        assert_eq!(c.lookup_latency_ns, h.dram_access_ns);
    }

    #[test]
    fn five_equal_tables_two_channels() {
        let m = model(&[(100, 8); 5]);
        let h = offchip_only(2);
        let plan = allocate_to_banks(&m, singles(&m), &h).unwrap();
        let mut counts: Vec<_> = plan.dram_assignment.iter().map(Vec::len).collect();
        counts.sort();
        assert_eq!(counts, vec![2, 3]);
        assert_eq!(cost(&plan, &h).dram_rounds, 3);
    }

    #[test]
    fn five_equal_tables_two_channels_three_rounds_is_optimal() {
        // Every assignment of 5 tables to 2 channels: max count >= 3.
        let best = (0u32..32)
            .map(|mask| {
                let ones = mask.count_ones() as usize;
                ones.max(5 - ones)
            })
            .min()
            .unwrap();
        assert_eq!(best, 3);
    }

    #[test]
    fn tiny_tables_go_onchip() {
        // 8 tables of 32 rows x 4 dims (512 B) and 39 large ones.
        let mut sizes = vec![(32u64, 4u32); 8];
        sizes.extend(vec![(100_000, 8); 39]);
        let m = model(&sizes);
        let h = MemoryHierarchySpec::default();
        let plan = allocate_to_banks(&m, singles(&m), &h).unwrap();
        validate_plan(&m, &h, &plan, DEFAULT_PRODUCT_CAP_BYTES).unwrap();
        let c = cost(&plan, &h);
        assert_eq!(
            (c.onchip_tables, c.offchip_tables, c.dram_rounds),
            (8, 39, 2)
        );
    }

    #[test]
    fn single_table_prefers_chip_then_channel_zero() {
        let h = MemoryHierarchySpec::default();
        let small = model(&[(10, 4)]);
        let plan = allocate_to_banks(&small, singles(&small), &h).unwrap();
        assert_eq!(plan.onchip_count(), 1);
        let big = model(&[(1000, 64)]);
        let plan = allocate_to_banks(&big, singles(&big), &h).unwrap();
        assert_eq!(plan.dram_assignment[0], vec![0]);
    }

    #[test]
    fn onchip_count_respects_offchip_rounds() {
        // One channel with one big table: a bank may hold at most 3 tables
        // (3 x 100 ns <= 300 ns).
        let mut sizes = vec![(1u64, 1u32); 6];
        sizes.push((1_000_000, 8));
        let m = model(&sizes);
        let h = MemoryHierarchySpec {
            hbm_channels: 1,
            ddr_channels: 0,
            onchip_banks: 1,
            onchip_bank_capacity: 64 * KIB,
            ..Default::default()
        };
        let plan = allocate_to_banks(&m, singles(&m), &h).unwrap();
        validate_plan(&m, &h, &plan, DEFAULT_PRODUCT_CAP_BYTES).unwrap();
        let c = cost(&plan, &h);
        assert!(c.onchip_critical_ns <= c.dram_critical_ns.max(h.dram_access_ns));
        assert_eq!(c.lookup_latency_ns, 600.0);
    }

    #[test]
    fn oversized_table_is_infeasible() {
        let m = model(&[(1 << 30, 64)]);
        let h = MemoryHierarchySpec {
            hbm_channels: 2,
            hbm_channel_capacity: 256 * MIB,
            ddr_channels: 0,
            ..Default::default()
        };
        assert!(matches!(
            allocate_to_banks(&m, singles(&m), &h),
            Err(PlanError::Infeasible { .. })
        ));
    }
}
