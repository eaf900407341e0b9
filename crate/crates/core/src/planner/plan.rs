use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::cartesian::{CartesianGroup, PhysicalSource, PhysicalTable, PhysicalTableSummary};
use crate::model::{MemoryHierarchySpec, ModelSpec, TableId};

/// Where one original table's vector lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcatSlice {
    pub table: TableId,
    /// Index into [`PlacementPlan::physical_tables`].
    pub physical: usize,
    /// First column of this table inside a physical row.
    pub column_offset: usize,
    /// First output column of this table's block of looked-up vectors.
    pub output_offset: usize,
    /// Embedding dimension; each lookup occupies `len` output columns.
    pub len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    OnChip(usize),
    OffChip(usize),
}

/// Tables (original or combined) assigned to on-chip banks and off-chip channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementPlan {
    pub physical_tables: Vec<PhysicalTable>,
    /// Bank index to physical-table indices.
    pub onchip_assignment: Vec<Vec<usize>>,
    /// Unified channel index (HBM first, then DDR) to physical-table indices.
    pub dram_assignment: Vec<Vec<usize>>,
    pub concat_map: Vec<ConcatSlice>,
    pub lookups_per_table: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    /// Sequential off-chip accesses on the busiest channel per query.
    pub dram_rounds: u64,
    pub onchip_critical_ns: f64,
    pub dram_critical_ns: f64,
    pub lookup_latency_ns: f64,
    pub total_bytes: u64,
    pub original_bytes: u64,
    pub overhead_ratio: f64,
    pub physical_tables: usize,
    pub onchip_tables: usize,
    pub offchip_tables: usize,
}

/// An on-chip bank holding `bank_tables` is acceptable when it is no slower
/// than the off-chip critical path, itself never taken below one access.
pub fn onchip_within_bound(
    bank_tables: usize,
    busiest_channel_tables: usize,
    lookups_per_table: u32,
    h: &MemoryHierarchySpec,
) -> bool {
    let lpt = lookups_per_table as f64;
    let bank_ns = bank_tables as f64 * lpt * h.onchip_access_ns;
    let bound_ns = busiest_channel_tables.max(1) as f64 * lpt * h.dram_access_ns;
    bank_ns <= bound_ns
}

/// Largest per-bank table count allowed when the busiest channel holds
/// `channel_tables` tables.
pub(crate) fn max_bank_tables(channel_tables: usize, h: &MemoryHierarchySpec, cap: usize) -> usize {
    let est = (channel_tables.max(1) as f64 * h.dram_access_ns / h.onchip_access_ns).floor();
    let mut c = if est.is_finite() {
        (est as usize).min(cap)
    } else {
        cap
    };
    while c > 0 && !onchip_within_bound(c, channel_tables, 1, h) {
        c -= 1;
    }
    while c < cap && onchip_within_bound(c + 1, channel_tables, 1, h) {
        c += 1;
    }
    c
}

impl PlacementPlan {
    /// Builds the concat map for `physical_tables` and wraps up the assignment.
    pub fn assemble(
        model: &ModelSpec,
        physical_tables: Vec<PhysicalTable>,
        onchip_assignment: Vec<Vec<usize>>,
        dram_assignment: Vec<Vec<usize>>,
    ) -> Self {
        let mut owner: Vec<Option<(usize, usize)>> = vec![None; model.num_tables()];
        for (pi, p) in physical_tables.iter().enumerate() {
            match &p.source {
                PhysicalSource::Single(id) => owner[id.0] = Some((pi, 0)),
                PhysicalSource::Group(g) => {
                    for (k, id) in g.members().iter().enumerate() {
                        owner[id.0] = Some((pi, g.member_column_offset(k)));
                    }
                }
            }
        }
        let concat_map = model
            .tables
            .iter()
            .map(|t| {
                let (physical, column_offset) =
                    owner[t.id.0].expect("every table is stored in some physical table");
                ConcatSlice {
                    table: t.id,
                    physical,
                    column_offset,
                    output_offset: model.concat_offset(t.id),
                    len: t.dim as usize,
                }
            })
            .collect();
        Self {
            physical_tables,
            onchip_assignment,
            dram_assignment,
            concat_map,
            lookups_per_table: model.lookups_per_table,
        }
    }

    pub fn groups(&self) -> impl Iterator<Item = &CartesianGroup> {
        self.physical_tables.iter().filter_map(|p| match &p.source {
            PhysicalSource::Group(g) => Some(g),
            PhysicalSource::Single(_) => None,
        })
    }

    /// Two-member groups as `(lower id, higher id)`.
    pub fn cartesian_pairs(&self) -> Vec<(TableId, TableId)> {
        let mut pairs: Vec<_> = self
            .groups()
            .filter(|g| g.members().len() == 2)
            .map(|g| {
                let (a, b) = (g.members()[0], g.members()[1]);
                (a.min(b), a.max(b))
            })
            .collect();
        pairs.sort();
        pairs
    }

    pub fn location_of(&self, physical: usize) -> Option<Location> {
        for (b, list) in self.onchip_assignment.iter().enumerate() {
            if list.contains(&physical) {
                return Some(Location::OnChip(b));
            }
        }
        for (c, list) in self.dram_assignment.iter().enumerate() {
            if list.contains(&physical) {
                return Some(Location::OffChip(c));
            }
        }
        None
    }

    pub fn onchip_count(&self) -> usize {
        self.onchip_assignment.iter().map(Vec::len).sum()
    }

    pub fn offchip_count(&self) -> usize {
        self.dram_assignment.iter().map(Vec::len).sum()
    }

    pub fn busiest_channel_tables(&self) -> usize {
        self.dram_assignment.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn busiest_bank_tables(&self) -> usize {
        self.onchip_assignment
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0)
    }
}

/// Evaluates the lookup cost of a plan.
pub fn cost(plan: &PlacementPlan, h: &MemoryHierarchySpec) -> CostEstimate {
    let lpt = plan.lookups_per_table as u64;
    let dram_rounds = plan.busiest_channel_tables() as u64 * lpt;
    let onchip_critical_ns = plan
        .onchip_assignment
        .iter()
        .map(|bank| (bank.len() as u64 * lpt) as f64 * h.onchip_access_ns)
        .fold(0.0, f64::max);
    let dram_critical_ns = dram_rounds as f64 * h.dram_access_ns;
    let total_bytes: u64 = plan
        .physical_tables
        .iter()
        .map(PhysicalTable::byte_size)
        .sum();
    let original_bytes: u64 = plan
        .physical_tables
        .iter()
        .map(|p| match &p.source {
            PhysicalSource::Single(_) => p.byte_size(),
            PhysicalSource::Group(g) => g
                .member_rows()
                .iter()
                .zip(g.member_dims())
                .map(|(&r, &d)| r * d as u64 * g.elem_bits().bytes())
                .sum(),
        })
        .sum();
    CostEstimate {
        dram_rounds,
        onchip_critical_ns,
        dram_critical_ns,
        lookup_latency_ns: onchip_critical_ns.max(dram_critical_ns),
        total_bytes,
        original_bytes,
        overhead_ratio: if original_bytes == 0 {
            1.0
        } else {
            total_bytes as f64 / original_bytes as f64
        },
        physical_tables: plan.physical_tables.len(),
        onchip_tables: plan.onchip_count(),
        offchip_tables: plan.offchip_count(),
    }
}

fn invalid(reason: impl Into<String>) -> PlanError {
    PlanError::Invalid {
        reason: reason.into(),
    }
}

/// Checks coverage, capacities, the concat map and the on-chip latency bound.
pub fn validate_plan(
    model: &ModelSpec,
    h: &MemoryHierarchySpec,
    plan: &PlacementPlan,
    product_cap_bytes: u64,
) -> Result<(), PlanError> {
    if plan.onchip_assignment.len() != h.onchip_banks {
        return Err(invalid(format!(
            "plan has {} on-chip banks, hierarchy has {}",
            plan.onchip_assignment.len(),
            h.onchip_banks
        )));
    }
    if plan.dram_assignment.len() != h.offchip_channels() {
        return Err(invalid(format!(
            "plan has {} off-chip channels, hierarchy has {}",
            plan.dram_assignment.len(),
            h.offchip_channels()
        )));
    }
    if plan.lookups_per_table != model.lookups_per_table {
        return Err(invalid("lookups_per_table differs from the model"));
    }

    // Physical tables agree with the model and cover each original once.
    let mut covered = vec![0usize; model.num_tables()];
    for (pi, p) in plan.physical_tables.iter().enumerate() {
        for id in p.members() {
            if id.0 >= model.num_tables() {
                return Err(invalid(format!(
                    "physical table {pi} references unknown {id}"
                )));
            }
            covered[id.0] += 1;
        }
        match &p.source {
            PhysicalSource::Single(id) => {
                let t = model.table(*id);
                if (p.rows, p.dim, p.elem_bits) != (t.rows, t.dim, t.elem_bits) {
                    return Err(invalid(format!("physical table {pi} does not match {id}")));
                }
            }
            PhysicalSource::Group(g) => {
                let members: Vec<_> = g.members().iter().map(|&id| model.table(id)).collect();
                let rebuilt = CartesianGroup::new(&members, product_cap_bytes)
                    .map_err(|e| invalid(format!("physical table {pi}: {e}")))?;
                if &rebuilt != g || p != &PhysicalTable::group(rebuilt) {
                    return Err(invalid(format!("physical table {pi} is inconsistent")));
                }
            }
        }
    }
    if let Some(i) = covered.iter().position(|&c| c != 1) {
        return Err(invalid(format!(
            "table t{i} is stored {} times, expected once",
            covered[i]
        )));
    }

    let mut placed = vec![0usize; plan.physical_tables.len()];
    let bins = plan
        .onchip_assignment
        .iter()
        .map(|b| (b, h.onchip_bank_capacity, "bank"))
        .chain(
            plan.dram_assignment
                .iter()
                .enumerate()
                .map(|(c, l)| (l, h.channel_capacity(c), "channel")),
        );
    for (i, (list, capacity, kind)) in bins.enumerate() {
        let mut load = 0u64;
        for &pi in list {
            let p = plan
                .physical_tables
                .get(pi)
                .ok_or_else(|| invalid(format!("{kind} references missing physical table {pi}")))?;
            placed[pi] += 1;
            load = load.saturating_add(p.byte_size());
        }
        if load > capacity {
            return Err(PlanError::Capacity {
                location: format!(
                    "{kind} {}",
                    if kind == "bank" {
                        i
                    } else {
                        i - h.onchip_banks
                    }
                ),
                bytes: load,
                capacity,
            });
        }
    }
    if let Some(pi) = placed.iter().position(|&c| c != 1) {
        return Err(invalid(format!(
            "physical table {pi} is placed {} times, expected once",
            placed[pi]
        )));
    }

    // Concat map tiles the output in table order.
    if plan.concat_map.len() != model.num_tables() {
        return Err(invalid("concat map must have one slice per table"));
    }
    let mut next = 0usize;
    for (i, s) in plan.concat_map.iter().enumerate() {
        let t = &model.tables[i];
        if s.table != t.id || s.len != t.dim as usize || s.output_offset != next {
            return Err(invalid(format!(
                "concat slice {i} does not tile the output"
            )));
        }
        let p = plan
            .physical_tables
            .get(s.physical)
            .ok_or_else(|| invalid(format!("concat slice {i} points at a missing table")))?;
        let expected_col = match &p.source {
            PhysicalSource::Single(id) if *id == t.id => Some(0),
            PhysicalSource::Group(g) => g.position(t.id).map(|k| g.member_column_offset(k)),
            PhysicalSource::Single(_) => None,
        };
        if expected_col != Some(s.column_offset) {
            return Err(invalid(format!(
                "concat slice {i} has the wrong column offset"
            )));
        }
        next += s.len * model.lookups_per_table as usize;
    }
    if next != model.concat_length() {
        return Err(invalid("concat map does not cover the full output"));
    }

    let busiest = plan.busiest_channel_tables();
    for (b, bank) in plan.onchip_assignment.iter().enumerate() {
        if !onchip_within_bound(bank.len(), busiest, plan.lookups_per_table, h) {
            let lpt = plan.lookups_per_table as f64;
            return Err(PlanError::OnChipBound {
                bank: b,
                bank_ns: bank.len() as f64 * lpt * h.onchip_access_ns,
                bound_ns: busiest.max(1) as f64 * lpt * h.dram_access_ns,
            });
        }
    }
    Ok(())
}

/// JSON form of a plan plus its cost. Keys serialize in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub cartesian_pairs: Vec<(TableId, TableId)>,
    pub physical_tables: Vec<PhysicalTableSummary>,
    pub onchip_assignment: BTreeMap<usize, Vec<usize>>,
    pub dram_assignment: BTreeMap<usize, Vec<usize>>,
    pub concat_map: Vec<ConcatSlice>,
    pub cost: CostEstimate,
}

impl PlanDocument {
    pub fn new(plan: &PlacementPlan, cost: &CostEstimate) -> Self {
        Self {
            cartesian_pairs: plan.cartesian_pairs(),
            physical_tables: plan.physical_tables.iter().map(Into::into).collect(),
            onchip_assignment: plan.onchip_assignment.iter().cloned().enumerate().collect(),
            dram_assignment: plan.dram_assignment.iter().cloned().enumerate().collect(),
            concat_map: plan.concat_map.clone(),
            cost: *cost,
        }
    }

    /// Rebuilds and validates a plan against `model` and `h`.
    pub fn to_plan(
        &self,
        model: &ModelSpec,
        h: &MemoryHierarchySpec,
        product_cap_bytes: u64,
    ) -> Result<PlacementPlan, PlanError> {
        let mut physical = Vec::with_capacity(self.physical_tables.len());
        for (pi, s) in self.physical_tables.iter().enumerate() {
            if let Some(id) = s.members.iter().find(|id| id.0 >= model.num_tables()) {
                return Err(invalid(format!(
                    "physical table {pi} references unknown {id}"
                )));
            }
            let p = match s.members.as_slice() {
                [] => return Err(invalid(format!("physical table {pi} has no members"))),
                [id] => PhysicalTable::single(model.table(*id)),
                ids => {
                    let members: Vec<_> = ids.iter().map(|&id| model.table(id)).collect();
                    let g = CartesianGroup::new(&members, product_cap_bytes)
                        .map_err(|e| invalid(format!("physical table {pi}: {e}")))?;
                    PhysicalTable::group(g)
                }
            };
            physical.push(p);
        }
        let dense = |m: &BTreeMap<usize, Vec<usize>>, n: usize, kind: &str| {
            if m.keys().any(|&k| k >= n) {
                return Err(invalid(format!("{kind} index out of range")));
            }
            Ok((0..n)
                .map(|i| m.get(&i).cloned().unwrap_or_default())
                .collect::<Vec<_>>())
        };
        let plan = PlacementPlan::assemble(
            model,
            physical,
            dense(&self.onchip_assignment, h.onchip_banks, "bank")?,
            dense(&self.dram_assignment, h.offchip_channels(), "channel")?,
        );
        if plan.concat_map != self.concat_map {
            return Err(invalid("concat map does not match the physical tables"));
        }
        validate_plan(model, h, &plan, product_cap_bytes)?;
        Ok(plan)
    }
}
