use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::quant::{quantize_q15, round_f32};
use super::EngineError;
use crate::cartesian::{materialize, PhysicalSource, PhysicalTable};
use crate::model::{ElemBits, ModelSpec, TableId, TableSpec, GIB};
use crate::planner::{ConcatSlice, PlacementPlan};
use crate::scalar::Scalar;

/// Default ceiling on the bytes a store may materialize.
pub const DEFAULT_STORE_CAP_BYTES: u64 = 4 * GIB;

/// Row indices for one query, table-major: table 0's lookups first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub indices: Vec<u64>,
}

impl Query {
    pub fn new(indices: Vec<u64>) -> Self {
        Self { indices }
    }

    pub fn zeros(model: &ModelSpec) -> Self {
        Self::new(vec![
            0;
            model.num_tables() * model.lookups_per_table as usize
        ])
    }

    /// Uniform random query.
    pub fn random(model: &ModelSpec, rng: &mut impl Rng) -> Self {
        let lpt = model.lookups_per_table as usize;
        let indices = model
            .tables
            .iter()
            .flat_map(|t| std::iter::repeat_n(t.rows, lpt))
            .map(|rows| rng.random_range(0..rows))
            .collect();
        Self::new(indices)
    }
}

/// Deterministic contents of one logical table, row-major.
///
/// Values are uniform in [-1, 1) and stored at the table's element width.
pub fn logical_table<T: Scalar>(table: &TableSpec, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(table.id.0 as u64);
    let n = table.rows as usize * table.dim as usize;
    (0..n)
        .map(|_| {
            // Quantize before narrowing, so every scalar type sees the same values.
            let v = rng.random::<f64>() * 2.0 - 1.0;
            T::of(match table.elem_bits {
                ElemBits::B16 => quantize_q15(v),
                ElemBits::B32 => round_f32(v),
            })
        })
        .collect()
}

/// Physical tables materialized for a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore<T> {
    tables: Vec<PhysicalTable>,
    contents: Vec<Vec<T>>,
    /// Per physical table, its members' concat slices in member order.
    slots: Vec<Vec<ConcatSlice>>,
    table_rows: Vec<u64>,
    concat_length: usize,
    lookups_per_table: usize,
}

impl<T: Scalar> EmbeddingStore<T> {
    pub fn build(model: &ModelSpec, plan: &PlacementPlan, seed: u64) -> Result<Self, EngineError> {
        Self::build_with_cap(model, plan, seed, DEFAULT_STORE_CAP_BYTES)
    }

    pub fn build_with_cap(
        model: &ModelSpec,
        plan: &PlacementPlan,
        seed: u64,
        cap_bytes: u64,
    ) -> Result<Self, EngineError> {
        if plan.concat_map.len() != model.num_tables() {
            return Err(EngineError::PlanMismatch(
                "concat map and model disagree on table count".into(),
            ));
        }
        let total: u64 = plan
            .physical_tables
            .iter()
            .map(PhysicalTable::byte_size)
            .sum();
        if total > cap_bytes {
            return Err(EngineError::StoreCap {
                bytes: total,
                cap: cap_bytes,
            });
        }

        let mut contents = Vec::with_capacity(plan.physical_tables.len());
        for p in &plan.physical_tables {
            if let Some(id) = p.members().iter().find(|id| id.0 >= model.num_tables()) {
                return Err(EngineError::PlanMismatch(format!("unknown table {id}")));
            }
            let data = match &p.source {
                PhysicalSource::Single(id) => logical_table(model.table(*id), seed),
                PhysicalSource::Group(g) => {
                    let members: Vec<Vec<T>> = g
                        .members()
                        .iter()
                        .map(|&id| logical_table(model.table(id), seed))
                        .collect();
                    let refs: Vec<&[T]> = members.iter().map(Vec::as_slice).collect();
                    materialize(g, &refs, cap_bytes)?
                }
            };
            contents.push(data);
        }

        let mut slots: Vec<Vec<ConcatSlice>> = plan
            .physical_tables
            .iter()
            .map(|p| Vec::with_capacity(p.members().len()))
            .collect();
        for s in &plan.concat_map {
            slots
                .get_mut(s.physical)
                .ok_or_else(|| EngineError::PlanMismatch(format!("slice for {} dangles", s.table)))?
                .push(*s);
        }
        for (p, list) in plan.physical_tables.iter().zip(slots.iter_mut()) {
            let order = p.members();
            if list.len() != order.len() {
                return Err(EngineError::PlanMismatch(
                    "concat map misses a member".into(),
                ));
            }
            list.sort_by_key(|s| order.iter().position(|&m| m == s.table));
        }

        Ok(Self {
            tables: plan.physical_tables.clone(),
            contents,
            slots,
            table_rows: model.tables.iter().map(|t| t.rows).collect(),
            concat_length: model.concat_length(),
            lookups_per_table: model.lookups_per_table as usize,
        })
    }

    pub fn physical_contents(&self, physical: usize) -> &[T] {
        &self.contents[physical]
    }

    pub fn concat_length(&self) -> usize {
        self.concat_length
    }

    fn check_query(&self, query: &Query) -> Result<(), EngineError> {
        let expected = self.table_rows.len() * self.lookups_per_table;
        if query.indices.len() != expected {
            return Err(EngineError::QueryLength {
                expected,
                got: query.indices.len(),
            });
        }
        for (k, &idx) in query.indices.iter().enumerate() {
            let t = k / self.lookups_per_table;
            if idx >= self.table_rows[t] {
                return Err(EngineError::IndexOutOfRange {
                    table: TableId(t),
                    index: idx,
                    rows: self.table_rows[t],
                });
            }
        }
        Ok(())
    }

    /// Physical row holding lookup `j` of every member of table `p`.
    fn physical_row(&self, p: usize, j: usize, query: &Query) -> u64 {
        let idx = |id: TableId| query.indices[id.0 * self.lookups_per_table + j];
        match &self.tables[p].source {
            PhysicalSource::Single(id) => idx(*id),
            PhysicalSource::Group(g) => {
                let digits: Vec<u64> = g.members().iter().map(|&id| idx(id)).collect();
                g.product_index(&digits).expect("query indices checked")
            }
        }
    }

    fn gather_physical(&self, p: usize, query: &Query) -> Vec<(usize, &[T])> {
        let width = self.tables[p].dim as usize;
        let mut out = Vec::with_capacity(self.slots[p].len() * self.lookups_per_table);
        for j in 0..self.lookups_per_table {
            let row = self.physical_row(p, j, query) as usize;
            let base = row * width;
            for s in &self.slots[p] {
                let start = base + s.column_offset;
                out.push((
                    s.output_offset + j * s.len,
                    &self.contents[p][start..start + s.len],
                ));
            }
        }
        out
    }

    /// Looks up every table and concatenates in table order.
    pub fn lookup_concat(&self, query: &Query) -> Result<Vec<T>, EngineError> {
        self.check_query(query)?;
        let mut out = vec![T::zero(); self.concat_length];
        for p in 0..self.tables.len() {
            for (offset, values) in self.gather_physical(p, query) {
                out[offset..offset + values.len()].copy_from_slice(values);
            }
        }
        Ok(out)
    }

    /// Same as [`lookup_concat`](Self::lookup_concat), reading physical
    /// tables concurrently. Output is assembled by offset, so it does not
    /// depend on completion order.
    pub fn lookup_concat_parallel(&self, query: &Query) -> Result<Vec<T>, EngineError> {
        self.check_query(query)?;
        let pieces: Vec<Vec<(usize, &[T])>> = (0..self.tables.len())
            .into_par_iter()
            .map(|p| self.gather_physical(p, query))
            .collect();
        let mut out = vec![T::zero(); self.concat_length];
        for (offset, values) in pieces.into_iter().flatten() {
            out[offset..offset + values.len()].copy_from_slice(values);
        }
        Ok(out)
    }

    /// Row `row` of original table `table`, read back from physical storage.
    pub fn logical_row(&self, table: TableId, row: u64) -> Result<Vec<T>, EngineError> {
        let rows = *self
            .table_rows
            .get(table.0)
            .ok_or_else(|| EngineError::PlanMismatch(format!("unknown table {table}")))?;
        if row >= rows {
            return Err(EngineError::IndexOutOfRange {
                table,
                index: row,
                rows,
            });
        }
        for (p, slots) in self.slots.iter().enumerate() {
            let Some(slot) = slots.iter().find(|s| s.table == table) else {
                continue;
            };
            let flat = match &self.tables[p].source {
                PhysicalSource::Single(_) => row,
                PhysicalSource::Group(g) => {
                    // Any row of the other members will do; take 0.
                    let digits: Vec<u64> = g
                        .members()
                        .iter()
                        .map(|&m| if m == table { row } else { 0 })
                        .collect();
                    g.product_index(&digits)?
                }
            };
            let start = flat as usize * self.tables[p].dim as usize + slot.column_offset;
            return Ok(self.contents[p][start..start + slot.len].to_vec());
        }
        Err(EngineError::PlanMismatch(format!("{table} is not stored")))
    }
}
