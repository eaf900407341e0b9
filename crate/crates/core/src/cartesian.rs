//! Cartesian products of embedding tables.
//!
//! A group of tables `A × B` is stored as one physical table whose row
//! `i_a * rows_b + i_b` is `concat(A[i_a], B[i_b])`, so a single access
//! returns every member's vector. Members are ordered largest first (ties by
//! lower id); the first member is the most significant digit of the
//! mixed-radix row index.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ElemBits, TableId, TableSpec, MIB};
use crate::scalar::Scalar;

/// Default ceiling on a materialized product: one HBM channel.
pub const DEFAULT_PRODUCT_CAP_BYTES: u64 = 256 * MIB;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CartesianError {
    #[error("a Cartesian group needs at least two members, got {0}")]
    TooFewMembers(usize),
    #[error("members {a} and {b} differ in element width")]
    ElemBitsMismatch { a: TableId, b: TableId },
    #[error("table {0} appears twice in one group")]
    DuplicateMember(TableId),
    #[error("product of {members:?} needs {bytes} bytes, cap is {cap}")]
    CapExceeded {
        members: Vec<TableId>,
        bytes: u64,
        cap: u64,
    },
    #[error("expected {expected} member indices, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("index {index} out of range for member {member} with {rows} rows")]
    IndexOutOfRange {
        member: TableId,
        index: u64,
        rows: u64,
    },
    #[error("flat row {index} out of range for product with {rows} rows")]
    FlatIndexOutOfRange { index: u64, rows: u64 },
    #[error("contents of member {member} have {got} elements, expected {expected}")]
    ContentShape {
        member: TableId,
        got: usize,
        expected: usize,
    },
}

/// Tables combined by Cartesian product.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CartesianGroup {
    members: Vec<TableId>,
    member_rows: Vec<u64>,
    member_dims: Vec<u32>,
    elem_bits: ElemBits,
    combined_rows: u64,
    combined_dim: u32,
}

impl CartesianGroup {
    /// Builds a group over `tables`, reordering members largest first.
    pub fn new(tables: &[&TableSpec], cap_bytes: u64) -> Result<Self, CartesianError> {
        if tables.len() < 2 {
            return Err(CartesianError::TooFewMembers(tables.len()));
        }
        let mut sorted: Vec<&TableSpec> = tables.to_vec();
        sorted.sort_by(|a, b| b.byte_size().cmp(&a.byte_size()).then(a.id.cmp(&b.id)));
        for w in sorted.windows(2) {
            if w[0].elem_bits != w[1].elem_bits {
                return Err(CartesianError::ElemBitsMismatch {
                    a: w[0].id,
                    b: w[1].id,
                });
            }
        }
        let mut ids: Vec<TableId> = sorted.iter().map(|t| t.id).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(CartesianError::DuplicateMember(w[0]));
        }

        let members: Vec<TableId> = sorted.iter().map(|t| t.id).collect();
        let elem_bits = sorted[0].elem_bits;
        let combined_dim: u32 = sorted.iter().map(|t| t.dim).sum();
        let combined_rows = sorted
            .iter()
            .try_fold(1u64, |acc, t| acc.checked_mul(t.rows));
        let bytes = combined_rows
            .and_then(|r| r.checked_mul(combined_dim as u64 * elem_bits.bytes()))
            .unwrap_or(u64::MAX);
        if bytes > cap_bytes {
            return Err(CartesianError::CapExceeded {
                members,
                bytes,
                cap: cap_bytes,
            });
        }
        Ok(Self {
            member_rows: sorted.iter().map(|t| t.rows).collect(),
            member_dims: sorted.iter().map(|t| t.dim).collect(),
            members,
            elem_bits,
            combined_rows: combined_rows.expect("checked above"),
            combined_dim,
        })
    }

    pub fn members(&self) -> &[TableId] {
        &self.members
    }

    pub fn member_rows(&self) -> &[u64] {
        &self.member_rows
    }

    pub fn member_dims(&self) -> &[u32] {
        &self.member_dims
    }

    pub fn elem_bits(&self) -> ElemBits {
        self.elem_bits
    }

    pub fn combined_rows(&self) -> u64 {
        self.combined_rows
    }

    pub fn combined_dim(&self) -> u32 {
        self.combined_dim
    }

    pub fn byte_size(&self) -> u64 {
        self.combined_rows * self.combined_dim as u64 * self.elem_bits.bytes()
    }

    /// Position of `id` within the group, if it is a member.
    pub fn position(&self, id: TableId) -> Option<usize> {
        self.members.iter().position(|&m| m == id)
    }

    /// First column of member `k` inside a product row.
    pub fn member_column_offset(&self, k: usize) -> usize {
        self.member_dims[..k].iter().map(|&d| d as usize).sum()
    }

    /// Mixed-radix row index; `member_indices` follow member order.
    pub fn product_index(&self, member_indices: &[u64]) -> Result<u64, CartesianError> {
        if member_indices.len() != self.members.len() {
            return Err(CartesianError::Arity {
                expected: self.members.len(),
                got: member_indices.len(),
            });
        }
        let mut flat = 0u64;
        for ((&idx, &rows), &member) in member_indices
            .iter()
            .zip(&self.member_rows)
            .zip(&self.members)
        {
            if idx >= rows {
                return Err(CartesianError::IndexOutOfRange {
                    member,
                    index: idx,
                    rows,
                });
            }
            flat = flat * rows + idx;
        }
        Ok(flat)
    }

    /// Inverse of [`product_index`](Self::product_index).
    pub fn split_index(&self, flat: u64) -> Result<Vec<u64>, CartesianError> {
        if flat >= self.combined_rows {
            return Err(CartesianError::FlatIndexOutOfRange {
                index: flat,
                rows: self.combined_rows,
            });
        }
        let mut rest = flat;
        let mut out = vec![0u64; self.members.len()];
        for (slot, &rows) in out.iter_mut().zip(&self.member_rows).rev() {
            *slot = rest % rows;
            rest /= rows;
        }
        Ok(out)
    }
}

/// Convenience for the pairwise case.
pub fn combine(
    a: &TableSpec,
    b: &TableSpec,
    cap_bytes: u64,
) -> Result<CartesianGroup, CartesianError> {
    CartesianGroup::new(&[a, b], cap_bytes)
}

/// Builds the row-major contents of a product table.
///
/// `member_contents[k]` is member `k`'s row-major table, in group member order.
pub fn materialize<T: Scalar>(
    group: &CartesianGroup,
    member_contents: &[&[T]],
    cap_bytes: u64,
) -> Result<Vec<T>, CartesianError> {
    if member_contents.len() != group.members.len() {
        return Err(CartesianError::Arity {
            expected: group.members.len(),
            got: member_contents.len(),
        });
    }
    for (k, content) in member_contents.iter().enumerate() {
        let expected = group.member_rows[k] as usize * group.member_dims[k] as usize;
        if content.len() != expected {
            return Err(CartesianError::ContentShape {
                member: group.members[k],
                got: content.len(),
                expected,
            });
        }
    }
    if group.byte_size() > cap_bytes {
        return Err(CartesianError::CapExceeded {
            members: group.members.clone(),
            bytes: group.byte_size(),
            cap: cap_bytes,
        });
    }

    let width = group.combined_dim as usize;
    let mut out = Vec::with_capacity(group.combined_rows as usize * width);
    // Odometer over member indices; last member varies fastest.
    let mut digits = vec![0u64; group.members.len()];
    for _ in 0..group.combined_rows {
        for (k, &d) in digits.iter().enumerate() {
            let dim = group.member_dims[k] as usize;
            let start = d as usize * dim;
            out.extend_from_slice(&member_contents[k][start..start + dim]);
        }
        for k in (0..digits.len()).rev() {
            digits[k] += 1;
            if digits[k] < group.member_rows[k] {
                break;
            }
            digits[k] = 0;
        }
    }
    Ok(out)
}

/// Where a physical table's contents come from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PhysicalSource {
    Single(TableId),
    Group(CartesianGroup),
}

/// A table as stored in memory: an original table or a product.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhysicalTable {
    pub source: PhysicalSource,
    pub rows: u64,
    pub dim: u32,
    pub elem_bits: ElemBits,
}

impl PhysicalTable {
    pub fn single(t: &TableSpec) -> Self {
        Self {
            source: PhysicalSource::Single(t.id),
            rows: t.rows,
            dim: t.dim,
            elem_bits: t.elem_bits,
        }
    }

    pub fn group(g: CartesianGroup) -> Self {
        Self {
            rows: g.combined_rows,
            dim: g.combined_dim,
            elem_bits: g.elem_bits,
            source: PhysicalSource::Group(g),
        }
    }

    pub fn byte_size(&self) -> u64 {
        self.rows * self.dim as u64 * self.elem_bits.bytes()
    }

    /// Original tables stored here, in member order.
    pub fn members(&self) -> Vec<TableId> {
        match &self.source {
            PhysicalSource::Single(id) => vec![*id],
            PhysicalSource::Group(g) => g.members.clone(),
        }
    }

    /// Smallest member id; used as a stable tie-break key.
    pub fn min_member(&self) -> TableId {
        match &self.source {
            PhysicalSource::Single(id) => *id,
            PhysicalSource::Group(g) => *g.members.iter().min().expect("non-empty group"),
        }
    }

    pub fn is_product(&self) -> bool {
        matches!(self.source, PhysicalSource::Group(_))
    }
}

/// Serialized view of a physical table for reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhysicalTableSummary {
    pub members: Vec<TableId>,
    pub rows: u64,
    pub dim: u32,
    pub bytes: u64,
}

impl From<&PhysicalTable> for PhysicalTableSummary {
    fn from(p: &PhysicalTable) -> Self {
        Self {
            members: p.members(),
            rows: p.rows,
            dim: p.dim,
            bytes: p.byte_size(),
        }
    }
}

/// Transformed bytes over original bytes. Exactly 1.0 when nothing is combined.
pub fn storage_overhead(original: &[TableSpec], transformed: &[PhysicalTable]) -> f64 {
    let before: u64 = original.iter().map(TableSpec::byte_size).sum();
    let after: u64 = transformed.iter().map(PhysicalTable::byte_size).sum();
    if before == 0 {
        return 1.0;
    }
    after as f64 / before as f64
}
