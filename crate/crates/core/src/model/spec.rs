use std::fmt;

use serde::{Deserialize, Serialize};

use super::SpecError;

pub const KIB: u64 = 1 << 10;
pub const MIB: u64 = 1 << 20;
pub const GIB: u64 = 1 << 30;

/// Ordinal of a logical table; also its position in the concatenated output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TableId(pub usize);

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Width of a stored embedding element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum ElemBits {
    /// Q1.15 fixed point.
    B16,
    /// IEEE single precision.
    B32,
}

impl ElemBits {
    pub const fn bits(self) -> u32 {
        match self {
            ElemBits::B16 => 16,
            ElemBits::B32 => 32,
        }
    }

    pub const fn bytes(self) -> u64 {
        self.bits() as u64 / 8
    }
}

impl TryFrom<u32> for ElemBits {
    type Error = String;

    fn try_from(v: u32) -> Result<Self, Self::Error> {
        match v {
            16 => Ok(ElemBits::B16),
            32 => Ok(ElemBits::B32),
            other => Err(format!("element width must be 16 or 32 bits, got {other}")),
        }
    }
}

impl From<ElemBits> for u32 {
    fn from(e: ElemBits) -> u32 {
        e.bits()
    }
}

/// One logical embedding table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TableSpec {
    pub id: TableId,
    pub rows: u64,
    pub dim: u32,
    pub elem_bits: ElemBits,
}

impl TableSpec {
    pub fn new(id: usize, rows: u64, dim: u32, elem_bits: ElemBits) -> Result<Self, SpecError> {
        let path = format!("tables[{id}]");
        if rows == 0 {
            return Err(SpecError::validation(
                format!("{path}.rows"),
                "must be >= 1",
            ));
        }
        if dim == 0 {
            return Err(SpecError::validation(format!("{path}.dim"), "must be >= 1"));
        }
        Ok(Self {
            id: TableId(id),
            rows,
            dim,
            elem_bits,
        })
    }

    /// Bytes per row.
    pub fn row_bytes(&self) -> u64 {
        self.dim as u64 * self.elem_bits.bytes()
    }

    pub fn byte_size(&self) -> u64 {
        self.rows.saturating_mul(self.row_bytes())
    }
}

/// On-chip banks plus off-chip (HBM then DDR) channels.
///
/// Off-chip channels are addressed by a unified ordinal: `0..hbm_channels`
/// are HBM, the following `ddr_channels` are DDR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryHierarchySpec {
    pub hbm_channels: usize,
    pub hbm_channel_capacity: u64,
    pub ddr_channels: usize,
    pub ddr_channel_capacity: u64,
    pub onchip_banks: usize,
    pub onchip_bank_capacity: u64,
    /// Latency of one random off-chip access, HBM and DDR alike.
    pub dram_access_ns: f64,
    pub onchip_access_ns: f64,
}

impl Default for MemoryHierarchySpec {
    /// 32 HBM pseudo-channels of 256 MiB, 2 DDR channels of 16 GiB and four
    /// 2 KiB on-chip banks. On-chip access costs a third of a DRAM access.
    fn default() -> Self {
        Self {
            hbm_channels: 32,
            hbm_channel_capacity: 256 * MIB,
            ddr_channels: 2,
            ddr_channel_capacity: 16 * GIB,
            onchip_banks: 4,
            onchip_bank_capacity: 2 * KIB,
            dram_access_ns: 300.0,
            onchip_access_ns: 100.0,
        }
    }
}

impl MemoryHierarchySpec {
    pub fn offchip_channels(&self) -> usize {
        self.hbm_channels + self.ddr_channels
    }

    /// Capacity of unified off-chip channel `ch`.
    pub fn channel_capacity(&self, ch: usize) -> u64 {
        if ch < self.hbm_channels {
            self.hbm_channel_capacity
        } else {
            self.ddr_channel_capacity
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.offchip_channels() == 0 {
            return Err(SpecError::validation(
                "memory.hbm_channels",
                "at least one off-chip (HBM or DDR) channel is required",
            ));
        }
        for (name, v) in [
            ("memory.dram_access_ns", self.dram_access_ns),
            ("memory.onchip_access_ns", self.onchip_access_ns),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SpecError::validation(
                    name,
                    "must be a positive finite number",
                ));
            }
        }
        if self.onchip_access_ns > self.dram_access_ns {
            return Err(SpecError::validation(
                "memory.onchip_access_ns",
                "must not exceed dram_access_ns",
            ));
        }
        Ok(())
    }
}

/// A recommendation model: embedding tables feeding a top MLP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub tables: Vec<TableSpec>,
    pub hidden_dims: Vec<u32>,
    pub lookups_per_table: u32,
}

impl ModelSpec {
    /// Builds a validated model. Table ids must be `0..tables.len()` in order.
    pub fn new(
        tables: Vec<TableSpec>,
        hidden_dims: Vec<u32>,
        lookups_per_table: u32,
    ) -> Result<Self, SpecError> {
        let m = Self {
            tables,
            hidden_dims,
            lookups_per_table,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if self.tables.is_empty() {
            return Err(SpecError::validation(
                "tables",
                "at least one table is required",
            ));
        }
        for (i, t) in self.tables.iter().enumerate() {
            if t.id != TableId(i) {
                return Err(SpecError::validation(
                    format!("tables[{i}]"),
                    format!("table id {} out of ordinal order", t.id.0),
                ));
            }
            if t.rows == 0 {
                return Err(SpecError::validation(
                    format!("tables[{i}].rows"),
                    "must be >= 1",
                ));
            }
            if t.dim == 0 {
                return Err(SpecError::validation(
                    format!("tables[{i}].dim"),
                    "must be >= 1",
                ));
            }
        }
        if let Some(i) = self.hidden_dims.iter().position(|&d| d == 0) {
            return Err(SpecError::validation(
                format!("hidden_dims[{i}]"),
                "must be >= 1",
            ));
        }
        if self.lookups_per_table == 0 {
            return Err(SpecError::validation("lookups_per_table", "must be >= 1"));
        }
        Ok(())
    }

    pub fn num_tables(&self) -> usize {
        self.tables.len()
    }

    pub fn table(&self, id: TableId) -> &TableSpec {
        &self.tables[id.0]
    }

    /// Width of the dense vector produced by one query.
    pub fn concat_length(&self) -> usize {
        self.tables.iter().map(|t| t.dim as usize).sum::<usize>() * self.lookups_per_table as usize
    }

    /// Column where table `id`'s first looked-up vector starts in the output.
    pub fn concat_offset(&self, id: TableId) -> usize {
        self.tables[..id.0]
            .iter()
            .map(|t| t.dim as usize)
            .sum::<usize>()
            * self.lookups_per_table as usize
    }

    pub fn total_bytes(&self) -> u64 {
        self.tables.iter().map(TableSpec::byte_size).sum()
    }
}
