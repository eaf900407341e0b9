//! JSON model/hierarchy documents.
//!
//! ```json
//! {"tables":[{"rows":100,"dim":4,"elem_bits":32}],
//!  "hidden_dims":[1024,512,256],
//!  "memory":{"hbm_channels":32, "onchip_access_ns":100.0, ...}}
//! ```
//!
//! Every `memory` field is optional and falls back to
//! [`MemoryHierarchySpec::default`]. `lookups_per_table` is optional (default 1).

use serde::{Deserialize, Serialize};

use super::spec::{ElemBits, MemoryHierarchySpec, ModelSpec, TableSpec};
use super::SpecError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableDoc {
    rows: u64,
    dim: u32,
    #[serde(default = "default_elem_bits")]
    elem_bits: u32,
}

fn default_elem_bits() -> u32 {
    32
}

fn is_one(v: &u32) -> bool {
    *v == 1
}

fn one() -> u32 {
    1
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemoryDoc {
    hbm_channels: Option<usize>,
    hbm_channel_capacity: Option<u64>,
    ddr_channels: Option<usize>,
    ddr_channel_capacity: Option<u64>,
    onchip_banks: Option<usize>,
    onchip_bank_capacity: Option<u64>,
    dram_access_ns: Option<f64>,
    onchip_access_ns: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    tables: Vec<TableDoc>,
    #[serde(default)]
    hidden_dims: Vec<u32>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    lookups_per_table: u32,
    #[serde(default)]
    memory: MemoryDoc,
}

/// Parses and validates a spec document.
pub fn load_spec(document: &str) -> Result<(ModelSpec, MemoryHierarchySpec), SpecError> {
    let doc: SpecDoc =
        serde_json::from_str(document).map_err(|e| SpecError::Parse(e.to_string()))?;

    let mut tables = Vec::with_capacity(doc.tables.len());
    for (i, t) in doc.tables.iter().enumerate() {
        let bits = ElemBits::try_from(t.elem_bits)
            .map_err(|m| SpecError::validation(format!("tables[{i}].elem_bits"), m))?;
        tables.push(TableSpec::new(i, t.rows, t.dim, bits)?);
    }
    let model = ModelSpec::new(tables, doc.hidden_dims, doc.lookups_per_table)?;

    let d = MemoryHierarchySpec::default();
    let m = &doc.memory;
    let hierarchy = MemoryHierarchySpec {
        hbm_channels: m.hbm_channels.unwrap_or(d.hbm_channels),
        hbm_channel_capacity: m.hbm_channel_capacity.unwrap_or(d.hbm_channel_capacity),
        ddr_channels: m.ddr_channels.unwrap_or(d.ddr_channels),
        ddr_channel_capacity: m.ddr_channel_capacity.unwrap_or(d.ddr_channel_capacity),
        onchip_banks: m.onchip_banks.unwrap_or(d.onchip_banks),
        onchip_bank_capacity: m.onchip_bank_capacity.unwrap_or(d.onchip_bank_capacity),
        dram_access_ns: m.dram_access_ns.unwrap_or(d.dram_access_ns),
        onchip_access_ns: m.onchip_access_ns.unwrap_or(d.onchip_access_ns),
    };
    hierarchy.validate()?;
    Ok((model, hierarchy))
}

/// Serializes a model and hierarchy with every field spelled out.
pub fn spec_to_json(model: &ModelSpec, hierarchy: &MemoryHierarchySpec) -> String {
    let doc = SpecDoc {
        tables: model
            .tables
            .iter()
            .map(|t| TableDoc {
                rows: t.rows,
                dim: t.dim,
                elem_bits: t.elem_bits.bits(),
            })
            .collect(),
        hidden_dims: model.hidden_dims.clone(),
        lookups_per_table: model.lookups_per_table,
        memory: MemoryDoc {
            hbm_channels: Some(hierarchy.hbm_channels),
            hbm_channel_capacity: Some(hierarchy.hbm_channel_capacity),
            ddr_channels: Some(hierarchy.ddr_channels),
            ddr_channel_capacity: Some(hierarchy.ddr_channel_capacity),
            onchip_banks: Some(hierarchy.onchip_banks),
            onchip_bank_capacity: Some(hierarchy.onchip_bank_capacity),
            dram_access_ns: Some(hierarchy.dram_access_ns),
            onchip_access_ns: Some(hierarchy.onchip_access_ns),
        },
    };
    serde_json::to_string_pretty(&doc).expect("spec document serializes")
}
