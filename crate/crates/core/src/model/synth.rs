//! Seeded synthetic models with skewed table sizes.
//!
//! Row counts are log-uniform within each size class, which reproduces the
//! mix of a few tiny tables, a band of small ones and a long tail of large
//! ones seen in production recommendation models.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spec::{ElemBits, MemoryHierarchySpec, ModelSpec, TableSpec, KIB, MIB};
use super::SpecError;

/// How a size class picks embedding dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum DimSpec {
    /// Uniform draw per table.
    Choose(Vec<u32>),
    /// A fixed multiset, shuffled; its length must match the class count.
    /// Pins the class's contribution to the concat length.
    Multiset(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeClass {
    /// `None` takes whatever remains of the requested table count.
    pub count: Option<usize>,
    pub min_rows: u64,
    pub max_rows: u64,
    pub dims: DimSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeProfile {
    pub name: String,
    pub classes: Vec<SizeClass>,
    /// Row counts are clipped so no table exceeds this size.
    pub max_table_bytes: u64,
    pub elem_bits: ElemBits,
    pub hidden_dims: Vec<u32>,
}

const ALL_DIMS: [u32; 5] = [4, 8, 16, 32, 64];

fn repeat_dims(parts: &[(usize, u32)]) -> Vec<u32> {
    parts
        .iter()
        .flat_map(|&(n, d)| std::iter::repeat_n(d, n))
        .collect()
}

impl SizeProfile {
    /// One log-uniform class spanning 10 to 10^6 rows.
    pub fn default_profile() -> Self {
        Self {
            name: "default".into(),
            classes: vec![SizeClass {
                count: None,
                min_rows: 10,
                max_rows: 1_000_000,
                dims: DimSpec::Choose(ALL_DIMS.to_vec()),
            }],
            max_table_bytes: 64 * MIB,
            elem_bits: ElemBits::B32,
            hidden_dims: vec![1024, 512, 256],
        }
    }

    /// 47 tables, concat length 352: 8 tiny tables that fit an on-chip bank
    /// of the default hierarchy, 12 small off-chip tables and 27 large ones.
    pub fn table3_small() -> Self {
        Self {
            name: "table3-small".into(),
            classes: vec![
                SizeClass {
                    count: Some(8),
                    min_rows: 8,
                    max_rows: 32,
                    dims: DimSpec::Multiset(repeat_dims(&[(8, 4)])),
                },
                SizeClass {
                    count: Some(12),
                    min_rows: 160,
                    max_rows: 320,
                    dims: DimSpec::Multiset(repeat_dims(&[(12, 4)])),
                },
                SizeClass {
                    count: Some(27),
                    min_rows: 10_000,
                    max_rows: 1_000_000,
                    dims: DimSpec::Multiset(repeat_dims(&[(7, 16), (20, 8)])),
                },
            ],
            max_table_bytes: 64 * MIB,
            elem_bits: ElemBits::B32,
            hidden_dims: vec![1024, 512, 256],
        }
    }

    /// 98 tables, concat length 876: 16 tiny, 30 small and 52 large tables.
    pub fn table3_large() -> Self {
        Self {
            name: "table3-large".into(),
            classes: vec![
                SizeClass {
                    count: Some(16),
                    min_rows: 8,
                    max_rows: 32,
                    dims: DimSpec::Multiset(repeat_dims(&[(16, 4)])),
                },
                SizeClass {
                    count: Some(30),
                    min_rows: 160,
                    max_rows: 320,
                    dims: DimSpec::Multiset(repeat_dims(&[(30, 4)])),
                },
                SizeClass {
                    count: Some(52),
                    min_rows: 50_000,
                    max_rows: 2_000_000,
                    dims: DimSpec::Multiset(repeat_dims(&[(33, 16), (1, 32), (3, 4), (15, 8)])),
                },
            ],
            max_table_bytes: 64 * MIB,
            elem_bits: ElemBits::B32,
            hidden_dims: vec![1024, 512, 256],
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::default_profile()),
            "table3-small" => Some(Self::table3_small()),
            "table3-large" => Some(Self::table3_large()),
            _ => None,
        }
    }

    /// Table count implied by the fixed-size classes, if every class is fixed.
    pub fn fixed_table_count(&self) -> Option<usize> {
        self.classes.iter().map(|c| c.count).sum()
    }

    fn resolve_counts(&self, n_tables: usize) -> Result<Vec<usize>, SpecError> {
        let fixed: usize = self.classes.iter().filter_map(|c| c.count).sum();
        let rest_classes = self.classes.iter().filter(|c| c.count.is_none()).count();
        if rest_classes > 1 {
            return Err(SpecError::validation(
                "profile.classes",
                "at most one class may take the remaining tables",
            ));
        }
        if fixed > n_tables || (rest_classes == 0 && fixed != n_tables) {
            return Err(SpecError::validation(
                "n_tables",
                format!(
                    "profile '{}' fixes {fixed} tables, requested {n_tables}",
                    self.name
                ),
            ));
        }
        Ok(self
            .classes
            .iter()
            .map(|c| c.count.unwrap_or(n_tables - fixed))
            .collect())
    }
}

/// Generates a model; a pure function of `(n_tables, profile, seed)`.
pub fn generate_synthetic(
    n_tables: usize,
    profile: &SizeProfile,
    seed: u64,
) -> Result<ModelSpec, SpecError> {
    if n_tables == 0 {
        return Err(SpecError::validation("n_tables", "must be >= 1"));
    }
    let counts = profile.resolve_counts(n_tables)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let row_bytes_per_dim = profile.elem_bits.bytes();

    let mut shapes: Vec<(u64, u32)> = Vec::with_capacity(n_tables);
    for (ci, (class, &count)) in profile.classes.iter().zip(&counts).enumerate() {
        if class.min_rows == 0 || class.min_rows > class.max_rows {
            return Err(SpecError::validation(
                format!("profile.classes[{ci}]"),
                "row range must satisfy 1 <= min_rows <= max_rows",
            ));
        }
        let dims: Vec<u32> = match &class.dims {
            DimSpec::Choose(choices) => {
                if choices.is_empty() {
                    return Err(SpecError::validation(
                        format!("profile.classes[{ci}].dims"),
                        "no dimension choices",
                    ));
                }
                (0..count)
                    .map(|_| choices[rng.random_range(0..choices.len())])
                    .collect()
            }
            DimSpec::Multiset(set) => {
                if set.len() != count {
                    return Err(SpecError::validation(
                        format!("profile.classes[{ci}].dims"),
                        format!("multiset has {} dims for {count} tables", set.len()),
                    ));
                }
                let mut set = set.clone();
                set.shuffle(&mut rng);
                set
            }
        };
        let (lo, hi) = ((class.min_rows as f64).ln(), (class.max_rows as f64).ln());
        for dim in dims {
            let u: f64 = rng.random();
            let mut rows = (lo + u * (hi - lo)).exp().round() as u64;
            rows = rows.clamp(class.min_rows, class.max_rows);
            let cap_rows = (profile.max_table_bytes / (dim as u64 * row_bytes_per_dim)).max(1);
            shapes.push((rows.min(cap_rows), dim));
        }
    }
    shapes.shuffle(&mut rng);

    let tables = shapes
        .into_iter()
        .enumerate()
        .map(|(i, (rows, dim))| TableSpec::new(i, rows, dim, profile.elem_bits))
        .collect::<Result<Vec<_>, _>>()?;
    ModelSpec::new(tables, profile.hidden_dims.clone(), 1)
}

/// Channel capacities for [`random_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CapacityRegime {
    /// 256 MiB HBM channels: every product under the default cap fits any
    /// channel, as in the default hierarchy.
    Ample,
    /// 1-64 MiB HBM channels, so placement is also a packing problem.
    Tight,
}

/// A small random model on a small random hierarchy, for comparing
/// planners: 1-4 HBM channels, at most one 1 GiB DDR channel, up to two
/// on-chip banks of 256 B-4 KiB, and tables of 4-4096 rows.
pub fn random_instance(
    n_tables: usize,
    seed: u64,
    regime: CapacityRegime,
) -> Result<(ModelSpec, MemoryHierarchySpec), SpecError> {
    if n_tables == 0 {
        return Err(SpecError::validation("n_tables", "must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hbm_channels = rng.random_range(1..=4);
    let hbm_channel_capacity = match regime {
        CapacityRegime::Ample => 256 * MIB,
        CapacityRegime::Tight => MIB << rng.random_range(0..=6),
    };
    let hierarchy = MemoryHierarchySpec {
        hbm_channels,
        hbm_channel_capacity,
        ddr_channels: rng.random_range(0..=1),
        ddr_channel_capacity: 1024 * MIB,
        onchip_banks: rng.random_range(0..=2),
        onchip_bank_capacity: (KIB / 4) << rng.random_range(0..=4),
        ..MemoryHierarchySpec::default()
    };
    let (lo, hi) = (4f64.ln(), 4096f64.ln());
    let tables = (0..n_tables)
        .map(|i| {
            let rows = (lo + rng.random::<f64>() * (hi - lo)).exp().round() as u64;
            let dim = [4, 8, 16][rng.random_range(0..3)];
            TableSpec::new(i, rows, dim, ElemBits::B32)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((ModelSpec::new(tables, vec![16], 1)?, hierarchy))
}
