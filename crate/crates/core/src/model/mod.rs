//! Tables, models, memory hierarchies and their JSON form.

mod io;
mod spec;
mod synth;

use thiserror::Error;

pub use io::{load_spec, spec_to_json};
pub use spec::{ElemBits, MemoryHierarchySpec, ModelSpec, TableId, TableSpec, GIB, KIB, MIB};
pub use synth::{
    generate_synthetic, random_instance, CapacityRegime, DimSpec, SizeClass, SizeProfile,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("malformed spec document: {0}")]
    Parse(String),
    #[error("invalid `{path}`: {message}")]
    Validation { path: String, message: String },
}

impl SpecError {
    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        SpecError::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}
