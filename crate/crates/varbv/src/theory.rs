//! Per-theory context: base dimension, declared graded fields, jet cap.
//! Immutable after construction; all operations borrow it.

use crate::Error;
use std::sync::atomic::{AtomicU32, Ordering};

pub const DEFAULT_JET_CAP: u32 = 8;

static NEXT_ID: AtomicU32 = AtomicU32::new(1);

/// Identifies the theory a form was built in; mixing is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TheoryId(pub(crate) u32);

impl TheoryId {
    /// Matches any theory (carried by the zero form and scalars).
    pub const ANY: TheoryId = TheoryId(0);

    pub(crate) fn merge(self, other: TheoryId) -> Result<TheoryId, Error> {
        match (self.0, other.0) {
            (0, _) => Ok(other),
            (_, 0) => Ok(self),
            (a, b) if a == b => Ok(self),
            _ => Err(Error::CrossTheory),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub ghost: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldId(pub usize);

#[derive(Debug)]
pub struct Theory {
    id: TheoryId,
    dimension: usize,
    fields: Vec<FieldDecl>,
    coordinates: Vec<String>,
    jet_cap: u32,
}

impl Theory {
    pub fn new(dimension: usize, fields: Vec<FieldDecl>) -> Result<Theory, Error> {
        Self::with_options(dimension, fields, None, DEFAULT_JET_CAP)
    }

    pub fn with_options(
        dimension: usize,
        fields: Vec<FieldDecl>,
        coordinates: Option<Vec<String>>,
        jet_cap: u32,
    ) -> Result<Theory, Error> {
        for (i, f) in fields.iter().enumerate() {
            if fields[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::Precondition(format!(
                    "duplicate field name `{}`",
                    f.name
                )));
            }
        }
        let coordinates = coordinates
            .unwrap_or_else(|| (1..=dimension).map(|i| format!("x{i}")).collect());
        if coordinates.len() != dimension {
            return Err(Error::DimensionMismatch {
                got: coordinates.len(),
                dim: dimension,
            });
        }
        Ok(Theory {
            id: TheoryId(NEXT_ID.fetch_add(1, Ordering::Relaxed)),
            dimension,
            fields,
            coordinates,
            jet_cap,
        })
    }

    pub fn id(&self) -> TheoryId {
        self.id
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn jet_cap(&self) -> u32 {
        self.jet_cap
    }

    pub fn num_fields(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[FieldDecl] {
        &self.fields
    }

    pub fn ghost(&self, f: FieldId) -> i64 {
        self.fields[f.0].ghost
    }

    pub fn field_name(&self, f: FieldId) -> &str {
        &self.fields[f.0].name
    }

    pub fn coordinate_name(&self, i: usize) -> &str {
        &self.coordinates[i]
    }

    pub fn lookup_field(&self, name: &str) -> Result<FieldId, Error> {
        self.fields
            .iter()
            .position(|f| f.name == name)
            .map(FieldId)
            .ok_or_else(|| Error::UnknownField(name.to_string()))
    }

    pub fn lookup_coordinate(&self, name: &str) -> Option<usize> {
        self.coordinates.iter().position(|c| c == name)
    }

    pub fn field_ids(&self) -> impl Iterator<Item = FieldId> {
        (0..self.fields.len()).map(FieldId)
    }
}
