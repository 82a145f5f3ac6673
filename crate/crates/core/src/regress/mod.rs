//! Linear model `F = b0 + sum_P b_P * PCRW(P)` fitted by ordinary least
//! squares, with greedy forward selection of the regressors.

mod design;
mod features;
mod ols;
pub(crate) mod select;
mod tdist;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pcrw::{PcrwError, PcrwResult};
use crate::sparse::CsrMatrix;

pub use design::{assemble_design, DesignMatrix};
pub use features::{aggregate_features, FeatureAggregation};
pub use ols::{ols, FitResult, CONDITION_LIMIT};
pub use select::{
    forward_select, forward_select_features, SelectionOptions, SelectionStep, SelectionTrace,
    StopReason,
};
pub use tdist::t_sf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressError {
    #[error("table `{name}` has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("source subset is empty")]
    EmptySubset,
    #[error("source {index} out of range ({count} real sources)")]
    SourceOutOfRange { index: usize, count: usize },
    #[error("design is singular at column {column} (`{name}`), condition {condition:e}")]
    Singular {
        column: usize,
        name: String,
        condition: f64,
    },
    #[error("{rows} rows cannot determine {cols} coefficients")]
    Underdetermined { rows: usize, cols: usize },
    #[error("design contains a non-finite value in column `{0}`")]
    NonFinite(String),
    #[error("feature group `{0}` is empty")]
    EmptyGroup(String),
    #[error("significance level {0} outside (0, 1]")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Pcrw(#[from] PcrwError),
}

/// A named probability table usable as response or regressor: either a
/// random-walk result or an aggregate of several.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    /// Rows: sources with the hole last. Columns: targets with the hole last.
    pub table: CsrMatrix,
}

impl Feature {
    pub fn new(name: impl Into<String>, table: CsrMatrix) -> Self {
        Self {
            name: name.into(),
            table,
        }
    }

    /// Number of real (non-hole) source rows.
    pub fn real_sources(&self) -> usize {
        self.table.rows().saturating_sub(1)
    }
}

impl From<&PcrwResult> for Feature {
    fn from(r: &PcrwResult) -> Self {
        Self::new(r.metapath.to_string(), r.table.clone())
    }
}

impl From<PcrwResult> for Feature {
    fn from(r: PcrwResult) -> Self {
        Self::new(r.metapath.to_string(), r.table)
    }
}
