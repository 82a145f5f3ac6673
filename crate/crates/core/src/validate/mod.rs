//! Monte Carlo cross-validation over source nodes, degree-preserving null
//! graphs, and division of a node type into per-category sub-networks.

mod cv;
mod divide;
mod null;

use thiserror::Error;

use crate::hin::HinError;
use crate::metapath::MetaPathError;
use crate::pcrw::PcrwError;
use crate::regress::RegressError;

pub use cv::{monte_carlo_cv, monte_carlo_cv_features, train_size, CvConfig, CvReport, SplitResult};
pub use divide::{divide_by_category, Categorization, CategoryGraph};
pub use null::{null_model, null_model_links, NullMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidateError {
    #[error("invalid cross-validation settings: {0}")]
    InvalidConfig(String),
    #[error("need at least 2 real source nodes, found {0}")]
    TooFewSources(usize),
    #[error("split {split}: test response has zero variance")]
    DegenerateSplit { split: usize },
    #[error("link type `{link}` has {count} edges; reshuffling needs at least 2")]
    TooFewEdges { link: String, count: usize },
    #[error("could not rewire link type `{link}` without duplicate edges")]
    RewireFailed { link: String },
    #[error("pivot node {node} has no category")]
    UncategorizedNode { node: usize },
    #[error("pivot node {node} assigned to unknown category {category}")]
    UnknownCategory { node: usize, category: usize },
    #[error("categorization covers {found} nodes, pivot type has {expected}")]
    CategorizationLength { expected: usize, found: usize },
    #[error("node type `{0}` does not occur on the anchor meta-path")]
    PivotNotOnPath(String),
    #[error(transparent)]
    Hin(#[from] HinError),
    #[error(transparent)]
    MetaPath(#[from] MetaPathError),
    #[error(transparent)]
    Pcrw(#[from] PcrwError),
    #[error(transparent)]
    Regress(#[from] RegressError),
}
