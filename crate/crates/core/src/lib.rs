//! Link weight recovery in weighted heterogeneous information networks.
//!
//! The pipeline: build a [`TypedGraph`](hin::TypedGraph), add hole nodes,
//! compute path-constrained random-walk tables for a set of meta-paths
//! ([`pcrw`]), then explain the target link type's transition probabilities
//! by a linear model whose regressors are chosen by forward selection
//! ([`regress`]). [`validate`] provides Monte Carlo cross-validation,
//! degree-preserving null graphs and per-category sub-networks.

pub mod hin;
pub mod metapath;
pub mod pcrw;
pub mod regress;
pub mod sparse;
pub mod synthetic;
pub mod validate;

pub use hin::{
    build_graph, GraphBuilder, HinError, LinkType, LinkTypeId, NodeType, NodeTypeId, Schema,
    StochasticMatrix, TypedGraph, WeightedEdge,
};
pub use metapath::{enumerate_metapaths, Exclusion, MetaPath, MetaPathError, MetaPathSet};
pub use pcrw::{pcrw, pcrw_batch, pcrw_oracle, PcrwError, PcrwResult};
pub use regress::{
    aggregate_features, assemble_design, forward_select, forward_select_features, ols, t_sf,
    DesignMatrix, Feature, FeatureAggregation, FitResult, RegressError, SelectionOptions,
    SelectionTrace, StopReason,
};
pub use sparse::CsrMatrix;
pub use validate::{
    divide_by_category, monte_carlo_cv, null_model, CategoryGraph, Categorization, CvConfig,
    CvReport, NullMode, ValidateError,
};
