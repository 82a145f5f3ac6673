//! Weighted directed heterogeneous information networks.
//!
//! A [`TypedGraph`] holds one sparse weight matrix per link type. Nodes are
//! addressed by `(NodeTypeId, index)`; each node type owns a contiguous index
//! space. After [`TypedGraph::augment_with_holes`] every node type gains one
//! extra "hole" node at its last index that absorbs walks from nodes with no
//! outgoing link of a given type.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeTypeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkTypeId(pub usize);

impl fmt::Display for NodeTypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V{}", self.0)
    }
}

impl fmt::Display for LinkTypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HinError {
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("duplicate type name `{0}`")]
    DuplicateType(String),
    #[error("link type `{link}` connects {expected_src} -> {expected_dst}, edge uses {found_src} -> {found_dst}")]
    TypeMismatch {
        link: String,
        expected_src: String,
        expected_dst: String,
        found_src: String,
        found_dst: String,
    },
    #[error("node {index} out of range for node type `{node_type}` ({count} nodes)")]
    NodeOutOfRange {
        node_type: String,
        index: usize,
        count: usize,
    },
    #[error("negative weight {0}")]
    NegativeWeight(f64),
    #[error("non-finite weight {0}")]
    NonFiniteWeight(f64),
    #[error("graph is already augmented with hole nodes")]
    AlreadyAugmented,
    #[error("graph has no hole nodes; augment it first")]
    NotAugmented,
    #[error("no link type from `{0}` to `{1}`")]
    NoSuchPair(String, String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeType {
    pub name: String,
    /// Number of real (non-hole) nodes.
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkType {
    pub name: String,
    pub source: NodeTypeId,
    pub target: NodeTypeId,
}

/// One weighted edge given by type names and per-type node indices.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedEdge {
    pub link: String,
    pub src_type: String,
    pub src: usize,
    pub dst_type: String,
    pub dst: usize,
    pub weight: f64,
}

/// Builds a graph from name-based declarations. Edge endpoint types must agree
/// with the link type declaration. Duplicate edges are merged by summing
/// their weights and zero weights are dropped.
pub fn build_graph(
    node_types: &[(&str, usize)],
    link_types: &[(&str, &str, &str)],
    edges: &[WeightedEdge],
) -> Result<TypedGraph, HinError> {
    let mut b = GraphBuilder::new();
    for &(name, count) in node_types {
        b.node_type(name, count)?;
    }
    for &(name, src, dst) in link_types {
        b.link_type(name, src, dst)?;
    }
    for e in edges {
        let link = b.link_id(&e.link)?;
        let lt = &b.link_types[link.0];
        let (src_t, dst_t) = (b.node_id(&e.src_type)?, b.node_id(&e.dst_type)?);
        if lt.source != src_t || lt.target != dst_t {
            return Err(HinError::TypeMismatch {
                link: lt.name.clone(),
                expected_src: b.node_types[lt.source.0].name.clone(),
                expected_dst: b.node_types[lt.target.0].name.clone(),
                found_src: e.src_type.clone(),
                found_dst: e.dst_type.clone(),
            });
        }
        b.edge(link, e.src, e.dst, e.weight)?;
    }
    Ok(b.build())
}

/// Incremental constructor for [`TypedGraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    node_types: Vec<NodeType>,
    link_types: Vec<LinkType>,
    triplets: Vec<Vec<(usize, usize, f64)>>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_type(&mut self, name: &str, count: usize) -> Result<NodeTypeId, HinError> {
        if self.node_types.iter().any(|t| t.name == name) {
            return Err(HinError::DuplicateType(name.to_string()));
        }
        self.node_types.push(NodeType {
            name: name.to_string(),
            count,
        });
        Ok(NodeTypeId(self.node_types.len() - 1))
    }

    /// Grows a node type so that it holds at least `count` nodes.
    pub fn ensure_nodes(&mut self, t: NodeTypeId, count: usize) {
        let nt = &mut self.node_types[t.0];
        nt.count = nt.count.max(count);
    }

    pub fn link_type(&mut self, name: &str, source: &str, target: &str) -> Result<LinkTypeId, HinError> {
        let (s, t) = (self.node_id(source)?, self.node_id(target)?);
        self.link_type_by_id(name, s, t)
    }

    pub fn link_type_by_id(
        &mut self,
        name: &str,
        source: NodeTypeId,
        target: NodeTypeId,
    ) -> Result<LinkTypeId, HinError> {
        if self.link_types.iter().any(|t| t.name == name) {
            return Err(HinError::DuplicateType(name.to_string()));
        }
        for id in [source, target] {
            if id.0 >= self.node_types.len() {
                return Err(HinError::UnknownType(id.to_string()));
            }
        }
        self.link_types.push(LinkType {
            name: name.to_string(),
            source,
            target,
        });
        self.triplets.push(Vec::new());
        Ok(LinkTypeId(self.link_types.len() - 1))
    }

    pub fn node_id(&self, name: &str) -> Result<NodeTypeId, HinError> {
        self.node_types
            .iter()
            .position(|t| t.name == name)
            .map(NodeTypeId)
            .ok_or_else(|| HinError::UnknownType(name.to_string()))
    }

    pub fn link_id(&self, name: &str) -> Result<LinkTypeId, HinError> {
        self.link_types
            .iter()
            .position(|t| t.name == name)
            .map(LinkTypeId)
            .ok_or_else(|| HinError::UnknownType(name.to_string()))
    }

    pub fn link(&self, id: LinkTypeId) -> &LinkType {
        &self.link_types[id.0]
    }

    pub fn edge(&mut self, link: LinkTypeId, src: usize, dst: usize, weight: f64) -> Result<(), HinError> {
        if !weight.is_finite() {
            return Err(HinError::NonFiniteWeight(weight));
        }
        if weight < 0.0 {
            return Err(HinError::NegativeWeight(weight));
        }
        let lt = self
            .link_types
            .get(link.0)
            .ok_or_else(|| HinError::UnknownType(link.to_string()))?;
        for (t, idx) in [(lt.source, src), (lt.target, dst)] {
            let nt = &self.node_types[t.0];
            if idx >= nt.count {
                return Err(HinError::NodeOutOfRange {
                    node_type: nt.name.clone(),
                    index: idx,
                    count: nt.count,
                });
            }
        }
        if weight > 0.0 {
            self.triplets[link.0].push((src, dst, weight));
        }
        Ok(())
    }

    pub fn build(self) -> TypedGraph {
        let adjacency = self
            .link_types
            .iter()
            .zip(&self.triplets)
            .map(|(lt, trip)| {
                let rows = self.node_types[lt.source.0].count;
                let cols = self.node_types[lt.target.0].count;
                CsrMatrix::from_triplets(rows, cols, trip)
            })
            .collect();
        TypedGraph {
            node_types: self.node_types,
            link_types: self.link_types,
            adjacency,
            augmented: false,
        }
    }
}

/// Network schema: node types as vertices, link types as labelled arcs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub node_types: Vec<String>,
    pub link_types: Vec<LinkType>,
}

impl Schema {
    pub fn node_type_id(&self, name: &str) -> Option<NodeTypeId> {
        self.node_types.iter().position(|n| n == name).map(NodeTypeId)
    }

    pub fn link_type_id(&self, name: &str) -> Option<LinkTypeId> {
        self.link_types.iter().position(|l| l.name == name).map(LinkTypeId)
    }

    pub fn link(&self, id: LinkTypeId) -> &LinkType {
        &self.link_types[id.0]
    }

    pub fn node_name(&self, id: NodeTypeId) -> &str {
        &self.node_types[id.0]
    }

    /// Link types leaving `t`, in id order.
    pub fn out_links(&self, t: NodeTypeId) -> impl Iterator<Item = LinkTypeId> + '_ {
        self.link_types
            .iter()
            .enumerate()
            .filter(move |(_, l)| l.source == t)
            .map(|(i, _)| LinkTypeId(i))
    }

    /// Schema adjacency matrix counting parallel link types.
    pub fn adjacency_counts(&self) -> Vec<Vec<u64>> {
        let n = self.node_types.len();
        let mut a = vec![vec![0u64; n]; n];
        for l in &self.link_types {
            a[l.source.0][l.target.0] += 1;
        }
        a
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "node types:")?;
        for (i, n) in self.node_types.iter().enumerate() {
            writeln!(f, "  {i}\t{n}")?;
        }
        writeln!(f, "link types:")?;
        for (i, l) in self.link_types.iter().enumerate() {
            writeln!(
                f,
                "  {i}\t{}\t{} -> {}",
                l.name, self.node_types[l.source.0], self.node_types[l.target.0]
            )?;
        }
        Ok(())
    }
}

/// Row-stochastic transition matrix of one link type.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix(CsrMatrix);

impl StochasticMatrix {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CsrMatrix {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypedGraph {
    node_types: Vec<NodeType>,
    link_types: Vec<LinkType>,
    adjacency: Vec<CsrMatrix>,
    augmented: bool,
}

impl TypedGraph {
    pub fn node_types(&self) -> &[NodeType] {
        &self.node_types
    }

    pub fn link_types(&self) -> &[LinkType] {
        &self.link_types
    }

    pub fn link(&self, id: LinkTypeId) -> &LinkType {
        &self.link_types[id.0]
    }

    pub fn node_type(&self, id: NodeTypeId) -> &NodeType {
        &self.node_types[id.0]
    }

    pub fn is_augmented(&self) -> bool {
        self.augmented
    }

    pub fn node_type_id(&self, name: &str) -> Option<NodeTypeId> {
        self.node_types.iter().position(|n| n.name == name).map(NodeTypeId)
    }

    pub fn link_type_id(&self, name: &str) -> Option<LinkTypeId> {
        self.link_types.iter().position(|l| l.name == name).map(LinkTypeId)
    }

    /// Number of real nodes of a type.
    pub fn real_count(&self, t: NodeTypeId) -> usize {
        self.node_types[t.0].count
    }

    /// Index space size of a type, hole included once augmented.
    pub fn cardinality(&self, t: NodeTypeId) -> usize {
        self.node_types[t.0].count + usize::from(self.augmented)
    }

    /// Index of the hole node of a type, if augmented.
    pub fn hole(&self, t: NodeTypeId) -> Option<usize> {
        self.augmented.then(|| self.node_types[t.0].count)
    }

    pub fn is_hole(&self, t: NodeTypeId, index: usize) -> bool {
        self.hole(t) == Some(index)
    }

    pub fn weights(&self, link: LinkTypeId) -> &CsrMatrix {
        &self.adjacency[link.0]
    }

    pub fn schema(&self) -> Schema {
        Schema {
            node_types: self.node_types.iter().map(|t| t.name.clone()).collect(),
            link_types: self.link_types.clone(),
        }
    }

    /// Appends one hole node per node type. Real rows with no outgoing weight
    /// get a unit edge to the target type's hole; every hole row gets a single
    /// unit edge to the target hole.
    pub fn augment_with_holes(&self) -> Result<TypedGraph, HinError> {
        if self.augmented {
            return Err(HinError::AlreadyAugmented);
        }
        let adjacency = self
            .link_types
            .iter()
            .zip(&self.adjacency)
            .map(|(lt, w)| {
                let src_hole = self.node_types[lt.source.0].count;
                let dst_hole = self.node_types[lt.target.0].count;
                let mut rows: Vec<Vec<(usize, f64)>> = (0..src_hole)
                    .map(|r| {
                        let row: Vec<(usize, f64)> = w.row_iter(r).collect();
                        if row.is_empty() {
                            vec![(dst_hole, 1.0)]
                        } else {
                            row
                        }
                    })
                    .collect();
                rows.push(vec![(dst_hole, 1.0)]);
                CsrMatrix::from_rows(dst_hole + 1, rows)
            })
            .collect();
        Ok(TypedGraph {
            node_types: self.node_types.clone(),
            link_types: self.link_types.clone(),
            adjacency,
            augmented: true,
        })
    }

    /// Removes hole nodes and every edge touching them.
    pub fn strip_holes(&self) -> Result<TypedGraph, HinError> {
        if !self.augmented {
            return Err(HinError::NotAugmented);
        }
        let adjacency = self
            .link_types
            .iter()
            .zip(&self.adjacency)
            .map(|(lt, w)| {
                let rows: Vec<usize> = (0..self.node_types[lt.source.0].count).collect();
                let cols: Vec<usize> = (0..self.node_types[lt.target.0].count).collect();
                w.submatrix(&rows, &cols)
            })
            .collect();
        Ok(TypedGraph {
            node_types: self.node_types.clone(),
            link_types: self.link_types.clone(),
            adjacency,
            augmented: false,
        })
    }

    /// Row-normalized transition matrix of one link type.
    pub fn stochastic(&self, link: LinkTypeId) -> Result<StochasticMatrix, HinError> {
        if !self.augmented {
            return Err(HinError::NotAugmented);
        }
        Ok(StochasticMatrix(self.adjacency[link.0].row_normalized()))
    }

    /// Replaces every link type from `src` to `dst` by a single link type
    /// named `name` whose weights are the entry-wise sum. The merged type
    /// takes the position of the first replaced one; other link types keep
    /// their relative order.
    pub fn collapse_link_types(
        &self,
        src: NodeTypeId,
        dst: NodeTypeId,
        name: &str,
    ) -> Result<TypedGraph, HinError> {
        let base = if self.augmented { self.strip_holes()? } else { self.clone() };
        let members: Vec<usize> = base
            .link_types
            .iter()
            .enumerate()
            .filter(|(_, l)| l.source == src && l.target == dst)
            .map(|(i, _)| i)
            .collect();
        let Some(&first) = members.first() else {
            return Err(HinError::NoSuchPair(
                self.node_types[src.0].name.clone(),
                self.node_types[dst.0].name.clone(),
            ));
        };
        if base
            .link_types
            .iter()
            .enumerate()
            .any(|(i, l)| l.name == name && !members.contains(&i))
        {
            return Err(HinError::DuplicateType(name.to_string()));
        }
        let summed = members[1..]
            .iter()
            .fold(base.adjacency[first].clone(), |acc, &i| acc.add(&base.adjacency[i]));
        let mut link_types = Vec::new();
        let mut adjacency = Vec::new();
        for (i, (lt, w)) in base.link_types.iter().zip(&base.adjacency).enumerate() {
            if i == first {
                link_types.push(LinkType {
                    name: name.to_string(),
                    source: src,
                    target: dst,
                });
                adjacency.push(summed.clone());
            } else if !members.contains(&i) {
                link_types.push(lt.clone());
                adjacency.push(w.clone());
            }
        }
        let out = TypedGraph {
            node_types: base.node_types,
            link_types,
            adjacency,
            augmented: false,
        };
        if self.augmented {
            out.augment_with_holes()
        } else {
            Ok(out)
        }
    }

    /// Adds a link type whose weight matrix is the transpose of `of`.
    pub fn with_inverse(&self, of: LinkTypeId, name: &str) -> Result<TypedGraph, HinError> {
        if self.augmented {
            return Err(HinError::AlreadyAugmented);
        }
        if self.link_type_id(name).is_some() {
            return Err(HinError::DuplicateType(name.to_string()));
        }
        let lt = &self.link_types[of.0];
        let mut out = self.clone();
        out.link_types.push(LinkType {
            name: name.to_string(),
            source: lt.target,
            target: lt.source,
        });
        out.adjacency.push(self.adjacency[of.0].transpose());
        Ok(out)
    }

    /// Same graph with one link type's weight matrix replaced.
    pub(crate) fn with_weights(&self, link: LinkTypeId, weights: CsrMatrix) -> TypedGraph {
        assert_eq!(weights.shape(), self.adjacency[link.0].shape());
        let mut out = self.clone();
        out.adjacency[link.0] = weights;
        out
    }

    /// Induced subgraph on the given nodes (old indices per node type, in new
    /// index order). Only valid on unaugmented graphs.
    pub(crate) fn induced(&self, keep: &[Vec<usize>]) -> TypedGraph {
        assert!(!self.augmented);
        let node_types = self
            .node_types
            .iter()
            .zip(keep)
            .map(|(t, k)| NodeType {
                name: t.name.clone(),
                count: k.len(),
            })
            .collect();
        let adjacency = self
            .link_types
            .iter()
            .zip(&self.adjacency)
            .map(|(lt, w)| w.submatrix(&keep[lt.source.0], &keep[lt.target.0]))
            .collect();
        TypedGraph {
            node_types,
            link_types: self.link_types.clone(),
            adjacency,
            augmented: false,
        }
    }

    /// Number of stored edges per link type.
    pub fn edge_count(&self, link: LinkTypeId) -> usize {
        self.adjacency[link.0].nnz()
    }

    /// Map from link type name to id.
    pub fn link_index(&self) -> HashMap<&str, LinkTypeId> {
        self.link_types
            .iter()
            .enumerate()
            .map(|(i, l)| (l.name.as_str(), LinkTypeId(i)))
            .collect()
    }
}
