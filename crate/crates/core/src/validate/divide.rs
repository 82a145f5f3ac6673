use serde::{Deserialize, Serialize};

use super::ValidateError;
use crate::hin::{HinError, NodeTypeId, TypedGraph};
use crate::metapath::MetaPath;

/// Category label of every real node of the pivot type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Categorization {
    pub labels: Vec<String>,
    /// Index into `labels` per pivot node; `None` marks an uncategorized node.
    pub assignment: Vec<Option<usize>>,
}

impl Categorization {
    /// Builds the label list in first-seen order.
    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = Option<S>>,
        S: AsRef<str>,
    {
        let mut names: Vec<String> = Vec::new();
        let assignment = labels
            .into_iter()
            .map(|l| {
                l.map(|l| {
                    let l = l.as_ref();
                    names.iter().position(|n| n == l).unwrap_or_else(|| {
                        names.push(l.to_string());
                        names.len() - 1
                    })
                })
            })
            .collect();
        Self {
            labels: names,
            assignment,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryGraph {
    pub category: String,
    /// Unaugmented sub-network, reindexed.
    pub graph: TypedGraph,
    /// Per node type, the original index of every kept node.
    pub node_maps: Vec<Vec<usize>>,
    /// The category has no pivot nodes.
    pub empty: bool,
}

fn successors(g: &TypedGraph, mp: &MetaPath, step: usize, from: &[bool]) -> Vec<bool> {
    let link = mp.steps()[step];
    let w = g.weights(link);
    let mut out = vec![false; w.cols()];
    for (s, _) in from.iter().enumerate().filter(|(_, &on)| on) {
        for &t in w.row(s).0 {
            out[t] = true;
        }
    }
    out
}

fn predecessors(g: &TypedGraph, mp: &MetaPath, step: usize, to: &[bool], within: &[bool]) -> Vec<bool> {
    let w = g.weights(mp.steps()[step]);
    (0..w.rows())
        .map(|s| within[s] && w.row(s).0.iter().any(|&t| to[t]))
        .collect()
}

/// Splits the pivot node type by category. For category `r` the sub-network
/// keeps the pivot nodes of `r`, the anchor path's source nodes that reach
/// one of them along the path, the target nodes reached from them, and every
/// node of the remaining types; edges are those induced on the kept nodes.
/// The pivot slot is the first slot of the anchor path with the pivot type.
pub fn divide_by_category(
    g: &TypedGraph,
    pivot: NodeTypeId,
    categories: &Categorization,
    anchor: &MetaPath,
) -> Result<Vec<CategoryGraph>, ValidateError> {
    if g.is_augmented() {
        return Err(HinError::AlreadyAugmented.into());
    }
    anchor.check_against(&g.schema())?;
    let pivot_name = || g.node_type(pivot).name.clone();
    let slots = anchor.slot_types();
    let k = slots
        .iter()
        .position(|&t| t == pivot)
        .ok_or_else(|| ValidateError::PivotNotOnPath(pivot_name()))?;
    let count = g.real_count(pivot);
    if categories.assignment.len() != count {
        return Err(ValidateError::CategorizationLength {
            expected: count,
            found: categories.assignment.len(),
        });
    }
    for (node, a) in categories.assignment.iter().enumerate() {
        match *a {
            None => return Err(ValidateError::UncategorizedNode { node }),
            Some(c) if c >= categories.labels.len() => {
                return Err(ValidateError::UnknownCategory { node, category: c })
            }
            _ => {}
        }
    }

    let n = anchor.len();
    // forward reachability from every source node
    let mut reach = vec![vec![true; g.real_count(slots[0])]];
    for s in 0..n {
        let next = successors(g, anchor, s, &reach[s]);
        reach.push(next);
    }

    categories
        .labels
        .iter()
        .enumerate()
        .map(|(r, label)| {
            let members: Vec<bool> = categories.assignment.iter().map(|&a| a == Some(r)).collect();
            let valid: Vec<bool> = members.iter().zip(&reach[k]).map(|(&m, &on)| m && on).collect();
            // walk back to the source slot and forward to the target slot
            let mut back = valid.clone();
            for s in (0..k).rev() {
                back = predecessors(g, anchor, s, &back, &reach[s]);
            }
            let mut fwd = valid;
            for s in k..n {
                fwd = successors(g, anchor, s, &fwd);
            }

            let mut keep: Vec<Vec<usize>> = g
                .node_types()
                .iter()
                .map(|t| (0..t.count).collect())
                .collect();
            let (src_t, dst_t) = (slots[0], slots[n]);
            let pick = |mask: &[bool]| (0..mask.len()).filter(|&i| mask[i]).collect::<Vec<_>>();
            if src_t == dst_t {
                let union: Vec<bool> = back.iter().zip(&fwd).map(|(&a, &b)| a || b).collect();
                keep[src_t.0] = pick(&union);
            } else {
                keep[src_t.0] = pick(&back);
                keep[dst_t.0] = pick(&fwd);
            }
            keep[pivot.0] = pick(&members);
            let empty = keep[pivot.0].is_empty();
            Ok(CategoryGraph {
                category: label.clone(),
                graph: g.induced(&keep),
                node_maps: keep,
                empty,
            })
        })
        .collect()
}
