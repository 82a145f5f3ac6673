//! Path-constrained random walks.
//!
//! A walker starts at a node of the meta-path's first node type and, at step
//! `i`, follows only links of the `i`-th link type, choosing among them in
//! proportion to their weights. The table entry `(s, t)` is the probability
//! of ending at `t` when starting from `s`.
//!
//! Without exclusions the table is the product of the per-step stochastic
//! matrices. With exclusions the forbidden node depends on the walk's own
//! history, so each source row is propagated separately over
//! `(remembered slots, current node)` states: the forbidden node is removed
//! from the candidate set, the remaining weights are renormalized, and if
//! nothing remains the mass falls into the hole of that node type.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hin::{NodeTypeId, TypedGraph};
use crate::metapath::{Exclusion, MetaPath, MetaPathError, MetaPathSet};
use crate::sparse::CsrMatrix;

/// Largest number of walk prefixes the exhaustive oracle will visit.
pub const DEFAULT_ORACLE_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PcrwError {
    #[error("graph must be augmented with hole nodes")]
    NotAugmented,
    #[error("meta-path does not fit the graph schema: {0}")]
    SchemaMismatch(#[from] MetaPathError),
    #[error("source node {index} out of range ({count} nodes)")]
    SourceOutOfRange { index: usize, count: usize },
    #[error("path enumeration exceeded budget of {budget} prefixes")]
    PathExplosion { budget: usize },
    #[error("meta-path #{index}: {source}")]
    InPath {
        index: usize,
        #[source]
        source: Box<PcrwError>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcrwResult {
    pub metapath: MetaPath,
    /// Rows: source nodes (hole last). Columns: end nodes (hole last).
    pub table: CsrMatrix,
}

impl PcrwResult {
    /// Writes `src,dst,prob` lines for every stored entry.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "src,dst,prob")?;
        for (s, t, p) in self.table.triplets() {
            writeln!(out, "{s},{t},{p}")?;
        }
        Ok(())
    }
}

fn check(g: &TypedGraph, mp: &MetaPath) -> Result<(), PcrwError> {
    if !g.is_augmented() {
        return Err(PcrwError::NotAugmented);
    }
    mp.check_against(&g.schema())?;
    Ok(())
}

/// Random-walk probability table of `mp` on an augmented graph.
pub fn pcrw(g: &TypedGraph, mp: &MetaPath) -> Result<PcrwResult, PcrwError> {
    check(g, mp)?;
    let exclusions = mp.exclusions();
    let table = if exclusions.is_empty() {
        chained_product(g, mp)
    } else {
        constrained_walk(g, mp, &exclusions)
    };
    Ok(PcrwResult {
        metapath: mp.clone(),
        table,
    })
}

/// Evaluates every meta-path of the set, in order.
pub fn pcrw_batch(g: &TypedGraph, mps: &MetaPathSet) -> Result<Vec<PcrwResult>, PcrwError> {
    mps.paths()
        .par_iter()
        .enumerate()
        .map(|(index, mp)| {
            pcrw(g, mp).map_err(|e| PcrwError::InPath {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

fn chained_product(g: &TypedGraph, mp: &MetaPath) -> CsrMatrix {
    let mut steps = mp.steps().iter();
    let first = steps.next().expect("meta-paths are non-empty");
    let mut frontier = g.weights(*first).row_normalized();
    for &s in steps {
        frontier = frontier.matmul(&g.weights(s).row_normalized());
    }
    frontier
}

/// Slots whose node must be remembered while standing at slot `i`.
fn memory_slots(exclusions: &[Exclusion], i: usize) -> Vec<usize> {
    let mut slots: Vec<usize> = exclusions
        .iter()
        .filter(|e| e.earlier > 0 && e.earlier <= i && i < e.later)
        .map(|e| e.earlier)
        .collect();
    slots.sort_unstable();
    slots.dedup();
    slots
}

fn constrained_walk(g: &TypedGraph, mp: &MetaPath, exclusions: &[Exclusion]) -> CsrMatrix {
    let slots = mp.slot_types();
    let n = mp.len();
    let memory: Vec<Vec<usize>> = (0..=n).map(|i| memory_slots(exclusions, i)).collect();
    let rows = g.cardinality(slots[0]);
    let width = g.cardinality(slots[n]);
    let table_rows: Vec<Vec<(usize, f64)>> = (0..rows)
        .into_par_iter()
        .map(|source| walk_from(g, mp, exclusions, &memory, source))
        .collect();
    CsrMatrix::from_rows(width, table_rows)
}

type WalkState = BTreeMap<(Vec<usize>, usize), f64>;

fn walk_from(
    g: &TypedGraph,
    mp: &MetaPath,
    exclusions: &[Exclusion],
    memory: &[Vec<usize>],
    source: usize,
) -> Vec<(usize, f64)> {
    let slots = mp.slot_types();
    let mut state: WalkState = BTreeMap::new();
    state.insert((Vec::new(), source), 1.0);
    let mut forbidden = Vec::new();
    for (step, &link) in mp.steps().iter().enumerate() {
        let i = step + 1;
        let weights = g.weights(link);
        let slot_type = slots[i];
        let hole = g.hole(slot_type).expect("augmented");
        let refs: Vec<usize> = exclusions
            .iter()
            .filter(|e| e.later == i)
            .map(|e| e.earlier)
            .collect();
        let mut next: WalkState = BTreeMap::new();
        for ((mem, node), p) in state {
            forbidden.clear();
            for &a in &refs {
                let held = if a == 0 {
                    source
                } else {
                    let pos = memory[i - 1].binary_search(&a).expect("slot remembered");
                    mem[pos]
                };
                if !g.is_hole(slot_type, held) {
                    forbidden.push(held);
                }
            }
            let carry = |c: usize| -> Vec<usize> {
                memory[i]
                    .iter()
                    .map(|&a| {
                        if a == i {
                            c
                        } else {
                            mem[memory[i - 1].binary_search(&a).expect("slot remembered")]
                        }
                    })
                    .collect()
            };
            let total: f64 = weights
                .row_iter(node)
                .filter(|(c, _)| !forbidden.contains(c))
                .map(|(_, w)| w)
                .sum();
            if total > 0.0 {
                for (c, w) in weights.row_iter(node) {
                    if !forbidden.contains(&c) {
                        *next.entry((carry(c), c)).or_insert(0.0) += p * w / total;
                    }
                }
            } else {
                *next.entry((carry(hole), hole)).or_insert(0.0) += p;
            }
        }
        state = next;
    }
    state.into_iter().map(|((_, node), p)| (node, p)).collect()
}

/// Exhaustive path-sum reference: enumerates every concrete walk that
/// satisfies `mp` from `src`, multiplying per-step renormalized transition
/// probabilities. Returns a dense distribution over the end node type.
pub fn pcrw_oracle(g: &TypedGraph, mp: &MetaPath, src: usize) -> Result<Vec<f64>, PcrwError> {
    pcrw_oracle_with_budget(g, mp, src, DEFAULT_ORACLE_BUDGET)
}

pub fn pcrw_oracle_with_budget(
    g: &TypedGraph,
    mp: &MetaPath,
    src: usize,
    budget: usize,
) -> Result<Vec<f64>, PcrwError> {
    check(g, mp)?;
    let first: NodeTypeId = mp.source_type();
    let count = g.cardinality(first);
    if src >= count {
        return Err(PcrwError::SourceOutOfRange { index: src, count });
    }
    let mut dfs = Dfs {
        g,
        mp,
        exclusions: mp.exclusions(),
        dist: vec![0.0; g.cardinality(mp.target_type())],
        visited: 0,
        budget,
    };
    let mut path = vec![src];
    dfs.descend(&mut path, 1.0)?;
    Ok(dfs.dist)
}

struct Dfs<'a> {
    g: &'a TypedGraph,
    mp: &'a MetaPath,
    exclusions: Vec<Exclusion>,
    dist: Vec<f64>,
    visited: usize,
    budget: usize,
}

impl Dfs<'_> {
    fn descend(&mut self, path: &mut Vec<usize>, prob: f64) -> Result<(), PcrwError> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(PcrwError::PathExplosion { budget: self.budget });
        }
        let i = path.len();
        if i == self.mp.len() + 1 {
            self.dist[path[i - 1]] += prob;
            return Ok(());
        }
        let slot_type = self.mp.slot_types()[i];
        let weights = self.g.weights(self.mp.steps()[i - 1]);
        let here = path[i - 1];
        let banned: Vec<usize> = self
            .exclusions
            .iter()
            .filter(|e| e.later == i)
            .map(|e| path[e.earlier])
            .filter(|&v| !self.g.is_hole(slot_type, v))
            .collect();
        let candidates: Vec<(usize, f64)> = weights
            .row_iter(here)
            .filter(|(c, _)| !banned.contains(c))
            .collect();
        let total: f64 = candidates.iter().map(|(_, w)| w).sum();
        if candidates.is_empty() || total <= 0.0 {
            path.push(self.g.hole(slot_type).expect("augmented"));
            self.descend(path, prob)?;
            path.pop();
            return Ok(());
        }
        for (c, w) in candidates {
            path.push(c);
            self.descend(path, prob * w / total)?;
            path.pop();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{chain_graph, reply_example};

    fn approx(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn reply_example_rows() {
        let g = reply_example().augment_with_holes().unwrap();
        let s = g.schema();
        let u2 = 1;
        let dense = |text: &str| {
            let mp = MetaPath::parse(text, &s).unwrap();
            let t = pcrw(&g, &mp).unwrap().table.to_dense();
            t[u2][..4].to_vec()
        };
        assert!(approx(&dense("UH"), &[0.5, 0.5, 0.0, 0.0], 1e-12));
        let third = 1.0 / 3.0;
        assert!(approx(&dense("RP-UH"), &[third, third, third, 0.0], 1e-12));
        assert!(approx(&dense("RP-RP-UH"), &[0.0, 0.0, 0.5, 0.5], 1e-12));
    }

    #[test]
    fn oracle_matches_reply_example() {
        let g = reply_example().augment_with_holes().unwrap();
        let mp = MetaPath::parse("RP-UH", &g.schema()).unwrap();
        let d = pcrw_oracle(&g, &mp, 1).unwrap();
        let third = 1.0 / 3.0;
        assert!(approx(&d, &[third, third, third, 0.0, 0.0], 1e-12));
    }

    #[test]
    fn single_chain_is_deterministic() {
        let g = chain_graph().augment_with_holes().unwrap();
        let mp = MetaPath::parse("AB-BC", &g.schema()).unwrap();
        let t = pcrw(&g, &mp).unwrap().table;
        assert_eq!(t.get(0, 0), 1.0);
        assert_eq!(t.get(1, 1), 1.0, "hole row stays in the hole");
    }

    #[test]
    fn sole_candidate_forbidden_routes_to_hole() {
        // u0 <-> u1 only: RP-RP from u0 must leave u1 to someone other than u0.
        let mut b = crate::hin::GraphBuilder::new();
        b.node_type("user", 2).unwrap();
        let rp = b.link_type("RP", "user", "user").unwrap();
        b.edge(rp, 0, 1, 1.0).unwrap();
        b.edge(rp, 1, 0, 1.0).unwrap();
        let g = b.build().augment_with_holes().unwrap();
        let mp = MetaPath::parse("RP-RP !(0,2)", &g.schema()).unwrap();
        let t = pcrw(&g, &mp).unwrap().table;
        assert_eq!(t.get(0, 2), 1.0);
        assert_eq!(pcrw_oracle(&g, &mp, 0).unwrap(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn requires_augmentation() {
        let g = reply_example();
        let mp = MetaPath::parse("UH", &g.schema()).unwrap();
        assert_eq!(pcrw(&g, &mp).unwrap_err(), PcrwError::NotAugmented);
    }

    #[test]
    fn oracle_budget_is_enforced() {
        let g = reply_example().augment_with_holes().unwrap();
        let mp = MetaPath::parse("RP-RP-RP-UH", &g.schema()).unwrap();
        assert_eq!(
            pcrw_oracle_with_budget(&g, &mp, 0, 3).unwrap_err(),
            PcrwError::PathExplosion { budget: 3 }
        );
    }

    #[test]
    fn batch_preserves_order_and_reports_index() {
        let g = reply_example().augment_with_holes().unwrap();
        let s = g.schema();
        let user = s.node_type_id("user").unwrap();
        let hashtag = s.node_type_id("hashtag").unwrap();
        let set = crate::metapath::enumerate_metapaths(&s, user, hashtag, 2, s.link_type_id("UH"));
        let batch = pcrw_batch(&g, &set).unwrap();
        assert_eq!(batch.len(), 3);
        for (r, mp) in batch.iter().zip(set.iter()) {
            assert_eq!(r, &pcrw(&g, mp).unwrap());
        }
        let empty = MetaPathSet::empty(user, hashtag);
        assert!(pcrw_batch(&g, &empty).unwrap().is_empty());
        let raw = reply_example();
        assert!(matches!(
            pcrw_batch(&raw, &set).unwrap_err(),
            PcrwError::InPath { index: 0, .. }
        ));
    }

    #[test]
    fn csv_dump_lists_triples() {
        let g = reply_example().augment_with_holes().unwrap();
        let mp = MetaPath::parse("UH", &g.schema()).unwrap();
        let mut buf = Vec::new();
        pcrw(&g, &mp).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("src,dst,prob\n"));
        assert!(text.contains("\n1,0,0.5\n"));
    }
}
