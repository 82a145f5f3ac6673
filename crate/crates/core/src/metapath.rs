//! Meta-paths: schema-level sequences of link types, with optional
//! "must differ" constraints between node slots.
//!
//! Concrete syntax is `LINK ( '-' LINK )*` followed by any number of clauses
//! `!(a,b)` (slot `b` must differ from slot `a`) and an optional `!none`
//! which switches off the automatic exclusions, e.g. `RP-RP-UH` or
//! `AP-PP-PPinv-PA !(1,3)`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hin::{LinkTypeId, NodeTypeId, Schema};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetaPathError {
    #[error("empty meta-path")]
    Empty,
    #[error("unknown link type `{name}` at position {position}")]
    UnknownLinkType { name: String, position: usize },
    #[error("step {step} (`{link}`) starts at `{found}` but the previous step ends at `{expected}`")]
    ChainMismatch {
        step: usize,
        link: String,
        expected: String,
        found: String,
    },
    #[error("bad exclusion ({earlier},{later}): {reason}")]
    BadExclusion {
        earlier: usize,
        later: usize,
        reason: String,
    },
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("meta-path `{path}` does not run from `{expected_src}` to `{expected_dst}`")]
    EndpointMismatch {
        path: String,
        expected_src: String,
        expected_dst: String,
    },
}

/// The node at slot `later` must differ from the node at slot `earlier`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Exclusion {
    pub earlier: usize,
    pub later: usize,
}

impl Exclusion {
    pub fn new(earlier: usize, later: usize) -> Self {
        Self { earlier, later }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaPath {
    steps: Vec<LinkTypeId>,
    /// Node type of every slot, `steps.len() + 1` entries.
    slots: Vec<NodeTypeId>,
    names: Vec<String>,
    explicit: Vec<Exclusion>,
    auto_exclusions: bool,
}

impl MetaPath {
    /// Chain-validated meta-path with automatic exclusions switched on.
    pub fn new(schema: &Schema, steps: &[LinkTypeId]) -> Result<Self, MetaPathError> {
        let first = steps.first().ok_or(MetaPathError::Empty)?;
        let mut slots = vec![schema.link(*first).source];
        for (i, &s) in steps.iter().enumerate() {
            let lt = schema.link(s);
            let prev = *slots.last().unwrap();
            if lt.source != prev {
                return Err(MetaPathError::ChainMismatch {
                    step: i,
                    link: lt.name.clone(),
                    expected: schema.node_name(prev).to_string(),
                    found: schema.node_name(lt.source).to_string(),
                });
            }
            slots.push(lt.target);
        }
        Ok(Self {
            steps: steps.to_vec(),
            slots,
            names: steps.iter().map(|&s| schema.link(s).name.clone()).collect(),
            explicit: Vec::new(),
            auto_exclusions: true,
        })
    }

    pub fn parse(text: &str, schema: &Schema) -> Result<Self, MetaPathError> {
        let (path_part, clauses) = match text.find('!') {
            Some(i) => (&text[..i], &text[i..]),
            None => (text, ""),
        };
        let lead = path_part.len() - path_part.trim_start().len();
        let trimmed = path_part.trim();
        if trimmed.is_empty() {
            return Err(MetaPathError::Empty);
        }
        let mut steps = Vec::new();
        let mut offset = lead;
        for token in trimmed.split('-') {
            let name = token.trim();
            let position = offset + (token.len() - token.trim_start().len());
            if name.is_empty() {
                return Err(MetaPathError::Syntax {
                    position,
                    message: "empty link type name".into(),
                });
            }
            let id = schema.link_type_id(name).ok_or_else(|| MetaPathError::UnknownLinkType {
                name: name.to_string(),
                position,
            })?;
            steps.push(id);
            offset += token.len() + 1;
        }
        let mut mp = Self::new(schema, &steps)?;
        let base = path_part.len();
        for (position, clause) in split_clauses(clauses) {
            let position = base + position;
            let body = clause[1..].trim();
            if body == "none" {
                mp.auto_exclusions = false;
                continue;
            }
            let inner = body
                .strip_prefix('(')
                .and_then(|b| b.strip_suffix(')'))
                .ok_or_else(|| MetaPathError::Syntax {
                    position,
                    message: format!("expected `!(a,b)` or `!none`, found `{clause}`"),
                })?;
            let nums: Vec<&str> = inner.split(',').map(str::trim).collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| MetaPathError::Syntax {
                    position,
                    message: format!("`{s}` is not a slot index"),
                })
            };
            if nums.len() != 2 {
                return Err(MetaPathError::Syntax {
                    position,
                    message: "exclusion needs exactly two slot indices".into(),
                });
            }
            mp = mp.with_exclusion(Exclusion::new(parse(nums[0])?, parse(nums[1])?))?;
        }
        Ok(mp)
    }

    /// Adds an explicit exclusion. Both slots must hold the same node type.
    pub fn with_exclusion(mut self, ex: Exclusion) -> Result<Self, MetaPathError> {
        let bad = |reason: &str| MetaPathError::BadExclusion {
            earlier: ex.earlier,
            later: ex.later,
            reason: reason.to_string(),
        };
        if ex.earlier >= ex.later {
            return Err(bad("first slot must precede the second"));
        }
        if ex.later >= self.slots.len() {
            return Err(bad("slot beyond the end of the path"));
        }
        if self.slots[ex.earlier] != self.slots[ex.later] {
            return Err(bad("slots hold different node types"));
        }
        if !self.explicit.contains(&ex) {
            self.explicit.push(ex);
        }
        Ok(self)
    }

    pub fn without_auto_exclusions(mut self) -> Self {
        self.auto_exclusions = false;
        self
    }

    pub fn with_default_exclusions(mut self) -> Self {
        self.auto_exclusions = true;
        self
    }

    pub fn auto_exclusions(&self) -> bool {
        self.auto_exclusions
    }

    /// Exclusions implied by the shape of the path: the walker may not sit on
    /// its start node at the penultimate slot, and on `T0 T1 X T1 T0` paths
    /// slot 3 may not repeat slot 1.
    pub fn default_exclusions(&self) -> Vec<Exclusion> {
        let n = self.steps.len();
        let mut out = Vec::new();
        if n >= 2 && self.slots[n - 1] == self.slots[0] {
            out.push(Exclusion::new(0, n - 1));
        }
        if n == 4 && self.slots[0] == self.slots[4] && self.slots[1] == self.slots[3] {
            out.push(Exclusion::new(1, 3));
        }
        out
    }

    /// Effective exclusions (explicit plus automatic), sorted and deduplicated.
    pub fn exclusions(&self) -> Vec<Exclusion> {
        let mut all = self.explicit.clone();
        if self.auto_exclusions {
            all.extend(self.default_exclusions());
        }
        all.sort();
        all.dedup();
        all
    }

    pub fn explicit_exclusions(&self) -> &[Exclusion] {
        &self.explicit
    }

    pub fn steps(&self) -> &[LinkTypeId] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn slot_types(&self) -> &[NodeTypeId] {
        &self.slots
    }

    pub fn source_type(&self) -> NodeTypeId {
        self.slots[0]
    }

    pub fn target_type(&self) -> NodeTypeId {
        *self.slots.last().unwrap()
    }

    /// Checks the path against another schema (same link ids, same chain).
    pub fn check_against(&self, schema: &Schema) -> Result<(), MetaPathError> {
        for (i, &s) in self.steps.iter().enumerate() {
            if s.0 >= schema.link_types.len() || schema.link(s).name != self.names[i] {
                return Err(MetaPathError::UnknownLinkType {
                    name: self.names[i].clone(),
                    position: i,
                });
            }
        }
        let fresh = Self::new(schema, &self.steps)?;
        if fresh.slots != self.slots {
            return Err(MetaPathError::ChainMismatch {
                step: 0,
                link: self.names[0].clone(),
                expected: format!("{:?}", self.slots),
                found: format!("{:?}", fresh.slots),
            });
        }
        Ok(())
    }
}

fn split_clauses(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let starts: Vec<usize> = text.match_indices('!').map(|(i, _)| i).collect();
    for (k, &s) in starts.iter().enumerate() {
        let end = starts.get(k + 1).copied().unwrap_or(text.len());
        out.push((s, text[s..end].trim_end()));
    }
    out
}

impl fmt::Display for MetaPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.names.join("-"))?;
        for ex in &self.explicit {
            write!(f, " !({},{})", ex.earlier, ex.later)?;
        }
        if !self.auto_exclusions {
            write!(f, " !none")?;
        }
        Ok(())
    }
}

/// Regressor set: meta-paths sharing one source and one target node type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaPathSet {
    source: NodeTypeId,
    target: NodeTypeId,
    paths: Vec<MetaPath>,
}

impl MetaPathSet {
    pub fn empty(source: NodeTypeId, target: NodeTypeId) -> Self {
        Self {
            source,
            target,
            paths: Vec::new(),
        }
    }

    pub fn new(
        schema: &Schema,
        source: NodeTypeId,
        target: NodeTypeId,
        paths: Vec<MetaPath>,
    ) -> Result<Self, MetaPathError> {
        for p in &paths {
            if p.source_type() != source || p.target_type() != target {
                return Err(MetaPathError::EndpointMismatch {
                    path: p.to_string(),
                    expected_src: schema.node_name(source).to_string(),
                    expected_dst: schema.node_name(target).to_string(),
                });
            }
        }
        Ok(Self { source, target, paths })
    }

    pub fn source_type(&self) -> NodeTypeId {
        self.source
    }

    pub fn target_type(&self) -> NodeTypeId {
        self.target
    }

    pub fn paths(&self) -> &[MetaPath] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MetaPath> {
        self.paths.iter()
    }
}

impl<'a> IntoIterator for &'a MetaPathSet {
    type Item = &'a MetaPath;
    type IntoIter = std::slice::Iter<'a, MetaPath>;

    fn into_iter(self) -> Self::IntoIter {
        self.paths.iter()
    }
}

/// All meta-paths of length `1..=max_len` from `src` to `dst`, except the
/// single-step path `exclude`. Ordered by length, then lexicographically by
/// link type id.
pub fn enumerate_metapaths(
    schema: &Schema,
    src: NodeTypeId,
    dst: NodeTypeId,
    max_len: usize,
    exclude: Option<LinkTypeId>,
) -> MetaPathSet {
    let mut paths = Vec::new();
    let mut stack = Vec::new();
    for len in 1..=max_len {
        walk(schema, src, dst, len, &mut stack, &mut |steps: &[LinkTypeId]| {
            if !(steps.len() == 1 && Some(steps[0]) == exclude) {
                paths.push(MetaPath::new(schema, steps).expect("enumerated paths are chains"));
            }
        });
    }
    MetaPathSet {
        source: src,
        target: dst,
        paths,
    }
}

fn walk(
    schema: &Schema,
    at: NodeTypeId,
    dst: NodeTypeId,
    remaining: usize,
    stack: &mut Vec<LinkTypeId>,
    emit: &mut dyn FnMut(&[LinkTypeId]),
) {
    if remaining == 0 {
        if at == dst {
            emit(stack);
        }
        return;
    }
    for l in schema.out_links(at).collect::<Vec<_>>() {
        stack.push(l);
        walk(schema, schema.link(l).target, dst, remaining - 1, stack, emit);
        stack.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::twitter_schema;

    fn bib_schema() -> Schema {
        let mut b = crate::hin::GraphBuilder::new();
        for t in ["author", "paper", "venue"] {
            b.node_type(t, 1).unwrap();
        }
        b.link_type("AP", "author", "paper").unwrap();
        b.link_type("PA", "paper", "author").unwrap();
        b.link_type("PV", "paper", "venue").unwrap();
        b.link_type("VP", "venue", "paper").unwrap();
        b.link_type("PP", "paper", "paper").unwrap();
        b.link_type("PPinv", "paper", "paper").unwrap();
        b.build().schema()
    }

    #[test]
    fn parse_twitter_paths() {
        let s = twitter_schema();
        let mp = MetaPath::parse("RT-UH", &s).unwrap();
        assert_eq!(mp.len(), 2);
        let names: Vec<&str> = mp.slot_types().iter().map(|&t| s.node_name(t)).collect();
        assert_eq!(names, ["user", "user", "hashtag"]);
        assert!(MetaPath::parse("RT-RT", &s).is_ok());
        assert!(matches!(
            MetaPath::parse("UH-RT", &s),
            Err(MetaPathError::ChainMismatch { step: 1, .. })
        ));
        assert_eq!(
            MetaPath::parse("RT-XX", &s),
            Err(MetaPathError::UnknownLinkType {
                name: "XX".into(),
                position: 3
            })
        );
        assert!(matches!(MetaPath::parse("RT--UH", &s), Err(MetaPathError::Syntax { .. })));
        assert_eq!(MetaPath::parse("  ", &s), Err(MetaPathError::Empty));
    }

    #[test]
    fn parse_exclusion_clauses() {
        let s = bib_schema();
        let mp = MetaPath::parse("AP-PP-PPinv-PA !(1,3)", &s).unwrap();
        assert_eq!(mp.explicit_exclusions(), &[Exclusion::new(1, 3)]);
        assert_eq!(mp.to_string(), "AP-PP-PPinv-PA !(1,3)");
        let off = MetaPath::parse("AP-PA !none", &s).unwrap();
        assert!(!off.auto_exclusions());
        assert!(matches!(
            MetaPath::parse("AP-PV !(0,2)", &s),
            Err(MetaPathError::BadExclusion { .. })
        ));
        assert!(matches!(
            MetaPath::parse("AP-PA !(2,0)", &s),
            Err(MetaPathError::BadExclusion { .. })
        ));
        assert!(matches!(MetaPath::parse("AP-PA !(0,x)", &s), Err(MetaPathError::Syntax { .. })));
        assert!(matches!(MetaPath::parse("AP-PA !foo", &s), Err(MetaPathError::Syntax { .. })));
    }

    #[test]
    fn default_exclusion_rules() {
        let t = twitter_schema();
        let rprp = MetaPath::parse("RP-RP-UH", &t).unwrap();
        assert_eq!(rprp.exclusions(), vec![Exclusion::new(0, 2)]);
        // V1 is a user, so the walker may not retweet itself
        assert_eq!(MetaPath::parse("RT-UH", &t).unwrap().exclusions(), vec![Exclusion::new(0, 1)]);
        assert!(MetaPath::parse("UH", &t).unwrap().exclusions().is_empty());
        assert!(rprp.clone().without_auto_exclusions().exclusions().is_empty());

        let b = bib_schema();
        let apvpa = MetaPath::parse("AP-PV-VP-PA", &b).unwrap();
        assert_eq!(apvpa.exclusions(), vec![Exclusion::new(1, 3)]);
        let apapa = MetaPath::parse("AP-PA-AP-PA", &b).unwrap();
        assert_eq!(apapa.exclusions(), vec![Exclusion::new(1, 3)]);
        // A P P A: penultimate slot is a paper, nothing to exclude
        assert!(MetaPath::parse("AP-PP-PA", &b).unwrap().exclusions().is_empty());
    }

    #[test]
    fn enumerate_length_two() {
        let s = twitter_schema();
        let user = s.node_type_id("user").unwrap();
        let hashtag = s.node_type_id("hashtag").unwrap();
        let uh = s.link_type_id("UH");
        let set = enumerate_metapaths(&s, user, hashtag, 2, uh);
        let names: Vec<String> = set.iter().map(|p| p.to_string()).collect();
        assert_eq!(names, ["RT-UH", "RP-UH", "MT-UH"]);
        assert!(enumerate_metapaths(&s, user, hashtag, 1, uh).is_empty());
        assert_eq!(enumerate_metapaths(&s, user, hashtag, 3, uh).len(), 12);
    }

    #[test]
    fn set_rejects_mixed_endpoints() {
        let s = twitter_schema();
        let user = s.node_type_id("user").unwrap();
        let hashtag = s.node_type_id("hashtag").unwrap();
        let rt = MetaPath::parse("RT", &s).unwrap();
        assert!(MetaPathSet::new(&s, user, hashtag, vec![rt]).is_err());
    }
}
