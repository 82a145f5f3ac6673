use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ValidateError;
use crate::hin::{HinError, LinkTypeId, TypedGraph};
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullMode {
    /// Permute target endpoints across edges; keeps out-degrees and the
    /// weights leaving every source.
    #[default]
    OutDegree,
    /// Random double-edge swaps; keeps in- and out-degrees.
    InOutDegree,
}

/// Edge list of one link type with a multiplicity index for duplicate and
/// self-loop checks.
struct Rewiring {
    src: Vec<usize>,
    dst: Vec<usize>,
    weight: Vec<f64>,
    count: HashMap<(usize, usize), usize>,
    /// Self-loops are only forbidden on same-type links that had none.
    forbid_loops: bool,
}

impl Rewiring {
    fn new(w: &CsrMatrix, same_type: bool) -> Self {
        let t = w.triplets();
        let src: Vec<usize> = t.iter().map(|e| e.0).collect();
        let dst: Vec<usize> = t.iter().map(|e| e.1).collect();
        let weight = t.iter().map(|e| e.2).collect();
        let forbid_loops = same_type && !src.iter().zip(&dst).any(|(s, d)| s == d);
        let mut r = Self {
            src,
            dst,
            weight,
            count: HashMap::new(),
            forbid_loops,
        };
        r.recount();
        r
    }

    fn recount(&mut self) {
        self.count.clear();
        for (&s, &d) in self.src.iter().zip(&self.dst) {
            *self.count.entry((s, d)).or_default() += 1;
        }
    }

    fn is_loop(&self, s: usize, d: usize) -> bool {
        self.forbid_loops && s == d
    }

    fn is_bad(&self, i: usize) -> bool {
        let (s, d) = (self.src[i], self.dst[i]);
        self.count[&(s, d)] > 1 || self.is_loop(s, d)
    }

    /// Exchanges the targets of edges `i` and `j` if neither new pair is a
    /// duplicate or a forbidden self-loop.
    fn try_swap(&mut self, i: usize, j: usize) -> bool {
        let (si, di, sj, dj) = (self.src[i], self.dst[i], self.src[j], self.dst[j]);
        if si == sj || di == dj {
            return false;
        }
        let free = |s, d| self.count.get(&(s, d)).copied().unwrap_or(0) == 0;
        if !free(si, dj) || !free(sj, di) || self.is_loop(si, dj) || self.is_loop(sj, di) {
            return false;
        }
        for key in [(si, di), (sj, dj)] {
            let c = self.count.get_mut(&key).expect("present");
            *c -= 1;
            if *c == 0 {
                self.count.remove(&key);
            }
        }
        *self.count.entry((si, dj)).or_default() += 1;
        *self.count.entry((sj, di)).or_default() += 1;
        self.dst.swap(i, j);
        true
    }

    fn into_matrix(self, rows: usize, cols: usize) -> CsrMatrix {
        let t: Vec<(usize, usize, f64)> = (0..self.src.len())
            .map(|i| (self.src[i], self.dst[i], self.weight[i]))
            .collect();
        CsrMatrix::from_triplets(rows, cols, &t)
    }
}

fn reshuffle(w: &CsrMatrix, same_type: bool, mode: NullMode, rng: &mut impl Rng) -> Option<CsrMatrix> {
    let mut r = Rewiring::new(w, same_type);
    let m = r.src.len();
    match mode {
        NullMode::OutDegree => {
            r.dst.shuffle(rng);
            r.recount();
            // a permutation can collide two edges of one source on the same
            // target; repair by swaps that clear the conflict
            let mut budget = 100 * m;
            loop {
                let bad: Vec<usize> = (0..m).filter(|&i| r.is_bad(i)).collect();
                if bad.is_empty() {
                    break;
                }
                for i in bad {
                    if !r.is_bad(i) {
                        continue;
                    }
                    if budget == 0 {
                        return None;
                    }
                    budget -= 1;
                    let j = rng.random_range(0..m);
                    r.try_swap(i, j);
                }
            }
        }
        NullMode::InOutDegree => {
            for _ in 0..10 * m {
                let i = rng.random_range(0..m);
                let j = rng.random_range(0..m);
                r.try_swap(i, j);
            }
        }
    }
    Some(r.into_matrix(w.rows(), w.cols()))
}

/// Reshuffles one link type of an unaugmented graph; all other link types
/// are untouched. Deterministic given `seed`.
pub fn null_model(g: &TypedGraph, link: LinkTypeId, mode: NullMode, seed: u64) -> Result<TypedGraph, ValidateError> {
    null_model_links(g, &[link], mode, seed)
}

/// Reshuffles several link types in the given order from one seeded stream.
pub fn null_model_links(
    g: &TypedGraph,
    links: &[LinkTypeId],
    mode: NullMode,
    seed: u64,
) -> Result<TypedGraph, ValidateError> {
    if g.is_augmented() {
        return Err(HinError::AlreadyAugmented.into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = g.clone();
    for &link in links {
        let lt = g.link(link);
        let w = g.weights(link);
        if w.nnz() < 2 {
            return Err(ValidateError::TooFewEdges {
                link: lt.name.clone(),
                count: w.nnz(),
            });
        }
        let shuffled = reshuffle(w, lt.source == lt.target, mode, &mut rng)
            .ok_or_else(|| ValidateError::RewireFailed { link: lt.name.clone() })?;
        out = out.with_weights(link, shuffled);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{chain_graph, planted_twitter, random_twitter, PlantedConfig};

    const RT: LinkTypeId = LinkTypeId(0);
    const UH: LinkTypeId = LinkTypeId(3);

    fn out_profile(w: &CsrMatrix) -> Vec<Vec<u64>> {
        (0..w.rows())
            .map(|r| {
                let mut v: Vec<u64> = w.row(r).1.iter().map(|x| x.to_bits()).collect();
                v.sort_unstable();
                v
            })
            .collect()
    }

    fn in_degrees(w: &CsrMatrix) -> Vec<usize> {
        let t = w.transpose();
        (0..t.rows()).map(|r| t.row(r).0.len()).collect()
    }

    #[test]
    fn out_degree_mode_keeps_source_weights() {
        let g = random_twitter(7, 60, 20, 4);
        for link in [RT, UH] {
            let n = null_model(&g, link, NullMode::OutDegree, 11).unwrap();
            let (a, b) = (g.weights(link), n.weights(link));
            assert_eq!(out_profile(a), out_profile(b));
            assert_eq!(a.nnz(), b.nnz());
            assert_ne!(a, b);
            if link == RT {
                assert!((0..b.rows()).all(|r| b.get(r, r) == 0.0), "no new self-loops");
            }
            for other in 0..g.link_types().len() {
                if other != link.0 {
                    assert_eq!(g.weights(LinkTypeId(other)), n.weights(LinkTypeId(other)));
                }
            }
            let aug = n.augment_with_holes().unwrap();
            for s in aug.stochastic(link).unwrap().matrix().row_sums() {
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn in_out_mode_keeps_both_degree_sequences() {
        let g = planted_twitter(2, &PlantedConfig::default());
        let n = null_model(&g, RT, NullMode::InOutDegree, 5).unwrap();
        let (a, b) = (g.weights(RT), n.weights(RT));
        assert_eq!(in_degrees(a), in_degrees(b));
        let deg = |w: &CsrMatrix| (0..w.rows()).map(|r| w.row(r).0.len()).collect::<Vec<_>>();
        assert_eq!(deg(a), deg(b));
        assert_ne!(a, b);
    }

    #[test]
    fn seeded() {
        let g = random_twitter(1, 30, 10, 3);
        let a = null_model(&g, UH, NullMode::OutDegree, 9).unwrap();
        assert_eq!(a, null_model(&g, UH, NullMode::OutDegree, 9).unwrap());
        assert_ne!(a, null_model(&g, UH, NullMode::OutDegree, 10).unwrap());
    }

    #[test]
    fn preconditions() {
        let g = chain_graph();
        assert_eq!(
            null_model(&g, LinkTypeId(0), NullMode::OutDegree, 0).unwrap_err(),
            ValidateError::TooFewEdges {
                link: "AB".into(),
                count: 1
            }
        );
        let aug = random_twitter(1, 10, 5, 2).augment_with_holes().unwrap();
        assert!(matches!(
            null_model(&aug, RT, NullMode::OutDegree, 0),
            Err(ValidateError::Hin(HinError::AlreadyAugmented))
        ));
    }
}
