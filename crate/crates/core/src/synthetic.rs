//! Small hand-built networks and seeded random generators used by tests,
//! benchmarks and the bundled example data.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::hin::{GraphBuilder, LinkTypeId, Schema, TypedGraph};
use crate::metapath::{Exclusion, MetaPath};

/// Users and hashtags with retweet, reply, mention and user-hashtag links.
pub fn twitter_schema() -> Schema {
    twitter_builder(1, 1).build().schema()
}

fn twitter_builder(users: usize, hashtags: usize) -> GraphBuilder {
    let mut b = GraphBuilder::new();
    b.node_type("user", users).unwrap();
    b.node_type("hashtag", hashtags).unwrap();
    for l in ["RT", "RP", "MT"] {
        b.link_type(l, "user", "user").unwrap();
    }
    b.link_type("UH", "user", "hashtag").unwrap();
    b
}

const RT: LinkTypeId = LinkTypeId(0);
const RP: LinkTypeId = LinkTypeId(1);
const MT: LinkTypeId = LinkTypeId(2);
const UH: LinkTypeId = LinkTypeId(3);

/// Four users, four hashtags. `u2` (index 1) posts `h1, h2` and replies only
/// to `u1`; `u1` posts `h1, h2, h3` and replies to `u2, u3, u4`; `u3` posts
/// `h3`, `u4` posts `h4`.
pub fn reply_example() -> TypedGraph {
    let mut b = twitter_builder(4, 4);
    for (u, h) in [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 2), (3, 3)] {
        b.edge(UH, u, h, 1.0).unwrap();
    }
    for (s, t) in [(1, 0), (0, 1), (0, 2), (0, 3)] {
        b.edge(RP, s, t, 1.0).unwrap();
    }
    b.build()
}

/// Five authors, four papers, two venues and three topics with binary
/// write (`AP`), cite (`PP`), publish (`PV`) and topic (`PT`) links.
/// Paper `p3` (index 2) cites nothing.
pub fn bibliographic_example() -> TypedGraph {
    let mut b = GraphBuilder::new();
    b.node_type("author", 5).unwrap();
    b.node_type("paper", 4).unwrap();
    b.node_type("venue", 2).unwrap();
    b.node_type("topic", 3).unwrap();
    let ap = b.link_type("AP", "author", "paper").unwrap();
    let pp = b.link_type("PP", "paper", "paper").unwrap();
    let pv = b.link_type("PV", "paper", "venue").unwrap();
    let pt = b.link_type("PT", "paper", "topic").unwrap();
    let writes = [(0, 0), (1, 0), (1, 1), (2, 0), (2, 2), (3, 1), (3, 2), (3, 3), (4, 2), (4, 3)];
    for (a, p) in writes {
        b.edge(ap, a, p, 1.0).unwrap();
    }
    for (p, q) in [(0, 1), (0, 2), (1, 2), (3, 2)] {
        b.edge(pp, p, q, 1.0).unwrap();
    }
    for (p, v) in [(0, 0), (1, 0), (2, 0), (3, 1)] {
        b.edge(pv, p, v, 1.0).unwrap();
    }
    for (p, t) in [(0, 0), (1, 0), (2, 1), (3, 2)] {
        b.edge(pt, p, t, 1.0).unwrap();
    }
    b.build()
}

/// `a -> b -> c`, one node per type.
pub fn chain_graph() -> TypedGraph {
    let mut b = GraphBuilder::new();
    for t in ["A", "B", "C"] {
        b.node_type(t, 1).unwrap();
    }
    let ab = b.link_type("AB", "A", "B").unwrap();
    let bc = b.link_type("BC", "B", "C").unwrap();
    b.edge(ab, 0, 0, 1.0).unwrap();
    b.edge(bc, 0, 0, 1.0).unwrap();
    b.build()
}

#[derive(Clone, Debug)]
pub struct RandomHinConfig {
    pub max_node_types: usize,
    pub max_nodes_per_type: usize,
    pub max_link_types: usize,
    /// Expected number of out-edges per source node and link type.
    pub mean_out_degree: f64,
}

impl Default for RandomHinConfig {
    fn default() -> Self {
        Self {
            max_node_types: 3,
            max_nodes_per_type: 50,
            max_link_types: 4,
            mean_out_degree: 2.5,
        }
    }
}

/// Random unaugmented HIN. Some rows are left empty so hole handling is
/// exercised.
pub fn random_hin(rng: &mut impl Rng, cfg: &RandomHinConfig) -> TypedGraph {
    let mut b = GraphBuilder::new();
    let types = rng.random_range(1..=cfg.max_node_types);
    let counts: Vec<usize> = (0..types)
        .map(|_| rng.random_range(2..=cfg.max_nodes_per_type))
        .collect();
    let names: Vec<String> = (0..types).map(|i| format!("T{i}")).collect();
    for (name, &c) in names.iter().zip(&counts) {
        b.node_type(name, c).unwrap();
    }
    let links = rng.random_range(1..=cfg.max_link_types);
    for l in 0..links {
        let (s, t) = (rng.random_range(0..types), rng.random_range(0..types));
        let id = b.link_type(&format!("L{l}"), &names[s], &names[t]).unwrap();
        let p = (cfg.mean_out_degree / counts[t] as f64).min(1.0);
        for src in 0..counts[s] {
            for dst in 0..counts[t] {
                if rng.random_bool(p) {
                    let w = if rng.random_bool(0.5) { 1.0 } else { rng.random_range(0.1..5.0) };
                    b.edge(id, src, dst, w).unwrap();
                }
            }
        }
    }
    b.build()
}

/// Random chain-valid meta-path of length `1..=max_len` with automatic
/// exclusions and, when `extra_exclusions`, possibly one random explicit
/// exclusion. Returns `None` if the schema has no path of the drawn length.
pub fn random_metapath(
    rng: &mut impl Rng,
    schema: &Schema,
    max_len: usize,
    extra_exclusions: bool,
) -> Option<MetaPath> {
    let len = rng.random_range(1..=max_len);
    for _ in 0..50 {
        let mut steps = Vec::with_capacity(len);
        let mut at = schema.link_types.choose(rng)?.source;
        for _ in 0..len {
            let outs: Vec<LinkTypeId> = schema.out_links(at).collect();
            let Some(&l) = outs.choose(rng) else { break };
            steps.push(l);
            at = schema.link(l).target;
        }
        if steps.len() != len {
            continue;
        }
        let mut mp = MetaPath::new(schema, &steps).ok()?;
        if extra_exclusions {
            let slots = mp.slot_types().to_vec();
            let pairs: Vec<Exclusion> = (0..slots.len())
                .flat_map(|a| (a + 1..slots.len()).map(move |b| (a, b)))
                .filter(|&(a, b)| slots[a] == slots[b])
                .map(|(a, b)| Exclusion::new(a, b))
                .collect();
            if let Some(&ex) = pairs.choose(rng) {
                mp = mp.with_exclusion(ex).ok()?;
            }
        } else {
            mp = mp.without_auto_exclusions();
        }
        return Some(mp);
    }
    None
}

/// Twitter-like network with independent uniformly random links, used as a
/// carrier of realistic regressor tables.
pub fn random_twitter(seed: u64, users: usize, hashtags: usize, out_degree: usize) -> TypedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = twitter_builder(users, hashtags);
    let everyone: Vec<usize> = (0..users).collect();
    for link in [RT, RP, MT] {
        for u in 0..users {
            for &v in everyone.choose_multiple(&mut rng, out_degree + 1).filter(|&&v| v != u).take(out_degree) {
                b.edge(link, u, v, rng.random_range(1..=3) as f64).unwrap();
            }
        }
    }
    let tags: Vec<usize> = (0..hashtags).collect();
    for u in 0..users {
        for &h in tags.choose_multiple(&mut rng, out_degree) {
            b.edge(UH, u, h, rng.random_range(1..=5) as f64).unwrap();
        }
    }
    b.build()
}

/// Parameters of [`planted_twitter`].
#[derive(Clone, Debug)]
pub struct PlantedConfig {
    pub users: usize,
    pub hashtags: usize,
    pub communities: usize,
    pub rt_degree: usize,
    pub rp_degree: usize,
    pub mt_degree: usize,
    /// Weight of the retweet neighbourhood in each user's hashtag profile.
    pub rt_coef: f64,
    /// Weight of the reply neighbourhood.
    pub rp_coef: f64,
    /// Log-normal sigma of multiplicative noise on hashtag counts.
    pub noise: f64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            users: 200,
            hashtags: 40,
            communities: 5,
            rt_degree: 4,
            rp_degree: 3,
            mt_degree: 4,
            rt_coef: 0.58,
            rp_coef: 0.40,
            noise: 0.3,
        }
    }
}

/// Twitter-like network whose hashtag profiles follow a planted linear
/// model. Users and hashtags are split into equal communities; retweet and
/// reply links stay inside a community, mention links are uniformly random.
/// Each user's expected hashtag profile `y` solves
/// `y = rt_coef * S_RT y + rp_coef * S_RP y + (1 - rt_coef - rp_coef) b`
/// where `b` is a private random profile over the community's hashtags, and
/// the observed `UH` weights are `100 * y` with log-normal noise.
///
/// Every hashtag of a community is used by every user of that community, so
/// hashtag in-degrees are uniform and degree structure alone carries no
/// signal.
pub fn planted_twitter(seed: u64, cfg: &PlantedConfig) -> TypedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, h, k) = (cfg.users, cfg.hashtags, cfg.communities);
    let community = |u: usize| u % k;
    let members: Vec<Vec<usize>> = (0..k).map(|c| (0..n).filter(|&u| community(u) == c).collect()).collect();
    let tags: Vec<Vec<usize>> = (0..k).map(|c| (0..h).filter(|&t| t % k == c).collect()).collect();

    let mut b = twitter_builder(n, h);
    let mut neighbours = |rng: &mut ChaCha8Rng, link: LinkTypeId, degree: usize, local: bool| {
        let mut rows = vec![Vec::new(); n];
        for (u, row) in rows.iter_mut().enumerate() {
            let pool: Vec<usize> = if local {
                members[community(u)].iter().copied().filter(|&v| v != u).collect()
            } else {
                (0..n).filter(|&v| v != u).collect()
            };
            for &v in pool.choose_multiple(rng, degree) {
                let w = rng.random_range(1..=3) as f64;
                b.edge(link, u, v, w).unwrap();
                row.push((v, w));
            }
        }
        rows
    };
    let rt = neighbours(&mut rng, RT, cfg.rt_degree, true);
    let rp = neighbours(&mut rng, RP, cfg.rp_degree, true);
    neighbours(&mut rng, MT, cfg.mt_degree, false);

    let base: Vec<Vec<f64>> = (0..n)
        .map(|u| {
            let mut row = vec![0.0; h];
            let own = &tags[community(u)];
            let mut picks = own.clone();
            picks.shuffle(&mut rng);
            for &t in picks.iter().take(2.min(own.len())) {
                row[t] = rng.random_range(0.5..1.5);
            }
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= s);
            row
        })
        .collect();
    let innovation = 1.0 - cfg.rt_coef - cfg.rp_coef;
    let average = |rows: &[(usize, f64)], y: &[Vec<f64>], t: usize| {
        let total: f64 = rows.iter().map(|(_, w)| w).sum();
        rows.iter().map(|&(v, w)| w * y[v][t]).sum::<f64>() / total
    };
    let mut y = base.clone();
    for _ in 0..600 {
        y = (0..n)
            .map(|u| {
                (0..h)
                    .map(|t| {
                        cfg.rt_coef * average(&rt[u], &y, t)
                            + cfg.rp_coef * average(&rp[u], &y, t)
                            + innovation * base[u][t]
                    })
                    .collect()
            })
            .collect();
    }
    let noise = LogNormal::new(0.0, cfg.noise).unwrap();
    for (u, row) in y.iter().enumerate() {
        for &t in &tags[community(u)] {
            let w = 100.0 * row[t] * noise.sample(&mut rng);
            b.edge(UH, u, t, w).unwrap();
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_graph_has_uniform_hashtag_in_degree() {
        let g = planted_twitter(1, &PlantedConfig::default());
        let uh = g.weights(UH).transpose();
        let degrees: Vec<usize> = (0..uh.rows()).map(|t| uh.row(t).0.len()).collect();
        assert!(degrees.iter().all(|&d| d == degrees[0]), "{degrees:?}");
    }

    #[test]
    fn generators_are_seeded() {
        assert_eq!(planted_twitter(3, &PlantedConfig::default()), planted_twitter(3, &PlantedConfig::default()));
        assert_eq!(random_twitter(3, 30, 10, 3), random_twitter(3, 30, 10, 3));
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let cfg = RandomHinConfig::default();
        assert_eq!(random_hin(&mut a, &cfg), random_hin(&mut b, &cfg));
    }
}
