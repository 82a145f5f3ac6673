//! Library results checked against independent reference computations.

use hin_recovery::regress::{ols, DesignMatrix};
use hin_recovery::synthetic::{random_hin, twitter_schema, RandomHinConfig};
use hin_recovery::{enumerate_metapaths, t_sf, NodeTypeId, Schema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Depth-first count of link-type sequences from `src` to `dst`.
fn count_walks(s: &Schema, at: NodeTypeId, dst: NodeTypeId, left: usize) -> usize {
    let here = usize::from(at == dst && left == 0);
    if left == 0 {
        return here;
    }
    s.out_links(at).map(|l| count_walks(s, s.link(l).target, dst, left - 1)).sum()
}

#[test]
fn enumeration_matches_walk_count_on_random_schemas() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = RandomHinConfig {
        max_node_types: 4,
        max_link_types: 6,
        max_nodes_per_type: 3,
        ..Default::default()
    };
    for _ in 0..50 {
        let s = random_hin(&mut rng, &cfg).schema();
        let k = s.node_types.len();
        let (a, b) = (NodeTypeId(rng.random_range(0..k)), NodeTypeId(rng.random_range(0..k)));
        for max_len in 1..=4 {
            let expected: usize = (1..=max_len).map(|l| count_walks(&s, a, b, l)).sum();
            let set = enumerate_metapaths(&s, a, b, max_len, None);
            assert_eq!(set.len(), expected);
            // length-major order
            assert!(set.iter().zip(set.iter().skip(1)).all(|(p, q)| p.len() <= q.len()));
        }
    }
}

#[test]
fn twitter_enumeration_by_length() {
    let s = twitter_schema();
    let (u, h) = (s.node_type_id("user").unwrap(), s.node_type_id("hashtag").unwrap());
    let uh = s.link_type_id("UH");
    let lens: Vec<usize> = (1..=4).map(|m| enumerate_metapaths(&s, u, h, m, uh).len()).collect();
    assert_eq!(lens, [0, 3, 12, 39]);
    let with_uh = enumerate_metapaths(&s, u, h, 2, None);
    assert_eq!(with_uh.paths()[0].to_string(), "UH");
}

#[test]
fn collapse_matches_dense_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut b = hin_recovery::GraphBuilder::new();
    b.node_type("user", 10).unwrap();
    let links: Vec<_> = ["RT", "RP", "MT"].iter().map(|l| b.link_type(l, "user", "user").unwrap()).collect();
    let mut dense = vec![vec![0.0; 10]; 10];
    for &l in &links {
        for s in 0..10 {
            for t in 0..10 {
                if rng.random_bool(0.3) {
                    let w = rng.random_range(1..=4) as f64;
                    b.edge(l, s, t, w).unwrap();
                    dense[s][t] += w;
                }
            }
        }
    }
    let g = b.build();
    let user = NodeTypeId(0);
    let all = g.collapse_link_types(user, user, "ALL").unwrap();
    assert_eq!(all.link_types().len(), 1);
    assert_eq!(all.weights(all.link_type_id("ALL").unwrap()).to_dense(), dense);
    // on an augmented graph the holes are rebuilt, not summed
    let aug = g.augment_with_holes().unwrap().collapse_link_types(user, user, "ALL").unwrap();
    assert_eq!(aug, all.augment_with_holes().unwrap());
}

/// Normal equations solved by Gauss-Jordan elimination with partial pivoting.
fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len();
    let mut a: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut row: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[i] * r[j]).sum()).collect();
            row.push(x.iter().zip(y).map(|(r, v)| r[i] * v).sum());
            row
        })
        .collect();
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

#[test]
fn ols_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let n = rng.random_range(20..80);
        let k = rng.random_range(1..5);
        let cols: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| std::iter::once(1.0).chain(cols.iter().map(|c| c[i])).collect()).collect();
        let expected = normal_equations(&rows, &y);
        let d = DesignMatrix {
            y,
            names: (0..k).map(|j| format!("x{j}")).collect(),
            columns: cols,
            intercept: true,
            row_index: (0..n).map(|i| (i, 0)).collect(),
        };
        let fit = ols(&d).unwrap();
        for (a, b) in fit.beta.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn t_table_values() {
    // two-sided 5% critical values from standard tables
    for (dof, t) in [(1.0, 12.706), (2.0, 4.303), (5.0, 2.571), (10.0, 2.228), (30.0, 2.042), (120.0, 1.980)] {
        assert!((t_sf(t, dof) - 0.05).abs() < 2e-4, "dof {dof}: {}", t_sf(t, dof));
    }
    // two-sided 1% critical values
    for (dof, t) in [(5.0, 4.032), (10.0, 3.169), (60.0, 2.660)] {
        assert!((t_sf(t, dof) - 0.01).abs() < 5e-5, "dof {dof}: {}", t_sf(t, dof));
    }
    assert_eq!(t_sf(f64::INFINITY, 3.0), 0.0);
}
