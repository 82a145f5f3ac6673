use hin_recovery::regress::{ols, DesignMatrix};
use hin_recovery::synthetic::{random_hin, random_metapath, RandomHinConfig};
use hin_recovery::validate::{divide_by_category, null_model, Categorization, NullMode};
use hin_recovery::{pcrw, pcrw_oracle, Exclusion, HinError, LinkTypeId, MetaPath, TypedGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_cfg() -> RandomHinConfig {
    RandomHinConfig {
        max_nodes_per_type: 20,
        ..Default::default()
    }
}

fn graph(seed: u64) -> (ChaCha8Rng, TypedGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_hin(&mut rng, &small_cfg());
    (rng, g)
}

fn dense_row(g: &hin_recovery::CsrMatrix, r: usize) -> Vec<f64> {
    let mut out = vec![0.0; g.cols()];
    for (c, v) in g.row_iter(r) {
        out[c] = v;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stochastic_rows_sum_to_one(seed in any::<u64>()) {
        let (_, g) = graph(seed);
        let aug = g.augment_with_holes().unwrap();
        for l in 0..aug.link_types().len() {
            for s in aug.stochastic(LinkTypeId(l)).unwrap().matrix().row_sums() {
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn augmentation_is_reversible_and_not_repeatable(seed in any::<u64>()) {
        let (_, g) = graph(seed);
        let aug = g.augment_with_holes().unwrap();
        prop_assert_eq!(aug.strip_holes().unwrap(), g);
        prop_assert_eq!(aug.augment_with_holes().unwrap_err(), HinError::AlreadyAugmented);
    }

    #[test]
    fn collapse_preserves_total_weight(seed in any::<u64>()) {
        let (_, g) = graph(seed);
        let l0 = g.link(LinkTypeId(0)).clone();
        let members: f64 = (0..g.link_types().len())
            .filter(|&i| g.link(LinkTypeId(i)).source == l0.source && g.link(LinkTypeId(i)).target == l0.target)
            .map(|i| g.weights(LinkTypeId(i)).total())
            .sum();
        let c = g.collapse_link_types(l0.source, l0.target, "ALL").unwrap();
        let merged = c.link_type_id("ALL").unwrap();
        prop_assert!((c.weights(merged).total() - members).abs() <= 1e-9 * members.max(1.0));
    }

    #[test]
    fn metapath_text_round_trips(seed in any::<u64>(), extra in any::<bool>()) {
        let (mut rng, g) = graph(seed);
        let s = g.schema();
        if let Some(mp) = random_metapath(&mut rng, &s, 4, extra) {
            let text = mp.to_string();
            let back = MetaPath::parse(&text, &s).unwrap();
            prop_assert_eq!(back.to_string(), text);
            prop_assert_eq!(back.exclusions(), mp.exclusions());
        }
    }

    #[test]
    fn matrix_walk_matches_oracle(seed in any::<u64>(), extra in any::<bool>()) {
        let (mut rng, g) = graph(seed);
        let aug = g.augment_with_holes().unwrap();
        if let Some(mp) = random_metapath(&mut rng, &aug.schema(), 4, extra) {
            let table = pcrw(&aug, &mp).unwrap().table;
            for src in 0..table.rows() {
                let oracle = pcrw_oracle(&aug, &mp, src).unwrap();
                for (a, b) in dense_row(&table, src).iter().zip(&oracle) {
                    prop_assert!((a - b).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn unconstrained_walks_compose(seed in any::<u64>()) {
        let (mut rng, g) = graph(seed);
        let aug = g.augment_with_holes().unwrap();
        let s = aug.schema();
        if let Some(mp) = random_metapath(&mut rng, &s, 4, false) {
            if mp.len() >= 2 {
                let k = rng.random_range(1..mp.len());
                let head = MetaPath::new(&s, &mp.steps()[..k]).unwrap().without_auto_exclusions();
                let tail = MetaPath::new(&s, &mp.steps()[k..]).unwrap().without_auto_exclusions();
                let whole = pcrw(&aug, &mp).unwrap().table.to_dense();
                let composed = pcrw(&aug, &head).unwrap().table.matmul(&pcrw(&aug, &tail).unwrap().table).to_dense();
                for (a, b) in whole.iter().flatten().zip(composed.iter().flatten()) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn return_exclusion_keeps_walker_off_its_source(seed in any::<u64>()) {
        let (mut rng, g) = graph(seed);
        let aug = g.augment_with_holes().unwrap();
        let s = aug.schema();
        if let Some(mp) = random_metapath(&mut rng, &s, 4, false) {
            let n = mp.len();
            let slots = mp.slot_types().to_vec();
            if n >= 2 && slots[n - 1] == slots[0] {
                // stop the walk at slot n - 1 and look at the diagonal
                let head = MetaPath::new(&s, &mp.steps()[..n - 1])
                    .unwrap()
                    .without_auto_exclusions()
                    .with_exclusion(Exclusion::new(0, n - 1))
                    .unwrap();
                let table = pcrw(&aug, &head).unwrap().table;
                for v in 0..aug.real_count(slots[0]) {
                    prop_assert_eq!(table.get(v, v), 0.0);
                }
            }
        }
    }

    #[test]
    fn out_degree_null_keeps_row_weight(seed in any::<u64>()) {
        let (_, g) = graph(seed);
        let link = LinkTypeId(0);
        let w = g.weights(link);
        prop_assume!(w.nnz() >= 2);
        if let Ok(n) = null_model(&g, link, NullMode::OutDegree, seed) {
            let before = w.row_sums();
            let after = n.weights(link).row_sums();
            for (a, b) in before.iter().zip(&after) {
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
            }
        }
    }

    #[test]
    fn categories_partition_the_pivot_type(seed in any::<u64>(), q in 1usize..4) {
        let (mut rng, g) = graph(seed);
        let s = g.schema();
        if let Some(mp) = random_metapath(&mut rng, &s, 3, false) {
            let pivot = mp.slot_types()[rng.random_range(0..=mp.len())];
            let labels: Vec<Option<String>> = (0..g.real_count(pivot))
                .map(|_| Some(format!("c{}", rng.random_range(0..q))))
                .collect();
            let cats = Categorization::from_labels(labels);
            let parts = divide_by_category(&g, pivot, &cats, &mp).unwrap();
            let mut seen: Vec<usize> = parts.iter().flat_map(|p| p.node_maps[pivot.0].clone()).collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..g.real_count(pivot)).collect::<Vec<_>>());
            for p in &parts {
                prop_assert!(p.graph.augment_with_holes().is_ok());
            }
        }
    }
}

fn random_design(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DesignMatrix {
    let columns: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y = (0..n)
        .map(|i| 0.3 + columns.iter().enumerate().map(|(j, c)| (j as f64 - 1.0) * c[i]).sum::<f64>() + rng.random_range(-0.5..0.5))
        .collect();
    DesignMatrix {
        y,
        names: (0..k).map(|j| format!("x{j}")).collect(),
        columns,
        intercept: true,
        row_index: (0..n).map(|i| (i, 0)).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residuals_are_orthogonal_to_columns(seed in any::<u64>(), n in 10usize..200, k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_design(&mut rng, n, k);
        let fit = ols(&d).unwrap();
        let resid: Vec<f64> = d.y.iter().zip(fit.predict(&d)).map(|(y, p)| y - p).collect();
        let ynorm = d.y.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(resid.iter().sum::<f64>().abs() <= 1e-9 * ynorm);
        for c in &d.columns {
            let dot: f64 = c.iter().zip(&resid).map(|(x, e)| x * e).sum();
            prop_assert!(dot.abs() <= 1e-9 * ynorm);
        }
    }

    #[test]
    fn scaling_a_column_rescales_its_coefficient(seed in any::<u64>(), c in prop_oneof![-50.0..-0.02f64, 0.02..50.0f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_design(&mut rng, 60, 3);
        let mut scaled = d.clone();
        scaled.columns[1].iter_mut().for_each(|v| *v *= c);
        let (a, b) = (ols(&d).unwrap(), ols(&scaled).unwrap());
        prop_assert!((a.beta[2] - b.beta[2] * c).abs() <= 1e-9 * a.beta[2].abs().max(1.0));
        prop_assert!((a.r2 - b.r2).abs() <= 1e-9);
        for (p, q) in a.p_values.iter().zip(&b.p_values) {
            prop_assert!((p - q).abs() <= 1e-9);
        }
        for (p, q) in a.predict(&d).iter().zip(b.predict(&scaled)) {
            prop_assert!((p - q).abs() <= 1e-9);
        }
    }

    #[test]
    fn adding_a_column_never_lowers_r2(seed in any::<u64>(), n in 10usize..100) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_design(&mut rng, n, 4);
        let mut last = ols(&d.select(&[])).unwrap().r2;
        for k in 1..=4 {
            let r2 = ols(&d.select(&(0..k).collect::<Vec<_>>())).unwrap().r2;
            prop_assert!(r2 >= last - 1e-12);
            last = r2;
        }
    }
}

/// Forbidding the return at the penultimate slot renormalizes onto the other
/// neighbours, which can make the final return more likely, not less.
#[test]
fn return_exclusion_can_raise_return_probability() {
    let mut b = hin_recovery::GraphBuilder::new();
    b.node_type("V", 2).unwrap();
    let e = b.link_type("E", "V", "V").unwrap();
    // v0 -> v0 and v0 -> v1 equally; v1 -> v0 only
    b.edge(e, 0, 0, 1.0).unwrap();
    b.edge(e, 0, 1, 1.0).unwrap();
    b.edge(e, 1, 0, 1.0).unwrap();
    let g = b.build().augment_with_holes().unwrap();
    let s = g.schema();
    let free = MetaPath::parse("E-E !none", &s).unwrap();
    let constrained = MetaPath::parse("E-E", &s).unwrap();
    assert_eq!(constrained.exclusions(), vec![Exclusion::new(0, 1)]);
    // free: 1/2 * 1/2 + 1/2 * 1 = 3/4; constrained: v1 surely, then back
    assert!((pcrw(&g, &free).unwrap().table.get(0, 0) - 0.75).abs() < 1e-15);
    assert!((pcrw(&g, &constrained).unwrap().table.get(0, 0) - 1.0).abs() < 1e-15);
}
