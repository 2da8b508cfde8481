//! Property tests for the exact identities and structural invariants.

use dtdist::builddt::learn_distribution;
use dtdist::cube::{Point, Restriction, Sign, Subcube};
use dtdist::dense::{eval_pmf, restrict_dist, tree_to_dense, tv_distance, weighting, DensePmf};
use dtdist::influence::{exact_influence, exact_total_influence, InfluenceKind};
use dtdist::lift::{split_and_rerandomize, weighted_error, Hypothesis, LabeledSample};
use dtdist::oracle::{AccessMode, DistOracle};
use dtdist::testbed::{gen_dt_dist, gen_monotone_dist, gen_target, TargetClass};
use dtdist::tree::DistTree;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EXACT: f64 = 1e-9;

fn dims() -> impl Strategy<Value = (usize, usize, u64)> {
    (2usize..=8).prop_flat_map(|n| (Just(n), 0..=3usize.min(n), any::<u64>()))
}

/// Projection of `d` onto the leaves of `t`: each leaf spreads its mass
/// uniformly over its subcube.
fn project(d: &DensePmf, t: &DistTree) -> DensePmf {
    let n = d.dim();
    let table = (0..1usize << n)
        .map(|x| {
            let leaf = &t.leaves()[t.route(&Point::from_index(n, x).unwrap())];
            d.weight(&leaf.cube) / ((n - leaf.cube.depth()) as f64).exp2()
        })
        .collect();
    DensePmf::new(n, table).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_trees_are_normalized_and_agree((n, d, seed) in dims()) {
        let inst = gen_dt_dist(n, d, seed).unwrap();
        let mass: f64 = inst.tree.leaves().iter().map(|l| l.mass).sum();
        prop_assert!((mass - 1.0).abs() <= EXACT);
        prop_assert!(inst.tree.depth() <= d);
        let from_tree = tree_to_dense(&inst.tree).unwrap();
        for (a, b) in from_tree.table().iter().zip(inst.dense.table()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let mean = (0..1usize << n)
            .map(|x| weighting(&inst.dense, &Point::from_index(n, x).unwrap()).unwrap())
            .sum::<f64>()
            / (n as f64).exp2();
        prop_assert!((mean - 1.0).abs() <= EXACT);
    }

    #[test]
    fn json_round_trips((n, d, seed) in dims()) {
        let inst = gen_dt_dist(n, d, seed).unwrap();
        let text = dtdist::json::to_string(&inst.tree).unwrap();
        let back: DistTree = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.root(), inst.tree.root());
        let text = dtdist::json::to_string(&inst.dense).unwrap();
        let back: DensePmf = serde_json::from_str(&text).unwrap();
        for x in 0..1usize << n {
            let p = Point::from_index(n, x).unwrap();
            prop_assert!((eval_pmf(&back, &p).unwrap() - eval_pmf(&inst.dense, &p).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn monotone_influence_is_bias((n, d, seed) in dims()) {
        let inst = gen_monotone_dist(n, d, seed).unwrap();
        for i in 0..n {
            let bias: f64 = inst.dense.table().iter().enumerate()
                .map(|(x, p)| if x >> i & 1 == 1 { *p } else { -*p })
                .sum();
            prop_assert!((exact_influence(&inst.dense, i, &Restriction::empty()).unwrap() - bias).abs() <= EXACT);
        }
    }

    #[test]
    fn influence_drop_and_uniformity((n, d, seed) in dims(), i in 0usize..8) {
        let i = i % n;
        let inst = gen_dt_dist(n, d, seed).unwrap();
        let total = exact_total_influence(&inst.dense, &Restriction::empty()).unwrap();
        let inf_i = exact_influence(&inst.dense, i, &Restriction::empty()).unwrap();
        let halves: f64 = [Sign::Neg, Sign::Pos]
            .iter()
            .map(|&b| exact_total_influence(&inst.dense, &Restriction::new(vec![(i, b)]).unwrap()).unwrap())
            .sum();
        prop_assert!((halves / 2.0 - (total - inf_i)).abs() <= EXACT);
        let tv = tv_distance(&inst.dense, &DensePmf::uniform(n).unwrap()).unwrap();
        prop_assert!(2.0 * tv <= total + EXACT);
    }

    #[test]
    fn tv_is_label_error((n, d, seed) in dims(), other in any::<u64>()) {
        let a = gen_dt_dist(n, d, seed).unwrap().dense;
        let b = gen_dt_dist(n, d, other).unwrap().dense;
        let l1: f64 = a.weighting_table().iter().zip(b.weighting_table()).map(|(x, y)| (x - y).abs()).sum();
        prop_assert!((tv_distance(&a, &b).unwrap() - l1 / ((n + 1) as f64).exp2()).abs() <= EXACT);
    }

    #[test]
    fn tv_split_bound((n, d, seed) in dims(), shape_seed in any::<u64>()) {
        let dist = gen_dt_dist(n, 3.min(n), seed).unwrap().dense;
        let shape = gen_dt_dist(n, d, shape_seed).unwrap().tree;
        let projected = project(&dist, &shape);
        let mut lhs = 0.0;
        for leaf in shape.leaves() {
            let Ok((cond, w)) = restrict_dist(&dist, &leaf.path) else { continue };
            let (flat, _) = restrict_dist(&projected, &leaf.path).unwrap();
            lhs += w * tv_distance(&cond, &flat).unwrap();
        }
        prop_assert!(lhs <= 2.0 * tv_distance(&dist, &projected).unwrap() + EXACT);
    }

    #[test]
    fn error_decomposes_over_leaves((n, d, seed) in dims(), hseed in any::<u64>()) {
        let inst = gen_dt_dist(n, d, seed).unwrap();
        let target = gen_target(n, TargetClass::Depth(2), hseed).unwrap();
        let per_leaf: Vec<Hypothesis> = (0..inst.tree.leaf_count() as u64)
            .map(|k| Hypothesis::Table(gen_target(n, TargetClass::Junta(2), hseed ^ k).unwrap()))
            .collect();
        let parts = per_leaf.clone();
        let h = Hypothesis::routed(&inst.tree, per_leaf);
        let mut sum = 0.0;
        for (leaf, hl) in inst.tree.leaves().iter().zip(&parts) {
            let w = inst.dense.weight(&leaf.cube);
            if w == 0.0 {
                continue;
            }
            let wrong: f64 = leaf.cube.points(n)
                .filter(|x| hl.predict(x) != target.eval(x))
                .map(|x| inst.dense.table()[x.index()])
                .sum();
            sum += w * (wrong / w);
        }
        prop_assert!((weighted_error(&h, &target, &inst.dense).unwrap() - sum).abs() <= EXACT);
    }

    #[test]
    fn routing_partitions_the_sample((n, d, seed) in dims()) {
        let inst = gen_dt_dist(n, d, seed).unwrap();
        let mut o = DistOracle::from_tree(inst.tree.clone(), AccessMode::Sample, seed);
        let s = LabeledSample::draw(n, 400, "p", || Ok((o.sample()?, true))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parts = split_and_rerandomize(&inst.tree, &s, &mut rng).unwrap();
        prop_assert_eq!(parts.len(), inst.tree.leaf_count());
        prop_assert_eq!(parts.iter().map(|p| p.len()).sum::<usize>(), s.len());
        // off-path coordinates are untouched, so each leaf keeps exactly the
        // points routed to it, modulo the path coordinates
        let mut expected: Vec<Vec<u64>> = vec![Vec::new(); parts.len()];
        for (x, _) in &s.points {
            let k = inst.tree.route(x);
            expected[k].push(x.bits() & !inst.tree.leaves()[k].cube.mask);
        }
        for (k, part) in parts.iter().enumerate() {
            let got: Vec<u64> = part.points.iter().map(|(x, _)| x.bits() & !inst.tree.leaves()[k].cube.mask).collect();
            prop_assert_eq!(&got, &expected[k]);
        }
    }

    #[test]
    fn exact_build_is_everywhere_influential((n, d, seed) in dims()) {
        let inst = gen_dt_dist(n, d, seed).unwrap();
        let mut o = DistOracle::from_tree(inst.tree.clone(), AccessMode::ExactPmf, seed);
        let learned = learn_distribution(&mut o, n, d, 0.1, 0.1, InfluenceKind::Exact).unwrap();
        let tau = learned.plan.tau;
        prop_assert!(learned.tree.depth() <= d);
        for leaf in learned.tree.leaves() {
            let pairs = leaf.path.pairs();
            for j in 0..pairs.len() {
                let at = Restriction::new(pairs[..j].to_vec()).unwrap();
                prop_assert!(exact_influence(&inst.dense, pairs[j].0, &at).unwrap() >= tau - EXACT);
            }
        }
    }
}

#[test]
fn rerandomized_path_coordinates_are_balanced() {
    for seed in 0..20 {
        let inst = gen_dt_dist(8, 3, seed).unwrap();
        let mut o = DistOracle::from_tree(inst.tree.clone(), AccessMode::Sample, seed);
        let s = LabeledSample::draw(8, 20_000, "m", || Ok((o.sample()?, false))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parts = split_and_rerandomize(&inst.tree, &s, &mut rng).unwrap();
        for (leaf, part) in inst.tree.leaves().iter().zip(&parts) {
            if part.len() < 500 {
                continue;
            }
            for &(i, _) in leaf.path.pairs() {
                let mean = part.points.iter().map(|(x, _)| x.value(i) as f64).sum::<f64>() / part.len() as f64;
                assert!(mean.abs() <= 0.1, "seed {seed} coord {i} mean {mean}");
            }
        }
    }
}

#[test]
fn subcube_samples_follow_the_conditional() {
    let inst = gen_dt_dist(5, 2, 11).unwrap();
    let r = Restriction::from_subcube(Subcube::FULL.with(1, Sign::Pos));
    let (cond, w) = restrict_dist(&inst.dense, &r).unwrap();
    assert!(w >= 0.05);
    let mut o = DistOracle::from_tree(inst.tree.clone(), AccessMode::SubcubeSample, 12);
    let k = 200_000;
    let mut counts = vec![0usize; 16];
    for _ in 0..k {
        let x = o.subcube_sample(&r).unwrap();
        assert_eq!(x.sign(1), Sign::Pos);
        let b = x.bits();
        // drop coordinate 1 to index the conditional table
        counts[((b & 1) | (b >> 2 << 1)) as usize] += 1;
    }
    for (c, p) in counts.iter().zip(cond.table()) {
        assert!((*c as f64 / k as f64 - p).abs() <= 0.01);
    }
    assert_eq!(o.counts().total(), k);
}
