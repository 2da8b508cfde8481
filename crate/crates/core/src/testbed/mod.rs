//! Synthetic instances and brute-force oracles.
//!
//! Everything here is computed by direct enumeration and shares as little
//! code as possible with the learners it is used to check.

mod checks;
mod optimal;
mod stats;
mod target;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::cube::MAX_DIM;
use crate::dense::{tree_to_dense, DensePmf};
use crate::error::{Error, Result};
use crate::seed;
use crate::tree::{DistTree, Node};

pub use checks::{check_inequalities, CheckRecord, CheckReport, IDENTITY_TOLERANCE, INEQUALITY_SLACK};
pub use optimal::{brute_optimal_tree, BRUTE_MAX_DEPTH, BRUTE_MAX_DIM};
pub use stats::{brute_stats, restricted_table, BruteStats, STATS_MAX_DIM};
pub use target::{gen_target, TargetClass, TruthTable};

/// Largest dimension the generators accept.
pub const GEN_MAX_DIM: usize = 16;

/// Probability that a node strictly below the root and above depth `d`
/// becomes a leaf early.
pub const EARLY_LEAF_PROB: f64 = 0.2;

/// Attempts allowed when rejection-sampling a monotone tree distribution.
pub const MONOTONE_REJECTION_CAP: u64 = 10_000;

/// Tolerance for pointwise agreement between tree and dense forms.
const AGREEMENT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub n: usize,
    pub d: usize,
    pub monotone: bool,
    pub generator: String,
}

/// A generated distribution in both representations, with an optional
/// target function.
#[derive(Clone, Debug)]
pub struct Instance {
    pub tree: DistTree,
    pub dense: DensePmf,
    pub target: Option<TruthTable>,
    pub seed: u64,
    pub descriptor: Descriptor,
}

impl Instance {
    /// Pairs a tree with its dense table, checking the monotone flag.
    pub fn new(tree: DistTree, seed: u64, generator: &str, monotone: bool) -> Result<Instance> {
        let dense = tree_to_dense(&tree)?;
        if monotone && !is_monotone(&dense) {
            return Err(Error::InvalidPmf(format!("{generator} output is not monotone")));
        }
        Ok(Instance {
            descriptor: Descriptor {
                n: tree.dim(),
                d: tree.depth(),
                monotone,
                generator: generator.to_string(),
            },
            tree,
            dense,
            target: None,
            seed,
        })
    }

    pub fn with_target(mut self, target: TruthTable) -> Result<Instance> {
        if target.dim() != self.tree.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.tree.dim(),
                found: target.dim(),
            });
        }
        self.target = Some(target);
        Ok(self)
    }

    /// Whether the tree and dense forms agree pointwise.
    pub fn consistent(&self) -> bool {
        match tree_to_dense(&self.tree) {
            Ok(t) => t
                .table()
                .iter()
                .zip(self.dense.table())
                .all(|(a, b)| (a - b).abs() <= AGREEMENT_TOLERANCE),
            Err(_) => false,
        }
    }
}

fn check_gen(n: usize, d: usize) -> Result<()> {
    if n > GEN_MAX_DIM {
        return Err(Error::DimensionTooLarge { n, limit: GEN_MAX_DIM });
    }
    if d > n {
        return Err(Error::InvalidParameter(format!("depth {d} exceeds n = {n}")));
    }
    Ok(())
}

/// Random tree skeleton of depth exactly `d`; leaves hold their index.
fn random_skeleton(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Node {
    fn grow(n: usize, left: usize, depth: usize, spine: bool, used: u64, rng: &mut ChaCha8Rng, leaves: &mut usize) -> Node {
        let early = depth > 0 && !spine && rng.random_bool(EARLY_LEAF_PROB);
        if left == 0 || early {
            *leaves += 1;
            return Node::leaf((*leaves - 1) as f64);
        }
        let free: Vec<usize> = (0..n).filter(|&i| used >> i & 1 == 0).collect();
        let var = free[rng.random_range(0..free.len())];
        let used = used | 1 << var;
        let spine_hi = rng.random_bool(0.5);
        let lo = grow(n, left - 1, depth + 1, spine && !spine_hi, used, rng, leaves);
        let hi = grow(n, left - 1, depth + 1, spine && spine_hi, used, rng, leaves);
        Node::split(var, lo, hi)
    }
    let mut leaves = 0;
    grow(n, d, 0, true, 0, rng, &mut leaves)
}

/// Random depth-`d` tree distribution over `n ≤ 16` coordinates with
/// Dirichlet(1) leaf masses.
pub fn gen_dt_dist(n: usize, d: usize, seed: u64) -> Result<Instance> {
    check_gen(n, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, "gen-dt-dist"));
    let skeleton = random_skeleton(n, d, &mut rng);
    let count = skeleton.leaf_count();
    let draws: Vec<f64> = (0..count).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    // leaf index -> mass, then mass -> density over 2^{n-depth} points
    let root = assign_masses(&skeleton, 0, n, &|k| draws[k] / total);
    let tree = DistTree::unnormalized(n, root)?.normalized()?;
    Instance::new(tree, seed, "dt", false)
}

fn assign_masses(node: &Node, depth: usize, n: usize, mass: &dyn Fn(usize) -> f64) -> Node {
    match node {
        Node::Leaf { density } => {
            let m = mass(*density as usize);
            Node::leaf(m / ((n - depth) as f64).exp2())
        }
        Node::Split { var, lo, hi } => Node::split(
            *var,
            assign_masses(lo, depth + 1, n, mass),
            assign_masses(hi, depth + 1, n, mass),
        ),
    }
}

/// Product-form monotone distribution: `D(x) ∝ c^{#{i ∈ J : x_i = +1}}`
/// for `J` a sorted `d`-set and `c > 1`, as a complete tree over `J`.
pub fn monotone_tree(n: usize, j: &[usize], c: f64) -> Result<DistTree> {
    if n > MAX_DIM || j.iter().any(|&i| i >= n) {
        return Err(Error::InvalidParameter(format!("coordinates {j:?} out of range for n = {n}")));
    }
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("monotone base must be >= 1, got {c}")));
    }
    let d = j.len();
    let z = (1.0 + c).powi(d as i32);
    fn build(j: &[usize], ones: i32, c: f64, z: f64, free: usize) -> Node {
        match j.split_first() {
            None => Node::leaf(c.powi(ones) / z / (free as f64).exp2()),
            Some((&v, rest)) => Node::split(
                v,
                build(rest, ones, c, z, free),
                build(rest, ones + 1, c, z, free),
            ),
        }
    }
    DistTree::new(n, build(j, 0, c, z, n - d))
}

/// Random monotone depth-`d` distribution: `J` uniform among `d`-sets,
/// `c` uniform in [1.5, 4].
pub fn gen_monotone_dist(n: usize, d: usize, seed: u64) -> Result<Instance> {
    check_gen(n, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, "gen-monotone"));
    let mut coords: Vec<usize> = (0..n).collect();
    for k in 0..d {
        let pick = rng.random_range(k..n);
        coords.swap(k, pick);
    }
    let mut j = coords[..d].to_vec();
    j.sort_unstable();
    let c = rng.random_range(1.5..4.0);
    Instance::new(monotone_tree(n, &j, c)?, seed, "monotone", true)
}

/// Monotone instance found by rejection over [`gen_dt_dist`] outputs.
pub fn gen_monotone_by_rejection(n: usize, d: usize, seed: u64) -> Result<Instance> {
    check_gen(n, d)?;
    for attempt in 0..MONOTONE_REJECTION_CAP {
        let inst = gen_dt_dist(n, d, seed::child(seed, attempt))?;
        if is_monotone(&inst.dense) {
            let mut inst = Instance::new(inst.tree, seed, "monotone-rejection", true)?;
            inst.seed = seed;
            return Ok(inst);
        }
    }
    Err(Error::RejectionCap {
        attempts: MONOTONE_REJECTION_CAP,
    })
}

/// Whether `D(x) ≤ D(y)` whenever `x ≤ y` coordinatewise. Checking the
/// covering pairs (one coordinate raised) suffices by transitivity.
pub fn is_monotone(d: &DensePmf) -> bool {
    let t = d.table();
    let n = d.dim();
    (0..t.len()).all(|x| {
        (0..n).all(|i| x >> i & 1 == 1 || t[x] <= t[x | 1 << i] + 1e-15)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dt_generator_contract() {
        for seed in 0..50 {
            for d in 0..=4 {
                let inst = gen_dt_dist(8, d, seed).unwrap();
                assert_eq!(inst.tree.depth(), d);
                assert!((inst.tree.total_mass() - 1.0).abs() < 1e-12);
                assert!(inst.consistent());
            }
        }
        let u = gen_dt_dist(5, 0, 3).unwrap();
        assert_eq!(u.tree, DistTree::uniform(5));
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_dt_dist(10, 3, 77).unwrap();
        let b = gen_dt_dist(10, 3, 77).unwrap();
        assert_eq!(a.tree, b.tree);
        assert_eq!(a.dense, b.dense);
        assert_ne!(a.tree, gen_dt_dist(10, 3, 78).unwrap().tree);
        let a = gen_monotone_dist(10, 3, 5).unwrap();
        assert_eq!(a.tree, gen_monotone_dist(10, 3, 5).unwrap().tree);
    }

    #[test]
    fn monotone_example() {
        let t = monotone_tree(2, &[0, 1], 2.0).unwrap();
        let d = tree_to_dense(&t).unwrap();
        let want = [1.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 4.0 / 9.0];
        for (a, b) in d.table().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(is_monotone(&d));
        assert_eq!(t.depth(), 2);
        let e2 = DensePmf::new(2, vec![0.125, 0.25, 0.125, 0.5]).unwrap();
        assert!(is_monotone(&e2));
        let anti = DensePmf::new(2, vec![0.5, 0.25, 0.125, 0.125]).unwrap();
        assert!(!is_monotone(&anti));
    }

    #[test]
    fn monotone_generators() {
        for seed in 0..20 {
            let inst = gen_monotone_dist(10, 3, seed).unwrap();
            assert!(inst.descriptor.monotone && is_monotone(&inst.dense));
            assert_eq!(inst.tree.depth(), 3);
        }
        assert_eq!(gen_monotone_dist(4, 0, 1).unwrap().tree, DistTree::uniform(4));
        let inst = gen_monotone_by_rejection(6, 1, 9).unwrap();
        assert!(is_monotone(&inst.dense));
    }

    #[test]
    fn dimension_guard() {
        assert!(gen_dt_dist(17, 2, 0).is_err());
        assert!(gen_dt_dist(3, 4, 0).is_err());
    }
}
