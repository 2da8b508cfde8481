//! Decision-tree distributions.
//!
//! A [`DistTree`] is a decision tree whose leaves carry densities. Every point
//! reaching a leaf has the leaf's density as its probability, so the
//! conditional distribution at any leaf is uniform over the leaf's subcube.

use std::sync::OnceLock;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::cube::{dim_mask, Point, Restriction, Sign, Subcube, MAX_DIM};
use crate::error::{Error, Result};

/// Absolute tolerance of the normalization invariant.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// A node of a distribution tree. `lo` is the branch taken when the split
/// coordinate is -1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        var: usize,
        lo: Box<Node>,
        hi: Box<Node>,
    },
    Leaf {
        #[serde(rename = "leaf")]
        density: f64,
    },
}

impl Node {
    pub fn leaf(density: f64) -> Node {
        Node::Leaf { density }
    }

    pub fn split(var: usize, lo: Node, hi: Node) -> Node {
        Node::Split {
            var,
            lo: Box::new(lo),
            hi: Box::new(hi),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { lo, hi, .. } => 1 + lo.depth().max(hi.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { lo, hi, .. } => lo.leaf_count() + hi.leaf_count(),
        }
    }

    /// Applies `f` to every leaf density, in left-to-right order.
    pub fn map_densities(&self, f: &mut impl FnMut(f64) -> f64) -> Node {
        match self {
            Node::Leaf { density } => Node::leaf(f(*density)),
            Node::Split { var, lo, hi } => {
                let lo = lo.map_densities(f);
                let hi = hi.map_densities(f);
                Node::split(*var, lo, hi)
            }
        }
    }
}

/// One leaf of a tree, flattened.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafInfo {
    /// Root-to-leaf path.
    pub path: Restriction,
    pub cube: Subcube,
    pub density: f64,
    /// Probability of reaching the leaf: `2^(n - depth) * density`.
    pub mass: f64,
}

impl LeafInfo {
    pub fn depth(&self) -> usize {
        self.path.depth()
    }
}

#[derive(Debug)]
struct LeafTable {
    leaves: Vec<LeafInfo>,
    cumulative: Vec<f64>,
}

/// File form: `{"n": .., "root": ..}`.
#[derive(Serialize, Deserialize)]
struct TreeFile {
    n: usize,
    root: Node,
}

impl TryFrom<TreeFile> for DistTree {
    type Error = Error;

    fn try_from(f: TreeFile) -> Result<DistTree> {
        DistTree::new(f.n, f.root)
    }
}

impl From<DistTree> for TreeFile {
    fn from(t: DistTree) -> TreeFile {
        TreeFile { n: t.n, root: t.root }
    }
}

/// A distribution over {-1,+1}^n whose pmf is computed by a decision tree.
#[derive(Debug, Serialize, Deserialize)]
#[serde(try_from = "TreeFile", into = "TreeFile")]
pub struct DistTree {
    n: usize,
    root: Node,
    table: OnceLock<LeafTable>,
}

impl Clone for DistTree {
    fn clone(&self) -> Self {
        DistTree {
            n: self.n,
            root: self.root.clone(),
            table: OnceLock::new(),
        }
    }
}

impl PartialEq for DistTree {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.root == other.root
    }
}

fn check_structure(n: usize, node: &Node, path_mask: u64) -> Result<()> {
    match node {
        Node::Leaf { density } => {
            if !density.is_finite() || *density < 0.0 {
                return Err(Error::InvalidTree(format!(
                    "leaf density {density} is not a nonnegative finite number"
                )));
            }
            Ok(())
        }
        Node::Split { var, lo, hi } => {
            if *var >= n {
                return Err(Error::CoordinateOutOfRange { coord: *var, n });
            }
            if path_mask >> var & 1 == 1 {
                return Err(Error::InvalidTree(format!(
                    "coordinate {var} repeats on a root-to-leaf path"
                )));
            }
            let mask = path_mask | 1 << var;
            check_structure(n, lo, mask)?;
            check_structure(n, hi, mask)
        }
    }
}

impl DistTree {
    /// Builds a tree, checking structure and normalization.
    pub fn new(n: usize, root: Node) -> Result<DistTree> {
        let tree = DistTree::unnormalized(n, root)?;
        let total = tree.total_mass();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidTree(format!(
                "leaf masses sum to {total}, expected 1"
            )));
        }
        Ok(tree)
    }

    /// Builds a tree checking structure only. Useful for intermediate
    /// results that are rescaled with [`DistTree::normalized`].
    pub fn unnormalized(n: usize, root: Node) -> Result<DistTree> {
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge { n, limit: MAX_DIM });
        }
        check_structure(n, &root, 0)?;
        Ok(DistTree {
            n,
            root,
            table: OnceLock::new(),
        })
    }

    pub fn uniform(n: usize) -> DistTree {
        DistTree {
            n,
            root: Node::leaf(0.5f64.powi(n as i32)),
            table: OnceLock::new(),
        }
    }

    /// Rescales every density uniformly so the masses sum to one.
    pub fn normalized(&self) -> Result<DistTree> {
        let total = self.total_mass();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Normalization(format!(
                "total leaf mass is {total}"
            )));
        }
        let root = self.root.map_densities(&mut |p| p / total);
        DistTree::unnormalized(self.n, root)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    fn table(&self) -> &LeafTable {
        self.table.get_or_init(|| {
            let mut leaves = Vec::new();
            collect_leaves(self.n, &self.root, Restriction::empty(), &mut leaves);
            let mut acc = 0.0;
            let cumulative = leaves
                .iter()
                .map(|l| {
                    acc += l.mass;
                    acc
                })
                .collect();
            LeafTable { leaves, cumulative }
        })
    }

    /// Leaves in left-to-right (lo before hi) order.
    pub fn leaves(&self) -> &[LeafInfo] {
        &self.table().leaves
    }

    pub fn total_mass(&self) -> f64 {
        self.leaves().iter().map(|l| l.mass).sum()
    }

    /// Index (into [`DistTree::leaves`]) of the leaf `x` reaches.
    pub fn route(&self, x: &Point) -> usize {
        let mut node = &self.root;
        let mut index = 0;
        loop {
            match node {
                Node::Leaf { .. } => return index,
                Node::Split { var, lo, hi } => {
                    if x.sign(*var).is_pos() {
                        index += lo.leaf_count();
                        node = hi;
                    } else {
                        node = lo;
                    }
                }
            }
        }
    }

    /// Density at the leaf `x` reaches. Dimension is not checked.
    pub fn density_at(&self, x: &Point) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { density } => return *density,
                Node::Split { var, lo, hi } => {
                    node = if x.sign(*var).is_pos() { hi } else { lo };
                }
            }
        }
    }

    /// Exact probability of the subcube.
    pub fn weight(&self, s: &Subcube) -> f64 {
        self.leaves()
            .iter()
            .filter(|l| l.cube.compatible(s))
            .map(|l| l.density * points_in(self.n, l.cube.mask | s.mask))
            .sum()
    }

    /// Draws a point: pick a leaf with probability equal to its mass, then
    /// fill the free coordinates uniformly.
    pub fn sample_bits(&self, rng: &mut (impl RngCore + ?Sized)) -> u64 {
        let table = self.table();
        let total = *table.cumulative.last().unwrap_or(&1.0);
        let u = unit_f64(rng) * total;
        let k = table
            .cumulative
            .partition_point(|&c| c <= u)
            .min(table.leaves.len() - 1);
        let cube = table.leaves[k].cube;
        cube.project_bits(rng.next_u64() & dim_mask(self.n))
    }

    /// Sampler for the distribution conditioned on the subcube `s`.
    pub fn conditional(&self, s: &Subcube) -> Result<ConditionalSampler> {
        let mut entries = Vec::new();
        let mut acc = 0.0;
        for leaf in self.leaves() {
            if !leaf.cube.compatible(s) {
                continue;
            }
            let cube = leaf.cube.meet(s);
            let mass = leaf.density * points_in(self.n, cube.mask);
            if mass > 0.0 {
                acc += mass;
                entries.push((cube, acc));
            }
        }
        ConditionalSampler::from_entries(self.n, entries, acc)
    }
}

fn collect_leaves(n: usize, node: &Node, path: Restriction, out: &mut Vec<LeafInfo>) {
    match node {
        Node::Leaf { density } => {
            let cube = path.subcube();
            out.push(LeafInfo {
                mass: density * points_in(n, cube.mask),
                density: *density,
                cube,
                path,
            });
        }
        Node::Split { var, lo, hi } => {
            let lo_path = path.with(*var, Sign::Neg).expect("validated tree");
            let hi_path = path.with(*var, Sign::Pos).expect("validated tree");
            collect_leaves(n, lo, lo_path, out);
            collect_leaves(n, hi, hi_path, out);
        }
    }
}

/// Number of points of {-1,+1}^n inside a subcube with fixed-coordinate mask
/// `mask`, as a float.
#[inline]
pub(crate) fn points_in(n: usize, mask: u64) -> f64 {
    let free = n as i32 - (mask & dim_mask(n)).count_ones() as i32;
    2f64.powi(free)
}

#[inline]
pub(crate) fn unit_f64(rng: &mut (impl RngCore + ?Sized)) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws points from a distribution conditioned on a subcube. Each entry is
/// a sub-subcube on which the conditional is uniform, with its cumulative
/// probability mass.
#[derive(Clone, Debug)]
pub struct ConditionalSampler {
    n: usize,
    entries: Vec<(Subcube, f64)>,
    total: f64,
}

impl ConditionalSampler {
    pub(crate) fn from_entries(
        n: usize,
        entries: Vec<(Subcube, f64)>,
        total: f64,
    ) -> Result<ConditionalSampler> {
        if entries.is_empty() || !(total > 0.0) {
            return Err(Error::ZeroWeight);
        }
        Ok(ConditionalSampler { n, entries, total })
    }

    /// Probability mass of the conditioning subcube.
    pub fn weight(&self) -> f64 {
        self.total
    }

    pub fn draw(&self, rng: &mut (impl RngCore + ?Sized)) -> Point {
        let cube = if self.entries.len() == 1 {
            self.entries[0].0
        } else {
            let u = unit_f64(rng) * self.total;
            let k = self
                .entries
                .partition_point(|&(_, c)| c <= u)
                .min(self.entries.len() - 1);
            self.entries[k].0
        };
        let free = dim_mask(self.n) & !cube.mask;
        let bits = if free == 0 {
            cube.values
        } else {
            cube.project_bits(rng.next_u64() & dim_mask(self.n))
        };
        Point::from_bits_unchecked(self.n, bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// (+,+) 1/2, (+,-) 1/4, (-,+) 1/8, (-,-) 1/8 with x0 at the root.
    fn e2() -> DistTree {
        DistTree::new(
            2,
            Node::split(
                0,
                Node::leaf(0.125),
                Node::split(1, Node::leaf(0.25), Node::leaf(0.5)),
            ),
        )
        .unwrap()
    }

    #[test]
    fn leaves_and_routing() {
        let t = e2();
        assert_eq!(t.leaf_count(), 3);
        assert_eq!(t.depth(), 2);
        let masses: Vec<f64> = t.leaves().iter().map(|l| l.mass).collect();
        assert_eq!(masses, vec![0.25, 0.25, 0.5]);
        let x = Point::from_signs(&[1, 1]).unwrap();
        assert_eq!(t.route(&x), 2);
        assert_eq!(t.density_at(&x), 0.5);
        let y = Point::from_signs(&[-1, 1]).unwrap();
        assert_eq!(t.route(&y), 0);
    }

    #[test]
    fn rejects_malformed_trees() {
        let repeat = Node::split(0, Node::leaf(0.25), Node::split(0, Node::leaf(0.25), Node::leaf(0.25)));
        assert!(DistTree::new(2, repeat).is_err());
        assert!(DistTree::new(2, Node::leaf(0.3)).is_err());
        assert!(DistTree::new(1, Node::split(1, Node::leaf(0.5), Node::leaf(0.5))).is_err());
        assert!(DistTree::new(1, Node::split(0, Node::leaf(-0.5), Node::leaf(1.5))).is_err());
    }

    #[test]
    fn weights_and_conditionals() {
        let t = e2();
        let s = Restriction::new(vec![(0, Sign::Pos)]).unwrap().subcube();
        assert!((t.weight(&s) - 0.75).abs() < 1e-15);
        let c = t.conditional(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert!(s.contains(&c.draw(&mut rng)));
        }
        let zero = DistTree::new(1, Node::split(0, Node::leaf(0.0), Node::leaf(1.0))).unwrap();
        let neg = Restriction::new(vec![(0, Sign::Neg)]).unwrap().subcube();
        assert!(matches!(zero.conditional(&neg), Err(Error::ZeroWeight)));
    }

    #[test]
    fn json_schema() {
        let t = e2();
        let json = serde_json::to_string(t.root()).unwrap();
        assert_eq!(
            json,
            r#"{"var":0,"lo":{"leaf":0.125},"hi":{"var":1,"lo":{"leaf":0.25},"hi":{"leaf":0.5}}}"#
        );
        let back: Node = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, t.root());
    }
}
