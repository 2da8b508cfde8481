//! Dense pmf tables and the exact operations built on them: pmf evaluation,
//! weighting functions, total variation distance, restriction, and
//! conversion to and from trees.

use std::sync::OnceLock;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::cube::{dim_mask, Point, Restriction, Sign, Subcube};
use crate::error::{Error, Result};
use crate::tree::{unit_f64, ConditionalSampler, DistTree, Node};

/// Largest dimension for which a full table is materialized.
pub const MAX_DENSE_DIM: usize = 20;

/// Tolerance of the sum-to-one invariant.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Anything that evaluates a pmf over {-1,+1}^n.
pub trait Pmf {
    fn dim(&self) -> usize;

    /// Probability of `x`. Dimension is assumed to match.
    fn prob(&self, x: &Point) -> f64;
}

impl Pmf for DistTree {
    fn dim(&self) -> usize {
        DistTree::dim(self)
    }

    fn prob(&self, x: &Point) -> f64 {
        self.density_at(x)
    }
}

impl Pmf for DensePmf {
    fn dim(&self) -> usize {
        self.n
    }

    fn prob(&self, x: &Point) -> f64 {
        self.table[x.index()]
    }
}

fn check_point<D: Pmf + ?Sized>(dist: &D, x: &Point) -> Result<()> {
    if x.dim() != dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim(),
            found: x.dim(),
        });
    }
    Ok(())
}

/// `D(x)`.
pub fn eval_pmf<D: Pmf + ?Sized>(dist: &D, x: &Point) -> Result<f64> {
    check_point(dist, x)?;
    Ok(dist.prob(x))
}

/// The weighting function `f_D(x) = 2^n * D(x)`, whose uniform average is 1.
pub fn weighting<D: Pmf + ?Sized>(dist: &D, x: &Point) -> Result<f64> {
    check_point(dist, x)?;
    Ok(dist.prob(x) * 2f64.powi(dist.dim() as i32))
}

/// A full probability table over {-1,+1}^n, indexed by point bits.
#[derive(Debug, Serialize, Deserialize)]
#[serde(try_from = "DenseFile", into = "DenseFile")]
pub struct DensePmf {
    n: usize,
    table: Vec<f64>,
    #[serde(skip)]
    cdf: OnceLock<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DenseFile {
    n: usize,
    table: Vec<f64>,
}

impl TryFrom<DenseFile> for DensePmf {
    type Error = Error;

    fn try_from(f: DenseFile) -> Result<DensePmf> {
        DensePmf::new(f.n, f.table)
    }
}

impl From<DensePmf> for DenseFile {
    fn from(d: DensePmf) -> DenseFile {
        DenseFile {
            n: d.n,
            table: d.table,
        }
    }
}

impl Clone for DensePmf {
    fn clone(&self) -> Self {
        DensePmf {
            n: self.n,
            table: self.table.clone(),
            cdf: OnceLock::new(),
        }
    }
}

impl PartialEq for DensePmf {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.table == other.table
    }
}

fn check_dense_dim(n: usize) -> Result<()> {
    if n > MAX_DENSE_DIM {
        return Err(Error::DimensionTooLarge {
            n,
            limit: MAX_DENSE_DIM,
        });
    }
    Ok(())
}

impl DensePmf {
    pub fn new(n: usize, table: Vec<f64>) -> Result<DensePmf> {
        check_dense_dim(n)?;
        if table.len() != 1 << n {
            return Err(Error::InvalidPmf(format!(
                "table has {} entries, expected 2^{n}",
                table.len()
            )));
        }
        if let Some(bad) = table.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidPmf(format!("entry {bad} is not a probability")));
        }
        let sum: f64 = table.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidPmf(format!("entries sum to {sum}")));
        }
        Ok(DensePmf {
            n,
            table,
            cdf: OnceLock::new(),
        })
    }

    pub fn uniform(n: usize) -> Result<DensePmf> {
        check_dense_dim(n)?;
        let p = 0.5f64.powi(n as i32);
        DensePmf::new(n, vec![p; 1 << n])
    }

    pub fn point_mass(x: &Point) -> Result<DensePmf> {
        check_dense_dim(x.dim())?;
        let mut table = vec![0.0; 1 << x.dim()];
        table[x.index()] = 1.0;
        DensePmf::new(x.dim(), table)
    }

    /// Builds a table from any pmf.
    pub fn from_pmf<D: Pmf + ?Sized>(dist: &D) -> Result<DensePmf> {
        let n = dist.dim();
        check_dense_dim(n)?;
        let table = Subcube::FULL.points(n).map(|x| dist.prob(&x)).collect();
        DensePmf::new(n, table)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Weighting function as a table: `2^n * D(x)`.
    pub fn weighting_table(&self) -> Vec<f64> {
        let scale = 2f64.powi(self.n as i32);
        self.table.iter().map(|p| p * scale).collect()
    }

    /// Exact probability of the subcube.
    pub fn weight(&self, s: &Subcube) -> f64 {
        s.points(self.n).map(|x| self.table[x.index()]).sum()
    }

    pub fn sample_bits(&self, rng: &mut (impl RngCore + ?Sized)) -> u64 {
        let cdf = self.cdf.get_or_init(|| {
            let mut acc = 0.0;
            self.table
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect()
        });
        let u = unit_f64(rng) * cdf[cdf.len() - 1];
        let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        k as u64
    }

    pub fn conditional(&self, s: &Subcube) -> Result<ConditionalSampler> {
        let mut acc = 0.0;
        let mut entries = Vec::new();
        for x in s.points(self.n) {
            let p = self.table[x.index()];
            if p > 0.0 {
                acc += p;
                entries.push((
                    Subcube {
                        mask: dim_mask(self.n),
                        values: x.bits(),
                    },
                    acc,
                ));
            }
        }
        ConditionalSampler::from_entries(self.n, entries, acc)
    }
}

/// `(1/2) * sum_x |a(x) - b(x)|`.
pub fn tv_distance(a: &DensePmf, b: &DensePmf) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            expected: a.n,
            found: b.n,
        });
    }
    let l1: f64 = a
        .table
        .iter()
        .zip(&b.table)
        .map(|(p, q)| (p - q).abs())
        .sum();
    Ok(0.5 * l1)
}

/// Conditional distribution of `d` on the subcube `s`, as a pmf over the
/// free coordinates (kept in increasing order), together with the weight
/// `Pr[x consistent with s]`.
pub fn restrict_dist(d: &DensePmf, s: &Restriction) -> Result<(DensePmf, f64)> {
    s.check_dim(d.n)?;
    let cube = s.subcube();
    let weight = d.weight(&cube);
    if !(weight > 0.0) {
        return Err(Error::ZeroWeight);
    }
    let m = d.n - s.depth();
    let mut table = vec![0.0; 1 << m];
    // points() enumerates in increasing order of the free bits, which is the
    // increasing order of the compressed index
    for (k, x) in cube.points(d.n).enumerate() {
        table[k] = d.table[x.index()] / weight;
    }
    let sum: f64 = table.iter().sum();
    for p in &mut table {
        *p /= sum;
    }
    Ok((DensePmf::new(m, table)?, weight))
}

pub fn tree_to_dense(t: &DistTree) -> Result<DensePmf> {
    DensePmf::from_pmf(t)
}

/// Builds an exact tree for `d` by recursively splitting on the smallest
/// coordinate whose two restrictions differ. The result is not guaranteed
/// to have minimal depth.
pub fn dense_to_tree(d: &DensePmf) -> Result<DistTree> {
    let root = split_exact(d, Subcube::FULL);
    DistTree::unnormalized(d.n, root)
}

fn split_exact(d: &DensePmf, s: Subcube) -> Node {
    let n = d.n;
    let free: Vec<usize> = (0..n).filter(|&i| !s.fixes(i)).collect();
    for &i in &free {
        let differs = s
            .points(n)
            .filter(|x| !x.sign(i).is_pos())
            .any(|x| d.table[x.index()] != d.table[x.flipped(i).index()]);
        if differs {
            return Node::split(
                i,
                split_exact(d, s.with(i, Sign::Neg)),
                split_exact(d, s.with(i, Sign::Pos)),
            );
        }
    }
    // no free coordinate matters: the table is constant on the subcube
    Node::leaf(d.table[s.values as usize & dim_mask(n) as usize])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e2_dense() -> DensePmf {
        // index bit0 = x0, bit1 = x1; (+,+)=0.5, (+,-)=0.25, (-,+)=0.125, (-,-)=0.125
        DensePmf::new(2, vec![0.125, 0.25, 0.125, 0.5]).unwrap()
    }

    fn pt(s: &[i8]) -> Point {
        Point::from_signs(s).unwrap()
    }

    #[test]
    fn eval_and_weighting() {
        let d = e2_dense();
        assert_eq!(eval_pmf(&d, &pt(&[1, 1])).unwrap(), 0.5);
        assert_eq!(eval_pmf(&d, &pt(&[-1, -1])).unwrap(), 0.125);
        assert_eq!(weighting(&d, &pt(&[1, 1])).unwrap(), 2.0);
        assert_eq!(weighting(&d, &pt(&[-1, 1])).unwrap(), 0.5);
        assert!(matches!(
            eval_pmf(&d, &pt(&[1, 1, 1])),
            Err(Error::DimensionMismatch { .. })
        ));
        let u = DistTree::uniform(5);
        let x = Point::ones(5);
        assert_eq!(eval_pmf(&u, &x).unwrap(), 1.0 / 32.0);
        assert_eq!(weighting(&u, &x).unwrap(), 1.0);
    }

    #[test]
    fn tv_examples() {
        let d = e2_dense();
        let u = DensePmf::uniform(2).unwrap();
        assert_eq!(tv_distance(&d, &d).unwrap(), 0.0);
        assert!((tv_distance(&d, &u).unwrap() - 0.25).abs() < 1e-15);
        let pm = DensePmf::point_mass(&pt(&[1, -1])).unwrap();
        assert!((tv_distance(&pm, &u).unwrap() - 0.75).abs() < 1e-15);
        assert!(tv_distance(&u, &DensePmf::uniform(3).unwrap()).is_err());
    }

    #[test]
    fn restriction_examples() {
        let d = e2_dense();
        let (c, w) = restrict_dist(&d, &"0=+1".parse().unwrap()).unwrap();
        assert!((w - 0.75).abs() < 1e-15);
        // remaining coordinate x1: index 0 is x1=-1, index 1 is x1=+1
        assert!((c.table()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.table()[0] - 1.0 / 3.0).abs() < 1e-15);
        let (c, w) = restrict_dist(&d, &"0=-1".parse().unwrap()).unwrap();
        assert!((w - 0.25).abs() < 1e-15);
        assert_eq!(c.table(), &[0.5, 0.5]);
        let u = DensePmf::uniform(4).unwrap();
        let (c, w) = restrict_dist(&u, &"1=+1,3=-1".parse().unwrap()).unwrap();
        assert_eq!(w, 0.25);
        assert_eq!(c, DensePmf::uniform(2).unwrap());
        let pm = DensePmf::point_mass(&pt(&[1, 1])).unwrap();
        assert!(matches!(
            restrict_dist(&pm, &"0=-1".parse().unwrap()),
            Err(Error::ZeroWeight)
        ));
    }

    #[test]
    fn conversions() {
        let u = DensePmf::uniform(3).unwrap();
        let t = dense_to_tree(&u).unwrap();
        assert_eq!(t.leaf_count(), 1);
        let d = e2_dense();
        let t = dense_to_tree(&d).unwrap();
        for x in Subcube::FULL.points(2) {
            assert_eq!(eval_pmf(&t, &x).unwrap(), d.prob(&x));
        }
        assert_eq!(tree_to_dense(&t).unwrap(), d);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(DensePmf::new(2, vec![0.5, 0.5]).is_err());
        assert!(DensePmf::new(1, vec![0.7, 0.7]).is_err());
        assert!(DensePmf::new(1, vec![1.5, -0.5]).is_err());
        assert!(DensePmf::uniform(21).is_err());
    }
}
