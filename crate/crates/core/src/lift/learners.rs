use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lift::hypothesis::{character, BoolTree, Hypothesis};
use crate::lift::LabeledSample;

/// A learner for the uniform distribution on {-1,+1}^n.
///
/// The declared `(eps, delta, c)` are used for planning only.
pub trait UniformLearner: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// Samples the learner needs for its declared guarantee.
    fn m(&self) -> usize;

    fn eps(&self) -> f64;

    fn delta(&self) -> f64;

    /// Robustness coefficient; the automatic value is `3m`.
    fn robustness(&self) -> f64 {
        3.0 * self.m() as f64
    }

    fn learn(&self, s: &LabeledSample) -> Result<Hypothesis>;
}

fn check_declared(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("learner eps must lie in (0, 1], got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("learner delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn nonempty(s: &LabeledSample) -> Result<()> {
    if s.points.is_empty() {
        return Err(Error::InsufficientSample { needed: 1, have: 0 });
    }
    Ok(())
}

/// Majority label; ties go to 0.
fn majority(ones: usize, len: usize) -> bool {
    2 * ones > len
}

/// Predicts the majority label.
#[derive(Clone, Debug)]
pub struct MajorityLearner {
    eps: f64,
    delta: f64,
}

impl MajorityLearner {
    pub fn new(eps: f64, delta: f64) -> Result<MajorityLearner> {
        check_declared(eps, delta)?;
        Ok(MajorityLearner { eps, delta })
    }
}

impl UniformLearner for MajorityLearner {
    fn name(&self) -> String {
        "majority".into()
    }

    fn m(&self) -> usize {
        // Hoeffding on the label mean
        ((2.0 / self.delta).ln() / (2.0 * self.eps * self.eps)).ceil() as usize
    }

    fn eps(&self) -> f64 {
        self.eps
    }

    fn delta(&self) -> f64 {
        self.delta
    }

    fn learn(&self, s: &LabeledSample) -> Result<Hypothesis> {
        nonempty(s)?;
        let ones = s.points.iter().filter(|(_, y)| *y).count();
        Ok(Hypothesis::Constant(majority(ones, s.points.len())))
    }
}

/// Largest depth [`exhaustive_tree_learn`] searches.
pub const TREE_MAX_DEPTH: usize = 3;
/// Largest dimension [`exhaustive_tree_learn`] searches.
pub const TREE_MAX_DIM: usize = 16;

fn erm(data: &[(u64, bool)], n: usize, k: usize, used: u64) -> (BoolTree, usize) {
    let ones = data.iter().filter(|(_, y)| *y).count();
    let label = majority(ones, data.len());
    let errors = if label { data.len() - ones } else { ones };
    let mut best = (BoolTree::Leaf(label), errors);
    if k == 0 || errors == 0 {
        return best;
    }
    let mut lo = Vec::with_capacity(data.len());
    let mut hi = Vec::with_capacity(data.len());
    for v in (0..n).filter(|v| used >> v & 1 == 0) {
        lo.clear();
        hi.clear();
        for &(x, y) in data {
            if x >> v & 1 == 1 {
                hi.push((x, y));
            } else {
                lo.push((x, y));
            }
        }
        let (tl, el) = erm(&lo, n, k - 1, used | 1 << v);
        if el >= best.1 {
            continue;
        }
        let (th, eh) = erm(&hi, n, k - 1, used | 1 << v);
        if el + eh < best.1 {
            best = (BoolTree::split(v, tl, th), el + eh);
        }
    }
    best
}

/// Depth-≤k tree with the fewest empirical errors on `s`. Ties prefer a
/// leaf, then the smaller split variable; majority ties label 0.
pub fn exhaustive_tree_learn(s: &LabeledSample, k: usize) -> Result<Hypothesis> {
    nonempty(s)?;
    if k > TREE_MAX_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "exhaustive tree search supports depth <= {TREE_MAX_DEPTH}, got {k}"
        )));
    }
    if s.n > TREE_MAX_DIM {
        return Err(Error::DimensionTooLarge { n: s.n, limit: TREE_MAX_DIM });
    }
    let data: Vec<(u64, bool)> = s.points.iter().map(|(x, y)| (x.bits(), *y)).collect();
    let (tree, _) = erm(&data, s.n, k.min(s.n), 0);
    Ok(match tree {
        BoolTree::Leaf(b) => Hypothesis::Constant(b),
        t => Hypothesis::Tree(t),
    })
}

/// Natural log of the number of depth-≤k trees over `n` coordinates with
/// no coordinate repeated on a path.
pub fn ln_tree_count(n: usize, k: usize) -> f64 {
    fn count(n: usize, k: usize) -> f64 {
        if k == 0 || n == 0 {
            2.0
        } else {
            let sub = count(n - 1, k - 1);
            2.0 + n as f64 * sub * sub
        }
    }
    count(n, k).ln()
}

/// Empirical risk minimizer over depth-≤k trees. Its sample requirement is
/// the Occam bound `(ln|H| + ln(1/δ))/ε` for consistent hypotheses.
#[derive(Clone, Debug)]
pub struct ExhaustiveTreeLearner {
    n: usize,
    k: usize,
    eps: f64,
    delta: f64,
}

impl ExhaustiveTreeLearner {
    pub fn new(n: usize, k: usize, eps: f64, delta: f64) -> Result<ExhaustiveTreeLearner> {
        check_declared(eps, delta)?;
        if k > TREE_MAX_DEPTH || n > TREE_MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "exhaustive tree learner needs k <= {TREE_MAX_DEPTH} and n <= {TREE_MAX_DIM}"
            )));
        }
        Ok(ExhaustiveTreeLearner { n, k, eps, delta })
    }
}

impl UniformLearner for ExhaustiveTreeLearner {
    fn name(&self) -> String {
        format!("tree:{}", self.k)
    }

    fn m(&self) -> usize {
        ((ln_tree_count(self.n, self.k) + (1.0 / self.delta).ln()) / self.eps).ceil() as usize
    }

    fn eps(&self) -> f64 {
        self.eps
    }

    fn delta(&self) -> f64 {
        self.delta
    }

    fn learn(&self, s: &LabeledSample) -> Result<Hypothesis> {
        exhaustive_tree_learn(s, self.k)
    }
}

/// Masks of every character of degree ≤ k over n coordinates, by degree
/// and then increasing mask.
fn low_degree_masks(n: usize, k: usize) -> Vec<u64> {
    let mut out = vec![0u64];
    let mut frontier = vec![0u64];
    for _ in 0..k.min(n) {
        let mut next = Vec::new();
        for &m in &frontier {
            let top = if m == 0 { 0 } else { 64 - m.leading_zeros() as usize };
            for i in top..n {
                next.push(m | 1 << i);
            }
        }
        next.sort_unstable();
        out.extend_from_slice(&next);
        frontier = next;
    }
    out
}

/// Estimates every correlation `E[y χ_S(x)]` with `|S| ≤ k`, keeps those
/// above the noise floor `sqrt(2 ln(4K)/N)` and predicts by the sign of the
/// truncated expansion.
pub fn low_degree_learn(s: &LabeledSample, k: usize, _eps: f64) -> Result<Hypothesis> {
    nonempty(s)?;
    let masks = low_degree_masks(s.n, k);
    let len = s.points.len() as f64;
    let floor = (2.0 * (4.0 * masks.len() as f64).ln() / len).sqrt();
    let mut sums = vec![0.0f64; masks.len()];
    for (x, y) in &s.points {
        let y = if *y { 1.0 } else { -1.0 };
        let bits = x.bits();
        for (sum, &m) in sums.iter_mut().zip(&masks) {
            *sum += y * character(m, bits);
        }
    }
    let coefficients: Vec<(u64, f64)> = masks
        .iter()
        .zip(&sums)
        .map(|(&m, &t)| (m, t / len))
        .filter(|(_, c)| c.abs() > floor)
        .collect();
    Ok(match coefficients.as_slice() {
        [] => Hypothesis::Constant(false),
        [(0, c)] => Hypothesis::Constant(*c > 0.0),
        _ => Hypothesis::LowDegree { coefficients },
    })
}

/// Low-degree algorithm. Its sample requirement makes each of the `K`
/// coefficients accurate to `sqrt(ε/K)`, so the squared error of the
/// truncated expansion is at most ε for degree-≤k targets.
#[derive(Clone, Debug)]
pub struct LowDegreeLearner {
    n: usize,
    k: usize,
    eps: f64,
    delta: f64,
}

impl LowDegreeLearner {
    pub fn new(n: usize, k: usize, eps: f64, delta: f64) -> Result<LowDegreeLearner> {
        check_declared(eps, delta)?;
        if k > n {
            return Err(Error::InvalidParameter(format!("degree {k} exceeds n = {n}")));
        }
        Ok(LowDegreeLearner { n, k, eps, delta })
    }

    fn characters(&self) -> f64 {
        low_degree_masks(self.n, self.k).len() as f64
    }
}

impl UniformLearner for LowDegreeLearner {
    fn name(&self) -> String {
        format!("lowdeg:{}", self.k)
    }

    fn m(&self) -> usize {
        let kk = self.characters();
        (2.0 * kk * (2.0 * kk / self.delta).ln() / self.eps).ceil() as usize
    }

    fn eps(&self) -> f64 {
        self.eps
    }

    fn delta(&self) -> f64 {
        self.delta
    }

    fn learn(&self, s: &LabeledSample) -> Result<Hypothesis> {
        low_degree_learn(s, self.k, self.eps)
    }
}

/// Learner descriptor as given on the command line: `lowdeg:k`, `tree:k`
/// or `majority`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LearnerSpec {
    LowDegree(usize),
    Tree(usize),
    Majority,
}

impl LearnerSpec {
    pub fn build(self, n: usize, eps: f64, delta: f64) -> Result<Arc<dyn UniformLearner>> {
        Ok(match self {
            LearnerSpec::LowDegree(k) => Arc::new(LowDegreeLearner::new(n, k, eps, delta)?),
            LearnerSpec::Tree(k) => Arc::new(ExhaustiveTreeLearner::new(n, k, eps, delta)?),
            LearnerSpec::Majority => Arc::new(MajorityLearner::new(eps, delta)?),
        })
    }
}

impl FromStr for LearnerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<LearnerSpec> {
        let bad = || Error::InvalidParameter(format!("unknown learner `{s}`"));
        if s == "majority" {
            return Ok(LearnerSpec::Majority);
        }
        let (name, k) = s.split_once(':').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        match name {
            "lowdeg" => Ok(LearnerSpec::LowDegree(k)),
            "tree" => Ok(LearnerSpec::Tree(k)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnerSpec::LowDegree(k) => write!(f, "lowdeg:{k}"),
            LearnerSpec::Tree(k) => write!(f, "tree:{k}"),
            LearnerSpec::Majority => write!(f, "majority"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::Point;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_sample(n: usize, size: usize, seed: u64, f: impl Fn(u64) -> bool) -> LabeledSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..size)
            .map(|_| {
                let x = Point::uniform(n, &mut rng);
                let y = f(x.bits());
                (x, y)
            })
            .collect();
        LabeledSample::new(n, points, "uniform").unwrap()
    }

    fn exact_error(n: usize, h: &Hypothesis, f: impl Fn(u64) -> bool) -> f64 {
        (0..1u64 << n).filter(|&x| h.eval_bits(x) != f(x)).count() as f64 / (1u64 << n) as f64
    }

    #[test]
    fn masks_by_degree() {
        assert_eq!(low_degree_masks(3, 1), vec![0, 1, 2, 4]);
        assert_eq!(low_degree_masks(3, 2), vec![0, 1, 2, 4, 3, 5, 6]);
        assert_eq!(low_degree_masks(10, 2).len(), 56);
    }

    #[test]
    fn depth_one_recovered_exactly() {
        let f = |x: u64| x >> 4 & 1 == 0;
        let s = uniform_sample(8, 1000, 1, f);
        let h = exhaustive_tree_learn(&s, 1).unwrap();
        assert!(matches!(h, Hypothesis::Tree(BoolTree::Split { var: 4, .. })));
        assert_eq!(exact_error(8, &h, f), 0.0);
    }

    #[test]
    fn all_zero_labels_give_constant_zero() {
        let s = uniform_sample(6, 50, 2, |_| false);
        assert!(matches!(exhaustive_tree_learn(&s, 2).unwrap(), Hypothesis::Constant(false)));
        assert!(matches!(low_degree_learn(&s, 2, 0.1).unwrap(), Hypothesis::Constant(false)));
    }

    #[test]
    fn noisy_depth_two_tree() {
        let f = |x: u64| if x & 1 == 1 { x >> 3 & 1 == 1 } else { x >> 5 & 1 == 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = uniform_sample(8, 4000, 3, f);
        for p in &mut s.points {
            if rng.random_bool(0.05) {
                p.1 = !p.1;
            }
        }
        let h = exhaustive_tree_learn(&s, 2).unwrap();
        let emp = s.points.iter().filter(|(x, y)| h.predict(x) != *y).count() as f64 / 4000.0;
        assert!(emp <= 0.07, "{emp}");
    }

    #[test]
    fn low_degree_examples() {
        let dict = |x: u64| x >> 2 & 1 == 1;
        let h = low_degree_learn(&uniform_sample(8, 10_000, 4, dict), 1, 0.1).unwrap();
        assert_eq!(exact_error(8, &h, dict), 0.0);
        let parity = |x: u64| (x & 0b1010).count_ones() % 2 == 0;
        let h = low_degree_learn(&uniform_sample(8, 10_000, 5, parity), 2, 0.1).unwrap();
        assert!(exact_error(8, &h, parity) <= 0.05);
        let h = low_degree_learn(&uniform_sample(8, 100, 6, |_| true), 2, 0.1).unwrap();
        assert!(matches!(h, Hypothesis::Constant(true)));
    }

    #[test]
    fn tree_count_and_occam() {
        assert!((ln_tree_count(5, 0) - 2f64.ln()).abs() < 1e-12);
        // 2 + 8·(2 + 7·4)² = 7202
        assert!((ln_tree_count(8, 2) - 7202f64.ln()).abs() < 1e-9);
        let l = ExhaustiveTreeLearner::new(8, 2, 0.1, 0.5).unwrap();
        assert_eq!(l.m(), ((7202f64.ln() + 2f64.ln()) / 0.1).ceil() as usize);
        assert_eq!(l.robustness(), 3.0 * l.m() as f64);
    }

    #[test]
    fn specs() {
        assert_eq!("tree:2".parse::<LearnerSpec>().unwrap(), LearnerSpec::Tree(2));
        assert_eq!("lowdeg:1".parse::<LearnerSpec>().unwrap(), LearnerSpec::LowDegree(1));
        assert_eq!("majority".parse::<LearnerSpec>().unwrap(), LearnerSpec::Majority);
        assert!("forest:2".parse::<LearnerSpec>().is_err());
        assert_eq!(LearnerSpec::Tree(3).to_string(), "tree:3");
        assert!(LearnerSpec::Tree(4).build(8, 0.1, 0.1).is_err());
    }
}
