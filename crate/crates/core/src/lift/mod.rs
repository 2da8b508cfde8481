//! Lifting uniform-distribution learners to decision-tree distributions.

mod boost;
mod hypothesis;
mod learners;

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::builddt::{learn_with_plan, LearnPlan, Learned};
use crate::cube::{Point, Subcube};
use crate::dense::DensePmf;
use crate::error::{Error, Result};
use crate::influence::InfluenceKind;
use crate::oracle::DistOracle;
use crate::seed;
use crate::testbed::TruthTable;
use crate::tree::DistTree;

pub use boost::{boost, boost_holdout, boost_runs, BoostedLearner};
pub use hypothesis::{character, BoolTree, Hypothesis, Routed, TABLE_MAX_DIM};
pub use learners::{
    exhaustive_tree_learn, ln_tree_count, low_degree_learn, ExhaustiveTreeLearner, LearnerSpec,
    LowDegreeLearner, MajorityLearner, UniformLearner, TREE_MAX_DEPTH, TREE_MAX_DIM,
};

/// Labeled points `(x, f*(x))` over a common dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub n: usize,
    pub points: Vec<(Point, bool)>,
    pub source_tag: String,
}

impl LabeledSample {
    pub fn new(n: usize, points: Vec<(Point, bool)>, source_tag: &str) -> Result<LabeledSample> {
        if let Some((x, _)) = points.iter().find(|(x, _)| x.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.dim(),
            });
        }
        Ok(LabeledSample {
            n,
            points,
            source_tag: source_tag.to_string(),
        })
    }

    /// Draws `size` points from `stream`.
    pub fn draw(
        n: usize,
        size: u64,
        source_tag: &str,
        mut stream: impl FnMut() -> Result<(Point, bool)>,
    ) -> Result<LabeledSample> {
        let points = (0..size).map(|_| stream()).collect::<Result<Vec<_>>>()?;
        LabeledSample::new(n, points, source_tag)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `⌈8·(d + m + ln(2^{d+1}/δ))·2^d/ε⌉`: enough labeled points that every
/// leaf of mass at least `ε/2^d` receives `m` of them.
pub fn required_sample_size(m: usize, d: usize, eps: f64, delta: f64) -> u64 {
    assert!(eps > 0.0 && delta > 0.0, "eps and delta must be positive");
    let leaves = (d as f64).exp2();
    let logs = (2.0 * leaves / delta).ln();
    (8.0 * (d as f64 + m as f64 + logs) * leaves / eps).ceil() as u64
}

/// Routes every point to its leaf of `t` and rerandomizes the coordinates
/// on that leaf's path. Output is in [`DistTree::leaves`] order.
pub fn split_and_rerandomize(
    t: &DistTree,
    s: &LabeledSample,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<Vec<LabeledSample>> {
    if t.dim() != s.n {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: s.n,
        });
    }
    let cubes: Vec<Subcube> = t.leaves().iter().map(|l| l.cube).collect();
    let mut out: Vec<LabeledSample> = t
        .leaves()
        .iter()
        .map(|l| LabeledSample {
            n: s.n,
            points: Vec::new(),
            source_tag: format!("{}@{}", s.source_tag, l.path),
        })
        .collect();
    for (x, y) in &s.points {
        let k = t.route(x);
        let mask = cubes[k].mask;
        let bits = if mask == 0 {
            x.bits()
        } else {
            (x.bits() & !mask) | (rng.next_u64() & mask)
        };
        out[k].points.push((Point::from_bits_unchecked(s.n, bits), *y));
    }
    Ok(out)
}

/// What happened at one leaf.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LeafStatus {
    Learned,
    /// Fewer than `m` points; constant 0 was used.
    TooFew,
    /// The learner failed; constant 0 was used.
    Failed { error: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafReport {
    pub leaf: String,
    pub points: usize,
    #[serde(flatten)]
    pub status: LeafStatus,
}

#[derive(Clone, Debug)]
pub struct LiftOutcome {
    pub hypothesis: Hypothesis,
    pub leaves: Vec<LeafReport>,
}

/// Splits `s` by the leaves of `t`, runs `learner` on each leaf's
/// rerandomized sample and stitches the results onto `t`.
pub fn lift_learn(
    t: &DistTree,
    learner: &dyn UniformLearner,
    s: &LabeledSample,
    seed: u64,
) -> Result<LiftOutcome> {
    let m = learner.m();
    let needed = required_sample_size(m, t.depth(), learner.eps(), learner.delta());
    if (s.len() as u64) < needed {
        log::warn!(
            "lift_learn: {} labeled points, guarantee needs {needed}",
            s.len()
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, "rerandomize"));
    let parts = split_and_rerandomize(t, s, &mut rng)?;
    let results: Vec<(Hypothesis, LeafReport)> = parts
        .into_par_iter()
        .zip(t.leaves().par_iter())
        .map(|(part, leaf)| {
            let points = part.len();
            let leaf = leaf.path.to_string();
            let (h, status) = if points < m.max(1) {
                (Hypothesis::Constant(false), LeafStatus::TooFew)
            } else {
                match learner.learn(&part) {
                    Ok(h) => (h, LeafStatus::Learned),
                    Err(e) => {
                        log::warn!("lift_learn: learner failed at leaf {leaf}: {e}");
                        (Hypothesis::Constant(false), LeafStatus::Failed { error: e.to_string() })
                    }
                }
            };
            (h, LeafReport { leaf, points, status })
        })
        .collect();
    let (hyps, leaves): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(LiftOutcome {
        hypothesis: Hypothesis::routed(t, hyps),
        leaves,
    })
}

/// `Pr_{x~D}[h(x) ≠ f*(x)]`, exactly.
pub fn weighted_error(h: &Hypothesis, target: &TruthTable, d: &DensePmf) -> Result<f64> {
    target.error_under(d, |x| h.predict(x))
}

/// Settings for [`end_to_end`]. Fields may be overridden before the run.
#[derive(Clone, Debug, Serialize)]
pub struct LiftPlan {
    pub n: usize,
    pub depth: usize,
    pub eps: f64,
    pub delta: f64,
    /// Distribution learning run; its TV target defaults to `ε/(3m)`.
    pub dist: LearnPlan,
    /// Failure probability each leaf's learner is boosted to.
    pub leaf_delta: f64,
}

impl LiftPlan {
    /// Defaults for a learner needing `m` samples: TV target `ε/(3m)` with
    /// failure δ/2, and per-leaf failure `δ/(2·2^d)`.
    pub fn new(n: usize, depth: usize, eps: f64, delta: f64, kind: InfluenceKind, m: usize) -> Result<LiftPlan> {
        if !(eps > 0.0 && delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lift needs eps > 0 and delta in (0, 1), got {eps}, {delta}"
            )));
        }
        let c = 3.0 * m.max(1) as f64;
        let dist = LearnPlan::new(n, depth, eps / c, delta / 2.0, kind)?;
        Ok(LiftPlan {
            n,
            depth,
            eps,
            delta,
            dist,
            leaf_delta: delta / (2.0 * (depth as f64).exp2()),
        })
    }

    /// Builds the learner named by `spec` with accuracy ε and failure
    /// probability equal to the per-leaf target, then plans around it.
    pub fn for_learner(
        n: usize,
        depth: usize,
        eps: f64,
        delta: f64,
        kind: InfluenceKind,
        spec: LearnerSpec,
    ) -> Result<(LiftPlan, Arc<dyn UniformLearner>)> {
        let leaf_delta = delta / (2.0 * (depth as f64).exp2());
        let learner = spec.build(n, eps, leaf_delta)?;
        let plan = LiftPlan::new(n, depth, eps, delta, kind, learner.m())?;
        Ok((plan, learner))
    }
}

/// Result of [`end_to_end`].
#[derive(Debug)]
pub struct EndToEnd {
    pub hypothesis: Hypothesis,
    pub learned: Learned,
    pub learner: Arc<dyn UniformLearner>,
    pub sample_size: u64,
    pub leaves: Vec<LeafReport>,
}

/// Learns the distribution, boosts the learner per leaf, draws the labeled
/// sample and lifts. Errors name the stage that failed.
pub fn end_to_end(
    d_oracle: &mut DistOracle,
    labeled_stream: impl FnMut() -> Result<(Point, bool)>,
    learner: Arc<dyn UniformLearner>,
    plan: &LiftPlan,
) -> Result<EndToEnd> {
    let learned = learn_with_plan(d_oracle, &plan.dist).map_err(|e| e.in_stage("learn-distribution"))?;
    let boosted = boost(learner, plan.leaf_delta).map_err(|e| e.in_stage("boost"))?;
    let sample_size = required_sample_size(boosted.m(), plan.depth, plan.eps, plan.delta);
    let s = LabeledSample::draw(plan.n, sample_size, "labeled", labeled_stream)
        .map_err(|e| e.in_stage("draw-sample"))?;
    let outcome = lift_learn(&learned.tree, boosted.as_ref(), &s, seed::derive(d_oracle.seed(), "lift"))
        .map_err(|e| e.in_stage("lift"))?;
    Ok(EndToEnd {
        hypothesis: outcome.hypothesis,
        learned,
        learner: boosted,
        sample_size,
        leaves: outcome.leaves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::AccessMode;
    use crate::tree::Node;

    fn e2() -> DistTree {
        DistTree::new(
            2,
            Node::split(0, Node::leaf(0.125), Node::split(1, Node::leaf(0.25), Node::leaf(0.5))),
        )
        .unwrap()
    }

    #[test]
    fn sample_size_formula() {
        // 8·(3 + 50 + ln 160)·8/0.1
        assert_eq!(required_sample_size(50, 3, 0.1, 0.1), 37_169);
        assert_eq!(required_sample_size(10, 0, 1.0, 0.5), (8.0 * (10.0 + 4f64.ln())).ceil() as u64);
        assert!(required_sample_size(10, 0, 1.0, 1e-6) > required_sample_size(10, 0, 1.0, 1e-3));
        let a = required_sample_size(20, 2, 0.1, 0.1);
        let b = required_sample_size(20, 4, 0.1, 0.1);
        assert!(b as f64 >= 4.0 * a as f64);
    }

    #[test]
    fn single_leaf_sample_is_untouched() {
        let mut o = DistOracle::from_tree(e2(), AccessMode::Sample, 1);
        let s = LabeledSample::draw(2, 50, "e2", || Ok((o.sample()?, true))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let parts = split_and_rerandomize(&DistTree::uniform(2), &s, &mut rng).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].points, s.points);
    }

    #[test]
    fn e2_split_marginals() {
        let t = e2();
        let mut o = DistOracle::from_tree(t.clone(), AccessMode::Sample, 7);
        let s = LabeledSample::draw(2, 100_000, "e2", || Ok((o.sample()?, false))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let parts = split_and_rerandomize(&t, &s, &mut rng).unwrap();
        assert_eq!(parts.iter().map(|p| p.len()).sum::<usize>(), 100_000);
        let last = &parts[2];
        let frac = last.len() as f64 / 1e5;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
        for i in 0..2 {
            let mean = last.points.iter().map(|(x, _)| x.value(i) as f64).sum::<f64>() / last.len() as f64;
            assert!(mean.abs() < 0.02, "{mean}");
        }
    }

    #[test]
    fn constant_target_lifts_to_constant() {
        let t = e2();
        let mut o = DistOracle::from_tree(t.clone(), AccessMode::Sample, 2);
        let s = LabeledSample::draw(2, 2_000, "e2", || Ok((o.sample()?, true))).unwrap();
        let l = MajorityLearner::new(0.1, 0.1).unwrap();
        let out = lift_learn(&t, &l, &s, 3).unwrap();
        assert!(out.leaves.iter().all(|r| r.status == LeafStatus::Learned));
        let d = crate::dense::tree_to_dense(&t).unwrap();
        let ones = TruthTable::from_fn(2, |_| true).unwrap();
        assert_eq!(weighted_error(&out.hypothesis, &ones, &d).unwrap(), 0.0);
    }

    #[test]
    fn sparse_leaves_get_constant_zero() {
        let t = e2();
        let pts = vec![(Point::from_bits_unchecked(2, 0b11), true); 5];
        let s = LabeledSample::new(2, pts, "tiny").unwrap();
        let l = MajorityLearner::new(0.1, 0.1).unwrap();
        let out = lift_learn(&t, &l, &s, 0).unwrap();
        assert!(out.leaves.iter().all(|r| r.status == LeafStatus::TooFew));
        assert!(!out.hypothesis.eval_bits(0b11));
    }

    #[test]
    fn plan_defaults() {
        let p = LiftPlan::new(10, 2, 0.1, 0.1, InfluenceKind::MonotoneBias, 100).unwrap();
        assert!((p.dist.eps - 0.1 / 300.0).abs() < 1e-15);
        assert_eq!(p.dist.delta, 0.05);
        assert!((p.leaf_delta - 0.0125).abs() < 1e-15);
    }
}
