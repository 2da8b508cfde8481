//! BuildDT: exhaustive search over depth-`d`, everywhere τ-influential trees
//! for the one minimizing the average total influence at its leaves.
//!
//! Every internal node of a candidate tree splits on a variable whose
//! influence under the node's restriction is at least τ. Among those trees
//! the search returns one minimizing
//! `objective(leaf at s) = Σ_{i free} Inf_i((f_D)_s)` and
//! `objective(split) = (objective(lo) + objective(hi)) / 2`.
//! Leaves are then labelled with `2^{|s|} · Pr[s]`.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cube::{Restriction, Sign, Subcube};
use crate::dense::{tv_distance, DensePmf};
use crate::error::{Error, Result};
use crate::influence::{InfluenceKind, InfluenceOracle, WeightPool};
use crate::oracle::{AccessMode, DistOracle, QueryCounts};
use crate::tree::{DistTree, Node};

/// Where the candidate cut sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Keep variables with influence ≥ τ.
    Exact,
    /// Keep variables with estimated influence ≥ 3τ/4.
    Estimated,
}

/// Objective improvements smaller than this do not displace an earlier
/// (smaller-index) candidate.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildParams {
    pub depth_budget: usize,
    pub tau: f64,
    pub eps: f64,
    pub delta: f64,
    pub leaf_sample_count: u64,
    pub threshold_mode: ThresholdMode,
}

impl BuildParams {
    pub fn new(
        depth_budget: usize,
        tau: f64,
        eps: f64,
        delta: f64,
        threshold_mode: ThresholdMode,
    ) -> Result<BuildParams> {
        let p = BuildParams {
            depth_budget,
            tau,
            eps,
            delta,
            leaf_sample_count: leaf_sample_count(depth_budget, eps, delta),
            threshold_mode,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0,1), got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if self.leaf_sample_count == 0 {
            return Err(Error::InvalidParameter("leaf_sample_count must be positive".into()));
        }
        Ok(())
    }

    pub fn threshold(&self) -> f64 {
        match self.threshold_mode {
            ThresholdMode::Exact => self.tau,
            ThresholdMode::Estimated => 0.75 * self.tau,
        }
    }

    /// Abort threshold on recursive calls: `(16 d³/ε)^d · n`.
    pub fn call_limit(&self, n: usize) -> f64 {
        call_bound(self.depth_budget, self.eps) * n as f64
    }
}

/// `(16 d³/ε)^d`, the bound on recursive calls.
pub fn call_bound(d: usize, eps: f64) -> f64 {
    let d = d as f64;
    (16.0 * d.powi(3) / eps).powf(d)
}

/// Default τ = ε/(8d²), or ε when d = 0.
pub fn default_tau(d: usize, eps: f64) -> f64 {
    if d == 0 {
        return eps;
    }
    eps / (8.0 * (d * d) as f64)
}

/// `ceil(32 · 4^d · ln(2^{d+2}/δ) / ε²)`.
pub fn leaf_sample_count(d: usize, eps: f64, delta: f64) -> u64 {
    let d = d as f64;
    (32.0 * 4f64.powf(d) * ((d + 2.0).exp2() / delta).ln() / (eps * eps)).ceil() as u64
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    #[serde(rename = "calls")]
    pub recursive_calls: u64,
    pub influence_queries: u64,
    pub leaf_estimates: u64,
    pub memo_hits: u64,
}

/// Candidate split variables at `s`, in increasing order.
pub fn candidate_set(
    oracle: &mut InfluenceOracle,
    s: &Restriction,
    p: &BuildParams,
) -> Result<Vec<usize>> {
    let cut = p.threshold();
    Ok(oracle
        .estimate_all(s)?
        .iter()
        .filter(|e| e.value >= cut)
        .map(|e| e.coordinate)
        .collect())
}

/// `2^{|s|} · Pr[s]`: exact when the oracle grants pmf access, otherwise
/// from `leaf_sample_count` fresh plain samples.
pub fn leaf_label(oracle: &mut DistOracle, s: &Restriction, p: &BuildParams) -> Result<f64> {
    let scale = (s.depth() as f64).exp2();
    if oracle.mode() == AccessMode::ExactPmf {
        return Ok(scale * oracle.exact_weight(s)?);
    }
    s.check_dim(oracle.dim())?;
    let cube = s.subcube();
    let mut hits = 0u64;
    oracle.sample_many(p.leaf_sample_count, |x| hits += u64::from(cube.contains(&x)))?;
    Ok(scale * hits as f64 / p.leaf_sample_count as f64)
}

/// A tree skeleton without labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeShape {
    Leaf,
    Split {
        var: usize,
        lo: Box<TreeShape>,
        hi: Box<TreeShape>,
    },
}

impl TreeShape {
    pub fn split(var: usize, lo: TreeShape, hi: TreeShape) -> TreeShape {
        TreeShape::Split {
            var,
            lo: Box::new(lo),
            hi: Box::new(hi),
        }
    }

    pub fn of(node: &Node) -> TreeShape {
        match node {
            Node::Leaf { .. } => TreeShape::Leaf,
            Node::Split { var, lo, hi } => {
                TreeShape::split(*var, TreeShape::of(lo), TreeShape::of(hi))
            }
        }
    }
}

/// Leaf-uniform average of the total influence at the leaves of `shape`
/// rooted at `s`.
pub fn tree_objective(
    shape: &TreeShape,
    s: &Restriction,
    oracle: &mut InfluenceOracle,
) -> Result<f64> {
    match shape {
        TreeShape::Leaf => Ok(oracle.estimate_all(s)?.iter().map(|e| e.value).sum()),
        TreeShape::Split { var, lo, hi } => {
            let a = tree_objective(lo, &s.with(*var, Sign::Neg)?, oracle)?;
            let b = tree_objective(hi, &s.with(*var, Sign::Pos)?, oracle)?;
            Ok((a + b) / 2.0)
        }
    }
}

/// Leaf labels, as `2^{|s|} · Pr[s]`.
enum Labels<'a> {
    Exact(&'a mut DistOracle),
    Pool(Arc<WeightPool>),
}

impl Labels<'_> {
    fn label(&mut self, s: &Subcube) -> Result<f64> {
        let scale = (s.depth() as f64).exp2();
        match self {
            Labels::Exact(o) => Ok(scale * o.exact_weight(&Restriction::from_subcube(*s))?),
            Labels::Pool(pool) => Ok(scale * pool.weight(s)),
        }
    }
}

struct Search<'a, 'b> {
    n: usize,
    params: &'b BuildParams,
    influence: &'b mut InfluenceOracle,
    labels: Labels<'a>,
    memo: HashMap<(Subcube, usize), (Node, f64)>,
    stats: SearchStats,
    limit: f64,
}

impl Search<'_, '_> {
    fn run(&mut self, s: Subcube, budget: usize) -> Result<(Node, f64)> {
        self.stats.recursive_calls += 1;
        if self.stats.recursive_calls as f64 > self.limit {
            return Err(Error::BudgetExceeded {
                calls: self.stats.recursive_calls,
                limit: self.limit,
            });
        }
        if let Some(hit) = self.memo.get(&(s, budget)) {
            self.stats.memo_hits += 1;
            return Ok(hit.clone());
        }
        let r = Restriction::from_subcube(s);
        let before = self.influence.queries();
        let est = self.influence.estimate_all(&r)?;
        self.stats.influence_queries += self.influence.queries() - before;
        let cut = self.params.threshold();
        let candidates: Vec<usize> =
            est.iter().filter(|e| e.value >= cut).map(|e| e.coordinate).collect();
        let result = if candidates.is_empty() || budget == 0 {
            let objective = est.iter().map(|e| e.value).sum();
            self.stats.leaf_estimates += 1;
            let label = self.labels.label(&s)?;
            (Node::leaf(label / (self.n as f64).exp2()), objective)
        } else {
            let mut best: Option<(Node, f64)> = None;
            for i in candidates {
                let (lo, a) = self.run(s.with(i, Sign::Neg), budget - 1)?;
                let (hi, b) = self.run(s.with(i, Sign::Pos), budget - 1)?;
                let obj = (a + b) / 2.0;
                if best.as_ref().is_none_or(|(_, o)| obj < o - TIE_TOLERANCE) {
                    best = Some((Node::split(i, lo, hi), obj));
                }
            }
            best.expect("nonempty candidate set")
        };
        self.memo.insert((s, budget), result.clone());
        Ok(result)
    }
}

/// Result of [`build_dt`]: the subtree at `s`, with leaves holding
/// unnormalized densities `label / 2^n`.
#[derive(Clone, Debug)]
pub struct BuildOutput {
    pub root: Node,
    pub objective: f64,
    pub stats: SearchStats,
}

/// Runs the search below `s`. Leaf labels are exact when `d_oracle` grants
/// pmf access and the influence oracle is exact; otherwise they come from
/// one shared pool of `leaf_sample_count` plain samples.
pub fn build_dt(
    d_oracle: &mut DistOracle,
    i_oracle: &mut InfluenceOracle,
    s: &Restriction,
    p: &BuildParams,
) -> Result<BuildOutput> {
    let labels = if i_oracle.kind() == InfluenceKind::Exact {
        d_oracle.require(AccessMode::ExactPmf)?;
        Labels::Exact(d_oracle)
    } else {
        Labels::Pool(Arc::new(WeightPool::draw(d_oracle, p.leaf_sample_count)?))
    };
    build_with_labels(i_oracle.dim(), i_oracle, labels, s, p)
}

fn build_with_labels(
    n: usize,
    i_oracle: &mut InfluenceOracle,
    labels: Labels<'_>,
    s: &Restriction,
    p: &BuildParams,
) -> Result<BuildOutput> {
    p.validate()?;
    s.check_dim(n)?;
    if p.depth_budget + s.depth() > n {
        return Err(Error::InvalidParameter(format!(
            "depth budget {} exceeds the {} free coordinates",
            p.depth_budget,
            n - s.depth()
        )));
    }
    if p.threshold_mode == ThresholdMode::Estimated
        && i_oracle.kind() != InfluenceKind::Exact
        && i_oracle.accuracy() > p.tau / 4.0 + 1e-15
    {
        return Err(Error::InvalidParameter(format!(
            "estimated threshold needs influence accuracy <= tau/4 = {}, got {}",
            p.tau / 4.0,
            i_oracle.accuracy()
        )));
    }
    let mut search = Search {
        n,
        params: p,
        influence: i_oracle,
        labels,
        memo: HashMap::new(),
        stats: SearchStats::default(),
        limit: p.call_limit(n),
    };
    let (root, objective) = search.run(s.subcube(), p.depth_budget)?;
    Ok(BuildOutput {
        root,
        objective,
        stats: search.stats,
    })
}

/// Settings for [`learn_distribution`]. [`LearnPlan::new`] fills in the
/// defaults; every field may be overridden before the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnPlan {
    pub n: usize,
    pub depth: usize,
    pub eps: f64,
    pub delta: f64,
    pub kind: InfluenceKind,
    /// Split threshold, default ε/(8d²).
    pub tau: f64,
    /// Accuracy of each influence estimate, default min(τ/4, ε/n).
    pub accuracy: f64,
    /// Failure probability of each influence estimate, default δ split
    /// evenly over every (restriction, coordinate) pair the search can touch.
    pub estimate_confidence: f64,
    /// Plain samples for leaf labels and weights.
    pub leaf_samples: u64,
}

/// Number of restrictions of depth ≤ d over n coordinates.
fn lattice_size(n: usize, d: usize) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    for k in 0..=d.min(n) {
        total += binom * (k as f64).exp2();
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    total
}

impl LearnPlan {
    pub fn new(n: usize, depth: usize, eps: f64, delta: f64, kind: InfluenceKind) -> Result<LearnPlan> {
        if depth > n {
            return Err(Error::InvalidParameter(format!("depth {depth} exceeds n = {n}")));
        }
        let tau = default_tau(depth, eps);
        let plan = LearnPlan {
            n,
            depth,
            eps,
            delta,
            kind,
            tau,
            accuracy: (tau / 4.0).min(eps / n.max(1) as f64),
            estimate_confidence: delta / (2.0 * n.max(1) as f64 * lattice_size(n, depth)),
            leaf_samples: leaf_sample_count(depth, eps, delta),
        };
        plan.params()?;
        Ok(plan)
    }

    /// Overrides τ and resets the accuracy to min(τ/4, ε/n).
    pub fn with_tau(mut self, tau: f64) -> LearnPlan {
        self.tau = tau;
        self.accuracy = (tau / 4.0).min(self.eps / self.n.max(1) as f64);
        self
    }

    pub fn threshold_mode(&self) -> ThresholdMode {
        match self.kind {
            InfluenceKind::Exact => ThresholdMode::Exact,
            _ => ThresholdMode::Estimated,
        }
    }

    pub fn params(&self) -> Result<BuildParams> {
        let p = BuildParams {
            depth_budget: self.depth,
            tau: self.tau,
            eps: self.eps,
            delta: self.delta,
            leaf_sample_count: self.leaf_samples,
            threshold_mode: self.threshold_mode(),
        };
        p.validate()?;
        Ok(p)
    }
}

/// A learned distribution and how it was obtained.
#[derive(Clone, Debug)]
pub struct Learned {
    /// Normalized output.
    pub tree: DistTree,
    /// Leaf densities before renormalization, in [`DistTree::leaves`] order.
    pub raw_densities: Vec<f64>,
    pub objective: f64,
    pub stats: SearchStats,
    /// Queries to the distribution, including those made for influences.
    pub counts: QueryCounts,
    pub plan: LearnPlan,
}

#[derive(Serialize)]
struct StatsRecord {
    calls: u64,
    influence_queries: u64,
    leaf_estimates: u64,
    objective: f64,
    samples_used: u64,
    subcube_queries: u64,
    exact_queries: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tv_exact: Option<f64>,
}

impl Learned {
    /// Stats record; `tv_exact` is present when a reference pmf is given.
    pub fn stats_json(&self, reference: Option<&DensePmf>) -> Result<serde_json::Value> {
        let tv_exact = match reference {
            Some(d) => Some(tv_distance(&DensePmf::from_pmf(&self.tree)?, d)?),
            None => None,
        };
        Ok(serde_json::to_value(StatsRecord {
            calls: self.stats.recursive_calls,
            influence_queries: self.stats.influence_queries,
            leaf_estimates: self.stats.leaf_estimates,
            objective: self.objective,
            samples_used: self.counts.sample,
            subcube_queries: self.counts.subcube,
            exact_queries: self.counts.exact,
            tv_exact,
        })?)
    }
}

/// Learns a depth-`d` tree approximation of the oracle's distribution with
/// the default plan.
pub fn learn_distribution(
    d_oracle: &mut DistOracle,
    n: usize,
    d: usize,
    eps: f64,
    delta: f64,
    kind: InfluenceKind,
) -> Result<Learned> {
    let plan = LearnPlan::new(n, d, eps, delta, kind)?;
    learn_with_plan(d_oracle, &plan)
}

/// Learns with explicit settings.
pub fn learn_with_plan(d_oracle: &mut DistOracle, plan: &LearnPlan) -> Result<Learned> {
    if d_oracle.dim() != plan.n {
        return Err(Error::DimensionMismatch {
            expected: plan.n,
            found: d_oracle.dim(),
        });
    }
    let params = plan.params()?;
    d_oracle.require(plan.kind.required_mode())?;
    let source = d_oracle.split(1);
    let root = Restriction::empty();
    let (out, source_counts) = match plan.kind {
        InfluenceKind::Exact => {
            let mut i_oracle = InfluenceOracle::exact(source)?;
            let out = build_with_labels(plan.n, &mut i_oracle, Labels::Exact(d_oracle), &root, &params)?;
            (out, i_oracle.source_counts())
        }
        kind => {
            let pool = Arc::new(WeightPool::draw(d_oracle, params.leaf_sample_count)?);
            let mut i_oracle =
                InfluenceOracle::new(kind, source, plan.accuracy, plan.estimate_confidence)?
                    .with_weight_pool(pool.clone());
            let out = build_with_labels(plan.n, &mut i_oracle, Labels::Pool(pool), &root, &params)?;
            (out, i_oracle.source_counts())
        }
    };
    d_oracle.absorb(source_counts);
    finish(d_oracle, plan, out)
}

fn finish(d_oracle: &DistOracle, plan: &LearnPlan, out: BuildOutput) -> Result<Learned> {
    let raw = DistTree::unnormalized(plan.n, out.root)?;
    let raw_densities = raw.leaves().iter().map(|l| l.density).collect();
    let tree = raw.normalized()?;
    Ok(Learned {
        tree,
        raw_densities,
        objective: out.objective,
        stats: out.stats,
        counts: d_oracle.counts(),
        plan: plan.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::tree_to_dense;

    fn e2_tree() -> DistTree {
        DistTree::new(
            2,
            Node::split(0, Node::leaf(0.125), Node::split(1, Node::leaf(0.25), Node::leaf(0.5))),
        )
        .unwrap()
    }

    fn exact_oracles(t: DistTree) -> (DistOracle, InfluenceOracle) {
        let d = DistOracle::from_tree(t, AccessMode::ExactPmf, 0);
        let i = InfluenceOracle::exact(d.split(1)).unwrap();
        (d, i)
    }

    #[test]
    fn formulas() {
        assert!((default_tau(3, 0.1) - 0.1 / 72.0).abs() < 1e-15);
        assert_eq!(leaf_sample_count(0, 1.0, 0.5), (32.0 * 8f64.ln()).ceil() as u64);
        assert!((call_bound(2, 0.1) - 1280f64.powi(2)).abs() < 1e-6);
        assert_eq!(call_bound(0, 0.1), 1.0);
        assert_eq!(lattice_size(3, 1), 7.0);
        assert_eq!(lattice_size(2, 2), 9.0);
    }

    #[test]
    fn candidates_on_e2() {
        let (_, mut i) = exact_oracles(e2_tree());
        let e = Restriction::empty();
        let p = BuildParams::new(2, 0.1, 0.2, 0.1, ThresholdMode::Exact).unwrap();
        assert_eq!(candidate_set(&mut i, &e, &p).unwrap(), vec![0, 1]);
        let p = BuildParams::new(2, 0.3, 0.5, 0.1, ThresholdMode::Exact).unwrap();
        assert_eq!(candidate_set(&mut i, &e, &p).unwrap(), vec![0]);
        let (_, mut u) = exact_oracles(DistTree::uniform(3));
        assert!(candidate_set(&mut u, &e, &p).unwrap().is_empty());
    }

    #[test]
    fn leaf_labels_on_e2() {
        let (mut d, _) = exact_oracles(e2_tree());
        let p = BuildParams::new(2, 0.1, 0.2, 0.1, ThresholdMode::Exact).unwrap();
        assert!((leaf_label(&mut d, &"0=+1,1=+1".parse().unwrap(), &p).unwrap() - 2.0).abs() < 1e-12);
        assert!((leaf_label(&mut d, &"0=-1".parse().unwrap(), &p).unwrap() - 0.5).abs() < 1e-12);
        let mut u = DistOracle::from_tree(DistTree::uniform(3), AccessMode::Sample, 1);
        let label = leaf_label(&mut u, &"2=+1".parse().unwrap(), &p).unwrap();
        assert!((label - 1.0).abs() < 0.05);
    }

    #[test]
    fn objectives_on_e2() {
        let (_, mut i) = exact_oracles(e2_tree());
        let e = Restriction::empty();
        assert!((tree_objective(&TreeShape::Leaf, &e, &mut i).unwrap() - 0.75).abs() < 1e-12);
        let exact = TreeShape::of(e2_tree().root());
        assert!(tree_objective(&exact, &e, &mut i).unwrap().abs() < 1e-12);
        let (_, mut u) = exact_oracles(DistTree::uniform(4));
        assert_eq!(tree_objective(&TreeShape::Leaf, &e, &mut u).unwrap(), 0.0);
    }

    #[test]
    fn recovers_e2_exactly() {
        let mut d = DistOracle::from_tree(e2_tree(), AccessMode::ExactPmf, 0);
        let mut plan = LearnPlan::new(2, 2, 0.1, 0.1, InfluenceKind::Exact).unwrap();
        plan.tau = 0.05;
        let out = learn_with_plan(&mut d, &plan).unwrap();
        let tv = tv_distance(&tree_to_dense(&out.tree).unwrap(), &tree_to_dense(&e2_tree()).unwrap()).unwrap();
        assert!(tv < 1e-9);
        assert!(out.objective.abs() < 1e-12);
        assert_eq!(out.tree.root().leaf_count(), 3);
    }

    #[test]
    fn uniform_gives_single_leaf() {
        for kind in [InfluenceKind::Exact, InfluenceKind::MonotoneBias] {
            let mut d = DistOracle::from_tree(DistTree::uniform(6), AccessMode::ExactPmf, 3);
            let mut plan = LearnPlan::new(6, 2, 0.2, 0.1, kind).unwrap();
            plan.tau = 0.2;
            plan.accuracy = 0.05;
            plan.estimate_confidence = 0.01;
            plan.leaf_samples = 1000;
            let out = learn_with_plan(&mut d, &plan).unwrap();
            assert_eq!(out.tree.leaf_count(), 1);
            assert!((out.tree.leaves()[0].density - 1.0 / 64.0).abs() < 1e-15);
        }
    }

    #[test]
    fn d_zero_returns_leaf() {
        let (mut d, mut i) = exact_oracles(e2_tree());
        let p = BuildParams::new(0, 0.05, 0.1, 0.1, ThresholdMode::Exact).unwrap();
        let out = build_dt(&mut d, &mut i, &Restriction::empty(), &p).unwrap();
        assert!(matches!(out.root, Node::Leaf { .. }));
        assert!((out.objective - 0.75).abs() < 1e-12);
        assert_eq!(out.stats.recursive_calls, 1);
    }

    #[test]
    fn depth_one_picks_first_coordinate() {
        let (mut d, mut i) = exact_oracles(e2_tree());
        let p = BuildParams::new(1, 0.05, 0.1, 0.1, ThresholdMode::Exact).unwrap();
        let out = build_dt(&mut d, &mut i, &Restriction::empty(), &p).unwrap();
        assert!((out.objective - 0.25).abs() < 1e-12);
        assert!(matches!(out.root, Node::Split { var: 0, .. }));
    }

    #[test]
    fn estimated_mode_checks_accuracy() {
        let mut d = DistOracle::from_tree(e2_tree(), AccessMode::Sample, 0);
        let mut plan = LearnPlan::new(2, 2, 0.1, 0.1, InfluenceKind::MonotoneBias).unwrap();
        plan.accuracy = plan.tau;
        assert!(matches!(learn_with_plan(&mut d, &plan), Err(Error::InvalidParameter(_))));
    }
}
