//! Learn a monotone distribution from plain samples only.
//!
//! τ is raised above its default ε/(8d²) so the run takes seconds.

use dtdist::builddt::{learn_with_plan, LearnPlan};
use dtdist::dense::{tree_to_dense, tv_distance};
use dtdist::influence::InfluenceKind;
use dtdist::oracle::{AccessMode, DistOracle};
use dtdist::testbed::gen_monotone_dist;

fn main() -> dtdist::Result<()> {
    let (n, d, eps) = (10, 2, 0.15);
    let inst = gen_monotone_dist(n, d, 3)?;
    let mut oracle = DistOracle::from_tree(inst.tree.clone(), AccessMode::Sample, 4);
    let plan = LearnPlan::new(n, d, eps, 0.1, InfluenceKind::MonotoneBias)?.with_tau(0.05);
    let learned = learn_with_plan(&mut oracle, &plan)?;
    let tv = tv_distance(&tree_to_dense(&learned.tree)?, &inst.dense)?;
    println!("tv = {tv:.4} (target {eps}), samples used = {}", learned.counts.sample);
    println!("{}", dtdist::json::to_string(&learned.stats_json(Some(&inst.dense))?)?);
    Ok(())
}
