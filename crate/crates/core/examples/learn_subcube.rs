//! Learn a non-monotone distribution with subcube conditional samples.

use dtdist::builddt::{learn_with_plan, LearnPlan};
use dtdist::dense::{tree_to_dense, tv_distance};
use dtdist::influence::InfluenceKind;
use dtdist::oracle::{AccessMode, DistOracle};
use dtdist::testbed::gen_dt_dist;

fn main() -> dtdist::Result<()> {
    let (n, d, eps) = (8, 2, 0.15);
    let inst = gen_dt_dist(n, d, 5)?;
    let mut oracle = DistOracle::from_tree(inst.tree.clone(), AccessMode::SubcubeSample, 6);
    let mut plan = LearnPlan::new(n, d, eps, 0.1, InfluenceKind::SubcubeInfest)?.with_tau(0.2);
    plan.accuracy = plan.tau / 4.0;
    let learned = learn_with_plan(&mut oracle, &plan)?;
    let tv = tv_distance(&tree_to_dense(&learned.tree)?, &inst.dense)?;
    println!("tv = {tv:.4}, plain samples = {}, subcube queries = {}", learned.counts.sample, learned.counts.subcube);
    Ok(())
}
