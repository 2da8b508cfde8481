//! Lift an exhaustive depth-2 tree learner to a monotone tree distribution.

use dtdist::builddt::leaf_sample_count;
use dtdist::influence::InfluenceKind;
use dtdist::lift::{end_to_end, weighted_error, LearnerSpec, LiftPlan};
use dtdist::oracle::{AccessMode, DistOracle};
use dtdist::testbed::{gen_monotone_dist, gen_target, TargetClass};

fn main() -> dtdist::Result<()> {
    let (n, d, eps, delta) = (10, 2, 0.1, 0.1);
    let inst = gen_monotone_dist(n, d, 11)?;
    let target = gen_target(n, TargetClass::Depth(2), 12)?;
    let (mut plan, learner) = LiftPlan::for_learner(n, d, eps, delta, InfluenceKind::MonotoneBias, LearnerSpec::Tree(2))?;
    println!("learner m = {}, default TV target = {:.2e}", learner.m(), plan.dist.eps);
    // desk-scale distribution stage
    plan.dist = plan.dist.clone().with_tau(0.02);
    plan.dist.eps = eps;
    plan.dist.accuracy = 0.005;
    plan.dist.leaf_samples = leaf_sample_count(d, eps, plan.dist.delta);

    let mut oracle = DistOracle::from_tree(inst.tree.clone(), AccessMode::Sample, 13);
    let mut labels = DistOracle::from_tree(inst.tree.clone(), AccessMode::Sample, 14);
    let out = end_to_end(
        &mut oracle,
        || {
            let x = labels.sample()?;
            Ok((x, target.eval(&x)))
        },
        learner,
        &plan,
    )?;
    println!("labeled sample size {}", out.sample_size);
    println!("error under D = {:.4}", weighted_error(&out.hypothesis, &target, &inst.dense)?);
    println!("{}", dtdist::json::to_string(&out.hypothesis.to_json(n))?);
    Ok(())
}
