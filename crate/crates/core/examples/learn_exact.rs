//! Learn a random depth-3 tree distribution with exact pmf access.

use dtdist::builddt::learn_distribution;
use dtdist::dense::{tree_to_dense, tv_distance};
use dtdist::influence::InfluenceKind;
use dtdist::oracle::{AccessMode, DistOracle};
use dtdist::testbed::gen_dt_dist;

fn main() -> dtdist::Result<()> {
    let inst = gen_dt_dist(12, 3, 1)?;
    let mut oracle = DistOracle::from_tree(inst.tree.clone(), AccessMode::ExactPmf, 2);
    let learned = learn_distribution(&mut oracle, 12, 3, 0.1, 0.1, InfluenceKind::Exact)?;
    let tv = tv_distance(&tree_to_dense(&learned.tree)?, &inst.dense)?;
    println!("target leaves {}, learned leaves {}", inst.tree.leaf_count(), learned.tree.leaf_count());
    println!("tv = {tv:.3e}, recursive calls = {}", learned.stats.recursive_calls);
    Ok(())
}
