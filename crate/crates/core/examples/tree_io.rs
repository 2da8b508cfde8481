//! Round-trip trees, pmfs and targets through their JSON formats.

use dtdist::dense::tree_to_dense;
use dtdist::json;
use dtdist::testbed::{gen_dt_dist, gen_target, TargetClass, TruthTable};
use dtdist::tree::DistTree;

fn main() -> dtdist::Result<()> {
    let dir = std::env::temp_dir().join("dtdist-tree-io");
    std::fs::create_dir_all(&dir)?;
    let inst = gen_dt_dist(4, 2, 9)?;
    json::write_file(&dir.join("tree.json"), &inst.tree)?;
    json::write_file(&dir.join("dense.json"), &inst.dense)?;
    let target = gen_target(4, TargetClass::Junta(2), 9)?;
    json::write_file(&dir.join("target.json"), &target)?;

    let tree: DistTree = json::read_tree(&dir.join("tree.json"))?;
    let dense = json::read_dense(&dir.join("dense.json"))?;
    let back: TruthTable = json::read_file(&dir.join("target.json"))?;
    assert_eq!(tree, inst.tree);
    assert_eq!(tree_to_dense(&tree)?, dense);
    assert_eq!(back, target);
    println!("{}", json::to_string_pretty(&tree)?);
    println!("files in {}", dir.display());
    Ok(())
}
