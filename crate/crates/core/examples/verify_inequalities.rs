//! Evaluate every inequality and identity on a batch of random instances.

use dtdist::cli::{suite_builddt_optimal, suite_inequalities};

fn main() -> dtdist::Result<()> {
    let records = suite_inequalities(1, 200)?;
    let mut worst = std::collections::BTreeMap::new();
    for r in &records {
        let e = worst.entry(r.check.clone()).or_insert(f64::INFINITY);
        *e = e.min(r.margin);
    }
    for (check, margin) in worst {
        println!("{check:24} smallest margin {margin:.3e}");
    }
    println!("violations: {}", records.iter().filter(|r| !r.pass).count());
    let opt = suite_builddt_optimal(1, 30)?;
    println!("builddt vs enumeration mismatches: {}", opt.iter().filter(|r| !r.pass).count());
    Ok(())
}
