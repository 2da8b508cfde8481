use crate::builddt::TreeShape;
use crate::cube::{Sign, Subcube};
use crate::dense::DensePmf;
use crate::error::{Error, Result};
use crate::testbed::stats::{brute_stats, restricted_table};
use crate::tree::{DistTree, Node};

pub const BRUTE_MAX_DIM: usize = 5;
pub const BRUTE_MAX_DEPTH: usize = 2;

/// Every depth-≤`budget` everywhere τ-influential tree below `s`, each with
/// its objective, listed leaf first and then by split variable.
fn enumerate(f: &[f64], n: usize, s: Subcube, budget: usize, tau: f64) -> Result<Vec<(TreeShape, f64)>> {
    let stats = brute_stats(&restricted_table(f, n, &s))?;
    let mut out = vec![(TreeShape::Leaf, stats.total_inf)];
    if budget == 0 {
        return Ok(out);
    }
    let free: Vec<usize> = (0..n).filter(|&i| !s.fixes(i)).collect();
    for (k, &i) in free.iter().enumerate() {
        // restricted_table orders the free coordinates increasingly
        if stats.inf[k] < tau {
            continue;
        }
        let los = enumerate(f, n, s.with(i, Sign::Neg), budget - 1, tau)?;
        let his = enumerate(f, n, s.with(i, Sign::Pos), budget - 1, tau)?;
        for (lo, a) in &los {
            for (hi, b) in &his {
                out.push((TreeShape::split(i, lo.clone(), hi.clone()), (a + b) / 2.0));
            }
        }
    }
    Ok(out)
}

fn label(d: &DensePmf, shape: &TreeShape, s: Subcube) -> Node {
    match shape {
        TreeShape::Leaf => {
            let n = d.dim();
            let free = n - s.depth();
            Node::leaf(d.weight(&s) / (free as f64).exp2())
        }
        TreeShape::Split { var, lo, hi } => Node::split(
            *var,
            label(d, lo, s.with(*var, Sign::Neg)),
            label(d, hi, s.with(*var, Sign::Pos)),
        ),
    }
}

/// The minimum-objective tree among all depth-≤`d` everywhere τ-influential
/// trees, found by listing them all. Leaves carry exact densities.
pub fn brute_optimal_tree(dist: &DensePmf, d: usize, tau: f64) -> Result<(DistTree, f64)> {
    let n = dist.dim();
    if n > BRUTE_MAX_DIM {
        return Err(Error::DimensionTooLarge { n, limit: BRUTE_MAX_DIM });
    }
    if d > BRUTE_MAX_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "exhaustive enumeration supports depth <= {BRUTE_MAX_DEPTH}, got {d}"
        )));
    }
    let f = dist.weighting_table();
    let all = enumerate(&f, n, Subcube::FULL, d.min(n), tau)?;
    let mut best = 0;
    for (k, (_, obj)) in all.iter().enumerate() {
        if *obj < all[best].1 {
            best = k;
        }
    }
    let (shape, obj) = &all[best];
    let tree = DistTree::new(n, label(dist, shape, Subcube::FULL))?;
    Ok((tree, *obj))
}
