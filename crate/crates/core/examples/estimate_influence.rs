//! Exact and estimated influences on a two-coordinate example.

use dtdist::cube::Restriction;
use dtdist::dense::DensePmf;
use dtdist::influence::{exact_influence, infest, infest_high_accuracy, monotone_bias_estimate, scale_to_restriction};
use dtdist::oracle::{AccessMode, DistOracle};

fn main() -> dtdist::Result<()> {
    // bit 0 is x1, bit 1 is x2; a set bit means +1
    let d = DensePmf::new(2, vec![0.125, 0.25, 0.125, 0.5])?;
    let empty = Restriction::empty();
    let plus: Restriction = "0=+1".parse()?;
    println!("Inf_1 = {}", exact_influence(&d, 0, &empty)?);
    println!("Inf_2 = {}", exact_influence(&d, 1, &empty)?);
    println!("Inf_2 on x1=+1 = {}", exact_influence(&d, 1, &plus)?);

    let mut plain = DistOracle::from_dense(d.clone(), AccessMode::Sample, 1);
    let cond = monotone_bias_estimate(&mut plain, 1, &plus, 0.02, 0.05)?;
    println!("bias estimate on x1=+1: {:.4}, scaled: {:.4}", cond.value, scale_to_restriction(cond.value, &plus, 0.75));

    let mut sub = DistOracle::from_dense(d, AccessMode::SubcubeSample, 2);
    let runs: Vec<f64> = (0..2000).map(|_| infest(&mut sub, 0, &empty, 0.05)).collect::<Result<_, _>>()?;
    println!("mean of 2000 InfEst runs for x1: {:.4}", runs.iter().sum::<f64>() / runs.len() as f64);
    let hi = infest_high_accuracy(&mut sub, 1, &empty, 0.05, 0.05)?;
    println!("{}", dtdist::json::to_string(&hi)?);
    Ok(())
}
