//! Boost a learner that only promises success with probability 1/2.

use std::sync::Arc;

use dtdist::cube::Point;
use dtdist::lift::{boost, ExhaustiveTreeLearner, LabeledSample, UniformLearner};
use dtdist::testbed::{gen_target, TargetClass};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dtdist::Result<()> {
    let n = 8;
    let target = gen_target(n, TargetClass::Depth(2), 1)?;
    let base: Arc<dyn UniformLearner> = Arc::new(ExhaustiveTreeLearner::new(n, 2, 0.1, 0.5)?);
    let boosted = boost(base.clone(), 0.01)?;
    println!("base m = {}, boosted m = {}, declared eps = {}", base.m(), boosted.m(), boosted.eps());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let points = (0..boosted.m())
        .map(|_| {
            let x = Point::uniform(n, &mut rng);
            let y = target.eval(&x);
            (x, y)
        })
        .collect();
    let h = boosted.learn(&LabeledSample::new(n, points, "uniform")?)?;
    let wrong = (0..1u64 << n).filter(|&b| h.eval_bits(b) != target.eval_bits(b)).count();
    println!("uniform error = {}", wrong as f64 / (1u64 << n) as f64);
    Ok(())
}
