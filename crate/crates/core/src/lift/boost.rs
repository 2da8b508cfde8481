use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lift::hypothesis::Hypothesis;
use crate::lift::learners::UniformLearner;
use crate::lift::LabeledSample;

/// Runs the base learner on disjoint chunks and keeps the hypothesis with
/// the fewest errors on a fresh holdout chunk.
#[derive(Debug)]
pub struct BoostedLearner {
    base: Arc<dyn UniformLearner>,
    runs: usize,
    holdout: usize,
    delta_target: f64,
}

impl BoostedLearner {
    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn holdout(&self) -> usize {
        self.holdout
    }

    pub fn base(&self) -> &Arc<dyn UniformLearner> {
        &self.base
    }
}

/// `⌈log₂(2/δ)⌉`.
pub fn boost_runs(delta_target: f64) -> usize {
    (2.0 / delta_target).log2().ceil().max(1.0) as usize
}

/// `⌈2 ln(4·runs/δ) / (0.05 ε)²⌉`.
pub fn boost_holdout(runs: usize, delta_target: f64, eps: f64) -> usize {
    let gap = 0.05 * eps;
    (2.0 * (4.0 * runs as f64 / delta_target).ln() / (gap * gap)).ceil() as usize
}

/// A learner with failure probability `delta_target` and accuracy `1.1ε`.
/// A base learner whose declared δ already meets the target is returned
/// unchanged.
pub fn boost(learner: Arc<dyn UniformLearner>, delta_target: f64) -> Result<Arc<dyn UniformLearner>> {
    if !(delta_target > 0.0 && delta_target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "boost target must lie in (0, 1), got {delta_target}"
        )));
    }
    if learner.delta() > 0.5 {
        return Err(Error::InvalidParameter(format!(
            "boosting needs a base failure probability <= 1/2, got {}",
            learner.delta()
        )));
    }
    if learner.delta() <= delta_target {
        return Ok(learner);
    }
    let runs = boost_runs(delta_target);
    let holdout = boost_holdout(runs, delta_target, learner.eps());
    Ok(Arc::new(BoostedLearner {
        base: learner,
        runs,
        holdout,
        delta_target,
    }))
}

impl UniformLearner for BoostedLearner {
    fn name(&self) -> String {
        format!("boost({})", self.base.name())
    }

    fn m(&self) -> usize {
        self.runs * self.base.m() + self.holdout
    }

    fn eps(&self) -> f64 {
        1.1 * self.base.eps()
    }

    fn delta(&self) -> f64 {
        self.delta_target
    }

    fn learn(&self, s: &LabeledSample) -> Result<Hypothesis> {
        let need = self.m();
        if s.points.len() < need {
            return Err(Error::InsufficientSample {
                needed: need,
                have: s.points.len(),
            });
        }
        let m = self.base.m();
        let train = self.runs * m;
        let holdout = &s.points[train..train + self.holdout];
        let mut best: Option<(usize, Hypothesis)> = None;
        let mut last_err = None;
        for r in 0..self.runs {
            let chunk = LabeledSample {
                n: s.n,
                points: s.points[r * m..(r + 1) * m].to_vec(),
                source_tag: format!("{}#chunk{r}", s.source_tag),
            };
            let h = match self.base.learn(&chunk) {
                Ok(h) => h,
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            };
            let errors = holdout.iter().filter(|(x, y)| h.predict(x) != *y).count();
            if best.as_ref().is_none_or(|(b, _)| errors < *b) {
                best = Some((errors, h));
            }
        }
        match (best, last_err) {
            (Some((_, h)), _) => Ok(h),
            (None, Some(e)) => Err(Error::Learner(format!("every boosting run failed: {e}"))),
            (None, None) => Err(Error::Learner("no boosting runs".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::Point;
    use crate::lift::learners::MajorityLearner;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn schedule() {
        assert_eq!(boost_runs(0.01), 8);
        assert_eq!(boost_runs(0.5), 2);
        let h = boost_holdout(8, 0.01, 0.1);
        assert_eq!(h, (2.0 * 3200f64.ln() / 2.5e-5f64).ceil() as usize);
    }

    #[test]
    fn passthrough_and_guards() {
        let base: Arc<dyn UniformLearner> = Arc::new(MajorityLearner::new(0.1, 0.01).unwrap());
        let same = boost(base.clone(), 0.05).unwrap();
        assert_eq!(same.m(), base.m());
        assert_eq!(same.name(), "majority");
        let weak: Arc<dyn UniformLearner> = Arc::new(MajorityLearner::new(0.1, 0.6).unwrap());
        assert!(boost(weak, 0.01).is_err());
    }

    #[test]
    fn deterministic_base_keeps_its_answer() {
        let base: Arc<dyn UniformLearner> = Arc::new(MajorityLearner::new(0.5, 0.4).unwrap());
        let b = boost(base, 0.1).unwrap();
        assert_eq!(b.eps(), 0.55);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<_> = (0..b.m()).map(|_| (Point::uniform(4, &mut rng), true)).collect();
        let s = LabeledSample::new(4, pts, "t").unwrap();
        assert!(matches!(b.learn(&s).unwrap(), Hypothesis::Constant(true)));
        let short = LabeledSample::new(4, s.points[..10].to_vec(), "t").unwrap();
        assert!(matches!(b.learn(&short), Err(Error::InsufficientSample { .. })));
    }
}
