use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cube::{Restriction, Subcube};
use crate::dense::DensePmf;
use crate::error::{Error, Result};
use crate::influence::estimate::{infest_high_accuracy, monotone_bias_all};
use crate::influence::{influences_in, scale_to_restriction, InfluenceEstimate};
use crate::oracle::{AccessMode, DistOracle, QueryCounts};

/// How influences are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfluenceKind {
    /// Enumeration of the exact pmf.
    Exact,
    /// Bias of plain samples; valid for monotone distributions.
    MonotoneBias,
    /// InfEst over subcube conditional samples.
    SubcubeInfest,
}

impl InfluenceKind {
    pub fn required_mode(self) -> AccessMode {
        match self {
            InfluenceKind::Exact => AccessMode::ExactPmf,
            InfluenceKind::MonotoneBias => AccessMode::Sample,
            InfluenceKind::SubcubeInfest => AccessMode::SubcubeSample,
        }
    }
}

impl std::str::FromStr for InfluenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<InfluenceKind> {
        match s {
            "exact" => Ok(InfluenceKind::Exact),
            "monotone" => Ok(InfluenceKind::MonotoneBias),
            "subcube" => Ok(InfluenceKind::SubcubeInfest),
            other => Err(Error::InvalidParameter(format!(
                "unknown oracle kind {other:?}; expected exact, monotone or subcube"
            ))),
        }
    }
}

/// A fixed batch of plain samples used to estimate subcube weights.
#[derive(Clone, Debug)]
pub struct WeightPool {
    bits: Vec<u64>,
}

impl WeightPool {
    pub fn draw(oracle: &mut DistOracle, size: u64) -> Result<WeightPool> {
        let mut bits = Vec::with_capacity(size as usize);
        oracle.sample_many(size, |x| bits.push(x.bits()))?;
        Ok(WeightPool { bits })
    }

    pub fn from_bits(bits: Vec<u64>) -> WeightPool {
        WeightPool { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn hits(&self, s: &Subcube) -> u64 {
        self.bits.iter().filter(|&&b| s.contains_bits(b)).count() as u64
    }

    /// Empirical `Pr[s]`.
    pub fn weight(&self, s: &Subcube) -> f64 {
        if s.mask == 0 {
            return 1.0;
        }
        if self.bits.is_empty() {
            return 0.0;
        }
        self.hits(s) as f64 / self.bits.len() as f64
    }

    /// Hoeffding half-width at failure probability `delta`.
    pub fn error(&self, delta: f64) -> f64 {
        if self.bits.is_empty() {
            return 1.0;
        }
        ((2.0 / delta).ln() / (2.0 * self.bits.len() as f64)).sqrt()
    }
}

/// Largest conditional accuracy worth requesting; influences of a
/// conditional distribution lie in [0, 1].
const MAX_CONDITIONAL_ACCURACY: f64 = 0.5;

/// Estimates `Inf_i((f_D)_s)` to a fixed accuracy and confidence, caching
/// the estimates of every free coordinate per restriction.
#[derive(Debug)]
pub struct InfluenceOracle {
    kind: InfluenceKind,
    source: DistOracle,
    accuracy: f64,
    confidence: f64,
    pool: Option<Arc<WeightPool>>,
    auto_pool: bool,
    table: Option<Arc<DensePmf>>,
    cache: HashMap<Subcube, Arc<[InfluenceEstimate]>>,
    queries: u64,
}

impl InfluenceOracle {
    pub fn new(
        kind: InfluenceKind,
        source: DistOracle,
        accuracy: f64,
        confidence: f64,
    ) -> Result<InfluenceOracle> {
        source.require(kind.required_mode())?;
        if kind != InfluenceKind::Exact {
            if !(accuracy > 0.0 && accuracy.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "influence accuracy must be positive, got {accuracy}"
                )));
            }
            if !(confidence > 0.0 && confidence < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "influence confidence must lie in (0,1), got {confidence}"
                )));
            }
        }
        Ok(InfluenceOracle {
            kind,
            source,
            accuracy,
            confidence,
            pool: None,
            auto_pool: true,
            table: None,
            cache: HashMap::new(),
            queries: 0,
        })
    }

    /// Exact oracle; accuracy and confidence are 0.
    pub fn exact(source: DistOracle) -> Result<InfluenceOracle> {
        InfluenceOracle::new(InfluenceKind::Exact, source, 0.0, 0.0)
    }

    /// Uses `pool` for all weight estimates instead of drawing one.
    pub fn with_weight_pool(mut self, pool: Arc<WeightPool>) -> InfluenceOracle {
        self.pool = Some(pool);
        self.auto_pool = false;
        self
    }

    pub fn kind(&self) -> InfluenceKind {
        self.kind
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    /// Number of per-coordinate influence values handed out.
    pub fn queries(&self) -> u64 {
        self.queries
    }

    /// Queries made to the underlying distribution.
    pub fn source_counts(&self) -> QueryCounts {
        self.source.counts()
    }

    /// Estimates for every free coordinate of `s`, in increasing coordinate
    /// order.
    pub fn estimate_all(&mut self, s: &Restriction) -> Result<Arc<[InfluenceEstimate]>> {
        s.check_dim(self.dim())?;
        let key = s.subcube();
        if let Some(hit) = self.cache.get(&key) {
            self.queries += hit.len() as u64;
            return Ok(hit.clone());
        }
        let free = s.free_coords(self.dim());
        let (acc, conf) = (self.accuracy, self.confidence);
        let est: Arc<[InfluenceEstimate]> = self.estimate_coords(s, &free, acc, conf)?.into();
        self.queries += est.len() as u64;
        self.cache.insert(key, est.clone());
        Ok(est)
    }

    /// Estimate for coordinate `i` at the oracle's accuracy.
    pub fn estimate(&mut self, i: usize, s: &Restriction) -> Result<InfluenceEstimate> {
        if i >= self.dim() {
            return Err(Error::CoordinateOutOfRange { coord: i, n: self.dim() });
        }
        if s.is_fixed(i) {
            return Err(Error::CoordinateFixed(i));
        }
        let all = self.estimate_all(s)?;
        Ok(all.iter().find(|e| e.coordinate == i).expect("free").clone())
    }

    fn exact_table(&mut self) -> Result<Arc<DensePmf>> {
        if let Some(t) = &self.table {
            return Ok(t.clone());
        }
        let t = self.source.exact_table()?;
        self.table = Some(t.clone());
        Ok(t)
    }

    /// Weight estimate of `s` and its error half-width.
    fn weight(&mut self, s: &Restriction, accuracy: f64, confidence: f64) -> Result<(f64, f64)> {
        if s.is_empty() {
            return Ok((1.0, 0.0));
        }
        if self.auto_pool {
            // additive error accuracy / 2^{|s|+2}
            let err = accuracy / (s.depth() as f64 + 2.0).exp2();
            let need = ((2.0 / confidence).ln() / (2.0 * err * err)).ceil() as u64;
            if self.pool.as_ref().is_none_or(|p| (p.len() as u64) < need) {
                self.pool = Some(Arc::new(WeightPool::draw(&mut self.source, need)?));
            }
        }
        let pool = self.pool.as_ref().expect("weight pool");
        Ok((pool.weight(&s.subcube()), pool.error(confidence)))
    }

    fn estimate_coords(
        &mut self,
        s: &Restriction,
        coords: &[usize],
        accuracy: f64,
        confidence: f64,
    ) -> Result<Vec<InfluenceEstimate>> {
        if self.kind == InfluenceKind::Exact {
            let t = self.exact_table()?;
            let cube = s.subcube();
            let all = influences_in(t.table(), t.dim(), &cube);
            return Ok(coords
                .iter()
                .map(|&i| InfluenceEstimate::exact(i, all[i], s.clone()))
                .collect());
        }
        let (w, werr) = self.weight(s, accuracy, confidence)?;
        if w == 0.0 {
            // no mass seen in s: the scaled influence is below the accuracy
            return Ok(coords
                .iter()
                .map(|&i| InfluenceEstimate {
                    coordinate: i,
                    value: 0.0,
                    accuracy,
                    confidence,
                    samples_used: 0,
                    restriction: s.clone(),
                })
                .collect());
        }
        let scale = (s.depth() as f64).exp2();
        let cond_acc = (accuracy / (scale * (w + werr).min(1.0))).min(MAX_CONDITIONAL_ACCURACY);
        let cond: Vec<InfluenceEstimate> = match self.kind {
            InfluenceKind::MonotoneBias => {
                let all = monotone_bias_all(&mut self.source, s, cond_acc, confidence, Some(w))?;
                coords
                    .iter()
                    .map(|&i| all.iter().find(|e| e.coordinate == i).expect("free").clone())
                    .collect()
            }
            InfluenceKind::SubcubeInfest => coords
                .iter()
                .map(|&i| infest_high_accuracy(&mut self.source, i, s, cond_acc, confidence))
                .collect::<Result<_>>()?,
            InfluenceKind::Exact => unreachable!(),
        };
        Ok(cond
            .into_iter()
            .map(|e| InfluenceEstimate {
                value: scale_to_restriction(e.value, s, w),
                accuracy,
                confidence,
                ..e
            })
            .collect())
    }
}

/// `Inf_i((f_D)_s)` within `accuracy` with failure probability at most
/// `confidence`, by whichever method the oracle implements.
pub fn oracle_influence(
    o: &mut InfluenceOracle,
    i: usize,
    s: &Restriction,
    accuracy: f64,
    confidence: f64,
) -> Result<InfluenceEstimate> {
    if i >= o.dim() {
        return Err(Error::CoordinateOutOfRange { coord: i, n: o.dim() });
    }
    if s.is_fixed(i) {
        return Err(Error::CoordinateFixed(i));
    }
    s.check_dim(o.dim())?;
    if o.kind != InfluenceKind::Exact
        && !(accuracy > 0.0 && confidence > 0.0 && confidence < 1.0)
    {
        return Err(Error::InvalidParameter(format!(
            "need accuracy > 0 and confidence in (0,1), got {accuracy}, {confidence}"
        )));
    }
    o.queries += 1;
    let mut out = o.estimate_coords(s, &[i], accuracy, confidence)?;
    Ok(out.pop().expect("one estimate"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{DistTree, Node};

    fn e2_tree() -> DistTree {
        DistTree::new(
            2,
            Node::split(0, Node::leaf(0.125), Node::split(1, Node::leaf(0.25), Node::leaf(0.5))),
        )
        .unwrap()
    }

    #[test]
    fn kind_requires_mode() {
        let src = DistOracle::from_tree(e2_tree(), AccessMode::Sample, 0);
        assert!(InfluenceOracle::new(InfluenceKind::SubcubeInfest, src, 0.1, 0.1).is_err());
        let src = DistOracle::from_tree(e2_tree(), AccessMode::SubcubeSample, 0);
        assert!(InfluenceOracle::exact(src).is_err());
        let src = DistOracle::from_tree(e2_tree(), AccessMode::Sample, 0);
        assert!(InfluenceOracle::new(InfluenceKind::MonotoneBias, src, 0.1, 0.1).is_ok());
    }

    #[test]
    fn exact_oracle_on_e2() {
        let src = DistOracle::from_tree(e2_tree(), AccessMode::ExactPmf, 0);
        let mut o = InfluenceOracle::exact(src).unwrap();
        let all = o.estimate_all(&Restriction::empty()).unwrap();
        assert_eq!(all.len(), 2);
        assert!((all[0].value - 0.5).abs() < 1e-12);
        assert!((all[1].value - 0.25).abs() < 1e-12);
        assert_eq!(all[0].samples_used, 0);
        let e = o.estimate(1, &"0=+1".parse().unwrap()).unwrap();
        assert!((e.value - 0.5).abs() < 1e-12);
        assert_eq!(o.queries(), 3);
    }

    #[test]
    fn restricted_estimates_are_scaled() {
        let s: Restriction = "0=+1".parse().unwrap();
        let src = DistOracle::from_tree(e2_tree(), AccessMode::Sample, 11);
        let mut o = InfluenceOracle::new(InfluenceKind::MonotoneBias, src, 0.05, 0.01).unwrap();
        let e = oracle_influence(&mut o, 1, &s, 0.05, 0.01).unwrap();
        assert!((e.value - 0.5).abs() <= 0.05, "{}", e.value);
        let src = DistOracle::from_tree(e2_tree(), AccessMode::SubcubeSample, 12);
        let mut o = InfluenceOracle::new(InfluenceKind::SubcubeInfest, src, 0.05, 0.01).unwrap();
        let e = oracle_influence(&mut o, 1, &s, 0.05, 0.01).unwrap();
        assert!((e.value - 0.5).abs() <= 0.05, "{}", e.value);
    }

    #[test]
    fn pool_weights() {
        let pool = WeightPool::from_bits(vec![0b11, 0b01, 0b11, 0b00]);
        let s = Subcube { mask: 0b1, values: 0b1 };
        assert_eq!(pool.weight(&s), 0.75);
        assert_eq!(pool.weight(&Subcube::FULL), 1.0);
        assert!(pool.error(0.1) > 0.5);
    }
}
