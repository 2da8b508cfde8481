//! Access to an unknown distribution.
//!
//! A [`DistOracle`] grants one of three access modes. Each mode grants the
//! weaker ones: exact pmf access also allows subcube conditional samples,
//! which in turn allow plain samples. Every query is tallied.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign};
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use crate::cube::{dim_mask, Point, Restriction, Subcube};
use crate::dense::{DensePmf, Pmf};
use crate::error::{Error, Result};
use crate::seed;
use crate::tree::{ConditionalSampler, DistTree};

/// Access granted by an oracle, ordered from weakest to strongest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessMode {
    Sample,
    SubcubeSample,
    ExactPmf,
}

/// Query tally by mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounts {
    pub sample: u64,
    pub subcube: u64,
    pub exact: u64,
}

impl QueryCounts {
    pub fn total(&self) -> u64 {
        self.sample + self.subcube + self.exact
    }
}

impl Add for QueryCounts {
    type Output = QueryCounts;

    fn add(self, rhs: QueryCounts) -> QueryCounts {
        QueryCounts {
            sample: self.sample + rhs.sample,
            subcube: self.subcube + rhs.subcube,
            exact: self.exact + rhs.exact,
        }
    }
}

impl AddAssign for QueryCounts {
    fn add_assign(&mut self, rhs: QueryCounts) {
        *self = *self + rhs;
    }
}

/// An external source of iid points. It draws from the oracle's random
/// stream so that oracles over it stay reproducible and splittable.
pub trait PointSampler: Send + Sync {
    fn dim(&self) -> usize;

    fn draw(&self, rng: &mut dyn RngCore) -> Point;
}

impl<F> PointSampler for (usize, F)
where
    F: Fn(&mut dyn RngCore) -> Point + Send + Sync,
{
    fn dim(&self) -> usize {
        self.0
    }

    fn draw(&self, rng: &mut dyn RngCore) -> Point {
        (self.1)(rng)
    }
}

/// What an oracle draws from.
#[derive(Clone)]
pub enum Backing {
    Tree(Arc<DistTree>),
    Dense(Arc<DensePmf>),
    Stream(Arc<dyn PointSampler>),
}

impl fmt::Debug for Backing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backing::Tree(t) => write!(f, "Tree(n={}, leaves={})", t.dim(), t.leaf_count()),
            Backing::Dense(d) => write!(f, "Dense(n={})", d.dim()),
            Backing::Stream(s) => write!(f, "Stream(n={})", s.dim()),
        }
    }
}

impl Backing {
    pub fn dim(&self) -> usize {
        match self {
            Backing::Tree(t) => t.dim(),
            Backing::Dense(d) => d.dim(),
            Backing::Stream(s) => s.dim(),
        }
    }
}

/// Rejection attempts allowed per accepted point: `ceil(64 / w)` for a
/// running weight estimate `w`.
const REJECTION_FACTOR: f64 = 64.0;

/// Hard ceiling on attempts per accepted point, whatever the estimate says.
const REJECTION_CEILING: u64 = 1 << 30;

/// Sampling access to a distribution over {-1,+1}^n.
#[derive(Debug)]
pub struct DistOracle {
    mode: AccessMode,
    backing: Backing,
    seed: u64,
    rng: ChaCha8Rng,
    counts: QueryCounts,
    /// (attempts, accepted) per subcube, for rejection caps.
    rejection: HashMap<Subcube, (u64, u64)>,
    dense: Option<Arc<DensePmf>>,
    /// Most recently used exact conditional sampler.
    last_conditional: Option<(Subcube, Arc<ConditionalSampler>)>,
}

impl DistOracle {
    pub fn new(backing: Backing, mode: AccessMode, seed: u64) -> Result<DistOracle> {
        if matches!(backing, Backing::Stream(_)) && mode == AccessMode::ExactPmf {
            return Err(Error::InvalidParameter(
                "a sample stream cannot grant exact pmf access".into(),
            ));
        }
        Ok(DistOracle {
            mode,
            backing,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            counts: QueryCounts::default(),
            rejection: HashMap::new(),
            dense: None,
            last_conditional: None,
        })
    }

    pub fn from_tree(tree: DistTree, mode: AccessMode, seed: u64) -> DistOracle {
        DistOracle::new(Backing::Tree(Arc::new(tree)), mode, seed).expect("tree backing")
    }

    pub fn from_dense(dense: DensePmf, mode: AccessMode, seed: u64) -> DistOracle {
        DistOracle::new(Backing::Dense(Arc::new(dense)), mode, seed).expect("dense backing")
    }

    pub fn mode(&self) -> AccessMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.backing.dim()
    }

    pub fn backing(&self) -> &Backing {
        &self.backing
    }

    pub fn counts(&self) -> QueryCounts {
        self.counts
    }

    /// An independent oracle over the same backing, for worker `index`.
    /// Its counts start at zero; sum them into the parent's at join time.
    pub fn split(&self, index: u64) -> DistOracle {
        DistOracle {
            mode: self.mode,
            backing: self.backing.clone(),
            seed: seed::child(self.seed, index),
            rng: ChaCha8Rng::seed_from_u64(seed::child(self.seed, index)),
            counts: QueryCounts::default(),
            rejection: HashMap::new(),
            dense: self.dense.clone(),
            last_conditional: self.last_conditional.clone(),
        }
    }

    /// Same oracle with a weaker (or equal) mode.
    pub fn restricted_to(&self, mode: AccessMode, index: u64) -> Result<DistOracle> {
        self.require(mode)?;
        let mut child = self.split(index);
        child.mode = mode;
        Ok(child)
    }

    /// Adds counts gathered by split-off workers.
    pub fn absorb(&mut self, counts: QueryCounts) {
        self.counts += counts;
    }

    pub fn require(&self, requested: AccessMode) -> Result<()> {
        if requested > self.mode {
            return Err(Error::AccessDenied {
                requested,
                granted: self.mode,
            });
        }
        Ok(())
    }

    /// Random stream of this oracle, for algorithms that need their own
    /// randomness alongside the queries.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn draw_bits(&mut self) -> u64 {
        match &self.backing {
            Backing::Tree(t) => t.sample_bits(&mut self.rng),
            Backing::Dense(d) => d.sample_bits(&mut self.rng),
            Backing::Stream(s) => s.draw(&mut self.rng).bits() & dim_mask(s.dim()),
        }
    }

    /// One iid draw.
    pub fn sample(&mut self) -> Result<Point> {
        self.require(AccessMode::Sample)?;
        self.counts.sample += 1;
        let n = self.dim();
        Ok(Point::from_bits_unchecked(n, self.draw_bits()))
    }

    /// `k` iid draws, passed to `f` in order.
    pub fn sample_many(&mut self, k: u64, mut f: impl FnMut(Point)) -> Result<()> {
        self.require(AccessMode::Sample)?;
        let n = self.dim();
        for _ in 0..k {
            self.counts.sample += 1;
            f(Point::from_bits_unchecked(n, self.draw_bits()));
        }
        Ok(())
    }

    fn check_restriction(&self, s: &Restriction) -> Result<()> {
        s.check_dim(self.dim())
    }

    fn exact_conditional(&mut self, s: &Subcube) -> Option<Result<Arc<ConditionalSampler>>> {
        if let Some((cube, sampler)) = &self.last_conditional {
            if cube == s {
                return Some(Ok(sampler.clone()));
            }
        }
        let built = match &self.backing {
            Backing::Tree(t) => t.conditional(s),
            Backing::Dense(d) => d.conditional(s),
            Backing::Stream(_) => return None,
        };
        Some(built.map(|sampler| {
            let sampler = Arc::new(sampler);
            self.last_conditional = Some((*s, sampler.clone()));
            sampler
        }))
    }

    /// One draw from the distribution conditioned on the subcube `s`.
    pub fn subcube_sample(&mut self, s: &Restriction) -> Result<Point> {
        let mut out = None;
        self.subcube_sample_many(s, 1, |x| out = Some(x))?;
        Ok(out.expect("one draw"))
    }

    /// `k` draws conditioned on `s`. Tree and dense backings condition
    /// exactly; stream backings condition by rejection.
    pub fn subcube_sample_many(
        &mut self,
        s: &Restriction,
        k: u64,
        f: impl FnMut(Point),
    ) -> Result<()> {
        self.require(AccessMode::SubcubeSample)?;
        self.check_restriction(s)?;
        self.subcube_draws(&s.subcube(), k, f)
    }

    pub(crate) fn subcube_draws(
        &mut self,
        cube: &Subcube,
        k: u64,
        mut f: impl FnMut(Point),
    ) -> Result<()> {
        self.require(AccessMode::SubcubeSample)?;
        match self.exact_conditional(cube) {
            Some(sampler) => {
                let sampler = sampler?;
                for _ in 0..k {
                    self.counts.subcube += 1;
                    f(sampler.draw(&mut self.rng));
                }
                Ok(())
            }
            None => {
                let n = self.dim();
                for _ in 0..k {
                    let bits = self.reject_until(cube, None)?;
                    self.counts.subcube += 1;
                    f(Point::from_bits_unchecked(n, bits));
                }
                Ok(())
            }
        }
    }

    /// How many of `k` draws conditioned on `cube` equal the point `target`.
    /// Counts `k` subcube queries. With a known pmf the count is drawn from
    /// its exact binomial law instead of draw by draw.
    pub fn count_matches(&mut self, cube: &Subcube, k: u64, target: u64) -> Result<u64> {
        self.require(AccessMode::SubcubeSample)?;
        if !cube.contains_bits(target) {
            return Err(Error::InvalidPoint("target lies outside the subcube".into()));
        }
        let n = self.dim();
        let (p_target, w) = match &self.backing {
            Backing::Tree(t) => {
                let x = Point::from_bits_unchecked(n, target);
                (t.density_at(&x), t.weight(cube))
            }
            Backing::Dense(d) => (d.table()[target as usize], d.weight(cube)),
            Backing::Stream(_) => {
                let mut hits = 0;
                self.subcube_draws(cube, k, |y| hits += u64::from(y.bits() == target))?;
                return Ok(hits);
            }
        };
        if !(w > 0.0) {
            return Err(Error::ZeroWeight);
        }
        self.counts.subcube += k;
        let p = (p_target / w).clamp(0.0, 1.0);
        let binom = Binomial::new(k, p).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(self.rng.sample(binom))
    }

    /// `k` plain samples that land in `s`, obtained by discarding the ones
    /// that do not. Every attempt counts as a plain sample query. Returns the
    /// number of attempts.
    ///
    /// `weight_hint` is a prior estimate of `Pr[s]`; the per-point attempt
    /// cap uses the smaller of it and the running estimate.
    pub fn conditioned_by_rejection(
        &mut self,
        s: &Subcube,
        k: u64,
        weight_hint: Option<f64>,
        mut f: impl FnMut(Point),
    ) -> Result<u64> {
        self.require(AccessMode::Sample)?;
        let n = self.dim();
        let before = self.rejection.get(s).map_or(0, |e| e.0);
        for _ in 0..k {
            let attempts_before = self.rejection.get(s).map_or(0, |e| e.0);
            let bits = self.reject_until(s, weight_hint);
            let attempts_after = self.rejection.get(s).map_or(0, |e| e.0);
            self.counts.sample += attempts_after - attempts_before;
            let bits = bits?;
            f(Point::from_bits_unchecked(n, bits));
        }
        Ok(self.rejection.get(s).map_or(0, |e| e.0) - before)
    }

    /// Draws until a point lands in `s`, capping the attempts at
    /// `ceil(64 / w)` for the acceptance estimate `w`.
    fn reject_until(&mut self, s: &Subcube, hint: Option<f64>) -> Result<u64> {
        let (mut attempts, mut accepted) = self.rejection.get(s).copied().unwrap_or((0, 0));
        // Laplace-smoothed so the estimate never reaches zero; a hint can
        // only lower it, which only raises the cap
        let running = (accepted as f64 + 1.0) / (attempts as f64 + 2.0);
        let w_hat = match hint {
            Some(h) if h > 0.0 => h.min(running),
            _ => running,
        };
        let cap = ((REJECTION_FACTOR / w_hat).ceil() as u64).min(REJECTION_CEILING);
        let mut tries = 0;
        let result = loop {
            if tries == cap {
                break Err(Error::RejectionCap { attempts: tries });
            }
            tries += 1;
            attempts += 1;
            let bits = self.draw_bits();
            if s.contains_bits(bits) {
                accepted += 1;
                break Ok(bits);
            }
        };
        self.rejection.insert(*s, (attempts, accepted));
        result
    }

    /// Exact `D(x)`.
    pub fn exact_pmf(&mut self, x: &Point) -> Result<f64> {
        self.require(AccessMode::ExactPmf)?;
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        self.counts.exact += 1;
        Ok(match &self.backing {
            Backing::Tree(t) => t.prob(x),
            Backing::Dense(d) => d.prob(x),
            Backing::Stream(_) => unreachable!("streams never grant exact access"),
        })
    }

    /// Exact `Pr[x consistent with s]`.
    pub fn exact_weight(&mut self, s: &Restriction) -> Result<f64> {
        self.require(AccessMode::ExactPmf)?;
        self.check_restriction(s)?;
        self.counts.exact += 1;
        let cube = s.subcube();
        Ok(match &self.backing {
            Backing::Tree(t) => t.weight(&cube),
            Backing::Dense(d) => d.weight(&cube),
            Backing::Stream(_) => unreachable!("streams never grant exact access"),
        })
    }

    /// The full pmf table, materialized once. Counts as a single exact query.
    pub fn exact_table(&mut self) -> Result<Arc<DensePmf>> {
        self.require(AccessMode::ExactPmf)?;
        self.counts.exact += 1;
        if let Some(d) = &self.dense {
            return Ok(d.clone());
        }
        let dense = match &self.backing {
            Backing::Dense(d) => d.clone(),
            Backing::Tree(t) => Arc::new(DensePmf::from_pmf(t.as_ref())?),
            Backing::Stream(_) => unreachable!("streams never grant exact access"),
        };
        self.dense = Some(dense.clone());
        Ok(dense)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Node;

    fn e2() -> DistTree {
        DistTree::new(
            2,
            Node::split(
                0,
                Node::leaf(0.125),
                Node::split(1, Node::leaf(0.25), Node::leaf(0.5)),
            ),
        )
        .unwrap()
    }

    #[test]
    fn mode_ordering_is_enforced() {
        let mut o = DistOracle::from_tree(e2(), AccessMode::Sample, 1);
        assert!(o.sample().is_ok());
        assert!(matches!(
            o.subcube_sample(&Restriction::empty()),
            Err(Error::AccessDenied { .. })
        ));
        assert!(o.exact_pmf(&Point::ones(2)).is_err());
        let mut o = DistOracle::from_tree(e2(), AccessMode::ExactPmf, 1);
        assert!(o.sample().is_ok());
        assert!(o.subcube_sample(&Restriction::empty()).is_ok());
        assert_eq!(o.exact_pmf(&Point::ones(2)).unwrap(), 0.5);
    }

    #[test]
    fn query_counts_track_calls() {
        let mut o = DistOracle::from_tree(e2(), AccessMode::SubcubeSample, 9);
        for k in 1..=5u64 {
            o.sample().unwrap();
            assert_eq!(o.counts().sample, k);
        }
        o.subcube_sample_many(&"0=+1".parse().unwrap(), 7, |_| {}).unwrap();
        assert_eq!(o.counts().subcube, 7);
        assert_eq!(o.counts().total(), 12);
    }

    #[test]
    fn draws_are_reproducible() {
        let mut a = DistOracle::from_tree(e2(), AccessMode::Sample, 42);
        let mut b = DistOracle::from_tree(e2(), AccessMode::Sample, 42);
        for _ in 0..50 {
            assert_eq!(a.sample().unwrap(), b.sample().unwrap());
        }
        let mut c = a.split(0);
        let mut d = b.split(0);
        assert_eq!(c.sample().unwrap(), d.sample().unwrap());
        assert_ne!(a.split(0).seed(), a.split(1).seed());
    }

    #[test]
    fn point_mass_and_full_subcube() {
        let x = Point::from_signs(&[1, -1, 1]).unwrap();
        let mut o = DistOracle::from_dense(DensePmf::point_mass(&x).unwrap(), AccessMode::SubcubeSample, 0);
        for _ in 0..20 {
            assert_eq!(o.sample().unwrap(), x);
        }
        assert_eq!(o.subcube_sample(&Restriction::full(&x)).unwrap(), x);
        let y = x.flipped(0);
        assert!(matches!(
            o.subcube_sample(&Restriction::full(&y)),
            Err(Error::ZeroWeight)
        ));
    }

    #[test]
    fn count_matches_follows_the_conditional() {
        let mut o = DistOracle::from_tree(e2(), AccessMode::SubcubeSample, 21);
        // edge {(+,+), (+,-)}: conditional mass of (+,+) is 2/3
        let cube = Subcube { mask: 0b01, values: 0b01 };
        let hits = o.count_matches(&cube, 300_000, 0b11).unwrap();
        assert!((hits as f64 / 300_000.0 - 2.0 / 3.0).abs() < 0.005);
        assert_eq!(o.counts().subcube, 300_000);
        assert!(o.count_matches(&cube, 1, 0b10).is_err());
    }

    #[test]
    fn stream_rejection_is_capped() {
        let x = Point::from_signs(&[1, 1]).unwrap();
        let stream = Arc::new((2usize, move |_: &mut dyn RngCore| x));
        let mut o = DistOracle::new(Backing::Stream(stream), AccessMode::SubcubeSample, 0).unwrap();
        assert_eq!(o.subcube_sample(&"0=+1".parse().unwrap()).unwrap(), x);
        let err = o.subcube_sample(&"0=-1".parse().unwrap()).unwrap_err();
        assert!(matches!(err, Error::RejectionCap { attempts: 128 }));
        assert!(DistOracle::new(
            Backing::Stream(Arc::new((2usize, move |_: &mut dyn RngCore| x))),
            AccessMode::ExactPmf,
            0
        )
        .is_err());
    }
}
