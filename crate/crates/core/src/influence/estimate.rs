//! Sample-based influence estimators. Both return influences of the
//! conditional distribution `D_s`.

use crate::cube::{dim_mask, Restriction, Subcube};
use crate::error::{Error, Result};
use crate::influence::InfluenceEstimate;
use crate::oracle::{AccessMode, DistOracle};

fn check_params(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0,1), got {delta}")));
    }
    Ok(())
}

fn check_free(o: &DistOracle, i: usize, s: &Restriction) -> Result<()> {
    s.check_dim(o.dim())?;
    if i >= o.dim() {
        return Err(Error::CoordinateOutOfRange { coord: i, n: o.dim() });
    }
    if s.is_fixed(i) {
        return Err(Error::CoordinateFixed(i));
    }
    Ok(())
}

/// Hoeffding count for a mean of `{-1,+1}` variables: `ceil(2 ln(2/δ) / ε²)`.
/// The range is 2, hence four times the `[0,1]` count.
pub fn monotone_sample_count(eps: f64, delta: f64) -> u64 {
    (2.0 * (2.0 / delta).ln() / (eps * eps)).ceil() as u64
}

/// Estimates `E_{x~D_s}[x_i]`, which equals `Inf_i(f_{D_s})` when `D` is
/// monotone, from plain samples filtered to `s`.
pub fn monotone_bias_estimate(
    oracle: &mut DistOracle,
    i: usize,
    s: &Restriction,
    eps: f64,
    delta: f64,
) -> Result<InfluenceEstimate> {
    check_free(oracle, i, s)?;
    let mut all = monotone_bias_all(oracle, s, eps, delta, None)?;
    let pos = all.iter().position(|e| e.coordinate == i).expect("free coordinate");
    Ok(all.swap_remove(pos))
}

/// Bias estimates for every free coordinate of `s`, sharing one batch of
/// conditioned samples. Each estimate individually meets `(eps, delta)`.
pub fn monotone_bias_all(
    oracle: &mut DistOracle,
    s: &Restriction,
    eps: f64,
    delta: f64,
    weight_hint: Option<f64>,
) -> Result<Vec<InfluenceEstimate>> {
    check_params(eps, delta)?;
    oracle.require(AccessMode::Sample)?;
    s.check_dim(oracle.dim())?;
    let n = oracle.dim();
    let k = monotone_sample_count(eps, delta);
    let free = s.free_coords(n);
    let mut ones = vec![0u64; n];
    oracle.conditioned_by_rejection(&s.subcube(), k, weight_hint, |x| {
        let b = x.bits();
        for &i in &free {
            ones[i] += b >> i & 1;
        }
    })?;
    Ok(free
        .iter()
        .map(|&i| {
            // mean of x_i = (#plus − #minus)/k; negative bias means the
            // monotone assumption failed, clamp at 0
            let diff = 2 * ones[i] as i64 - k as i64;
            InfluenceEstimate {
                coordinate: i,
                value: (diff as f64 / k as f64).max(0.0),
                accuracy: eps,
                confidence: delta,
                samples_used: k,
                restriction: s.clone(),
            }
        })
        .collect())
}

/// Two-point subcube through `x_bits` along coordinate `i`.
fn edge(n: usize, x_bits: u64, i: usize) -> Subcube {
    let mask = dim_mask(n) & !(1u64 << i);
    Subcube { mask, values: x_bits & mask }
}

/// `|2c − k|` for one InfEst run with `k` conditioned draws.
fn infest_raw(oracle: &mut DistOracle, i: usize, cube: &Subcube, k: u64) -> Result<u64> {
    let mut x_bits = 0;
    oracle.subcube_draws(cube, 1, |x| x_bits = x.bits())?;
    let e = edge(oracle.dim(), x_bits, i);
    let same = oracle.count_matches(&e, k, x_bits)?;
    Ok((2 * same).abs_diff(k))
}

/// One InfEst run on `D_s`: draw `x ~ D_s`, then `ceil(1/ε²)` draws from the
/// edge `{x, x^i}`; returns `|2p − 1|` for the fraction `p` equal to `x`.
pub fn infest(oracle: &mut DistOracle, i: usize, s: &Restriction, eps: f64) -> Result<f64> {
    check_params(eps, 0.5)?;
    oracle.require(AccessMode::SubcubeSample)?;
    check_free(oracle, i, s)?;
    let k = (1.0 / (eps * eps)).ceil() as u64;
    let raw = infest_raw(oracle, i, &s.subcube(), k)?;
    Ok(raw as f64 / k as f64)
}

/// Repetitions used by [`infest_high_accuracy`]: `ceil(2·ln(2/δ)/(ε/2)²)`.
pub fn infest_runs(eps: f64, delta: f64) -> u64 {
    let h = eps / 2.0;
    (2.0 * (2.0 / delta).ln() / (h * h)).ceil() as u64
}

/// Mean of [`infest_runs`] independent InfEst runs at accuracy `ε/2`.
pub fn infest_high_accuracy(
    oracle: &mut DistOracle,
    i: usize,
    s: &Restriction,
    eps: f64,
    delta: f64,
) -> Result<InfluenceEstimate> {
    check_params(eps, delta)?;
    oracle.require(AccessMode::SubcubeSample)?;
    check_free(oracle, i, s)?;
    let runs = infest_runs(eps, delta);
    let h = eps / 2.0;
    let k = (1.0 / (h * h)).ceil() as u64;
    let cube = s.subcube();
    // integer accumulation keeps the mean independent of run order
    let mut total: u128 = 0;
    for _ in 0..runs {
        total += u128::from(infest_raw(oracle, i, &cube, k)?);
    }
    Ok(InfluenceEstimate {
        coordinate: i,
        value: total as f64 / (runs as f64 * k as f64),
        accuracy: eps,
        confidence: delta,
        samples_used: runs * (k + 1),
        restriction: s.clone(),
    })
}
