//! Distributional influence: exact enumeration, estimators, and a uniform
//! front door over them.
//!
//! For a restriction `s` the quantity of interest is `Inf_i((f_D)_s)`, the
//! influence of coordinate `i` on the weighting function `f_D = 2^n D`
//! restricted to `s`. Estimators work on the conditional distribution
//! `D_s`; [`scale_to_restriction`] converts between the two.

mod estimate;
mod oracle;

use serde::{Deserialize, Serialize};

use crate::cube::{Restriction, Subcube};
use crate::dense::DensePmf;
use crate::error::{Error, Result};

pub use estimate::{infest, infest_high_accuracy, infest_runs, monotone_bias_all, monotone_bias_estimate, monotone_sample_count};
pub use oracle::{oracle_influence, InfluenceKind, InfluenceOracle, WeightPool};

/// An influence value together with how it was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceEstimate {
    #[serde(rename = "coord")]
    pub coordinate: usize,
    pub value: f64,
    /// Additive accuracy target; 0 for exact values.
    pub accuracy: f64,
    /// Allowed failure probability; 0 for exact values.
    pub confidence: f64,
    #[serde(rename = "samples")]
    pub samples_used: u64,
    #[serde(skip)]
    pub restriction: Restriction,
}

impl InfluenceEstimate {
    pub fn exact(coordinate: usize, value: f64, restriction: Restriction) -> InfluenceEstimate {
        InfluenceEstimate {
            coordinate,
            value,
            accuracy: 0.0,
            confidence: 0.0,
            samples_used: 0,
            restriction,
        }
    }
}

/// `Inf_i((f_D)_s) = 2^|s| · Pr[s] · Inf_i(f_{D_s})`.
pub fn scale_to_restriction(cond_inf: f64, s: &Restriction, weight: f64) -> f64 {
    if weight == 0.0 {
        return 0.0;
    }
    (s.depth() as f64).exp2() * weight * cond_inf
}

/// All influences of `(f_D)_s`, indexed by coordinate; fixed coordinates
/// get 0. A zero-weight subcube gives all zeros.
pub(crate) fn influences_in(table: &[f64], n: usize, s: &Subcube) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let free: Vec<usize> = (0..n).filter(|&i| !s.fixes(i)).collect();
    for x in s.points(n) {
        let b = x.bits();
        let fx = table[b as usize];
        for &i in &free {
            if b >> i & 1 == 0 {
                out[i] += (fx - table[(b | 1 << i) as usize]).abs();
            }
        }
    }
    // each pair is seen once; Inf_i = 2^{|s|} · Σ_pairs |D(y) − D(y^i)|
    let scale = (s.depth() as f64).exp2();
    for v in &mut out {
        *v *= scale;
    }
    out
}

fn check_free(d: &DensePmf, i: usize, s: &Restriction) -> Result<()> {
    s.check_dim(d.dim())?;
    if i >= d.dim() {
        return Err(Error::CoordinateOutOfRange { coord: i, n: d.dim() });
    }
    if s.is_fixed(i) {
        return Err(Error::CoordinateFixed(i));
    }
    Ok(())
}

fn check_weight(d: &DensePmf, s: &Restriction) -> Result<()> {
    if d.weight(&s.subcube()) <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    Ok(())
}

/// `Inf_i((f_D)_s)` by full enumeration of the subcube.
pub fn exact_influence(d: &DensePmf, i: usize, s: &Restriction) -> Result<f64> {
    check_free(d, i, s)?;
    check_weight(d, s)?;
    let cube = s.subcube();
    let n = d.dim();
    let table = d.table();
    let mut sum = 0.0;
    for x in cube.points(n) {
        let b = x.bits();
        if b >> i & 1 == 0 {
            sum += (table[b as usize] - table[(b | 1 << i) as usize]).abs();
        }
    }
    Ok((s.depth() as f64).exp2() * sum)
}

/// Influences of every coordinate of `(f_D)_s`; fixed coordinates get 0.
pub fn exact_influences(d: &DensePmf, s: &Restriction) -> Result<Vec<f64>> {
    s.check_dim(d.dim())?;
    check_weight(d, s)?;
    Ok(influences_in(d.table(), d.dim(), &s.subcube()))
}

/// `Inf((f_D)_s)`, the sum over free coordinates.
pub fn exact_total_influence(d: &DensePmf, s: &Restriction) -> Result<f64> {
    Ok(exact_influences(d, s)?.iter().sum())
}
