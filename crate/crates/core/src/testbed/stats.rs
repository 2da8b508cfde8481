use serde::Serialize;

use crate::cube::Subcube;
use crate::error::{Error, Result};

/// Largest dimension [`brute_stats`] accepts.
pub const STATS_MAX_DIM: usize = 14;

/// Exact statistics of a real function on {-1,+1}^n under the uniform
/// distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteStats {
    pub inf: Vec<f64>,
    pub total_inf: f64,
    /// `E|f(x) − f(y)|` over independent uniform `x, y`.
    pub var1: f64,
    /// `E|f(x) − E f|`.
    pub var_mu: f64,
    pub sensitivity: usize,
    pub mean: f64,
}

/// Enumerates `f`, given as a table indexed by point bits.
pub fn brute_stats(f: &[f64]) -> Result<BruteStats> {
    let len = f.len();
    if !len.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("table length {len} is not a power of two")));
    }
    let n = len.trailing_zeros() as usize;
    if n > STATS_MAX_DIM {
        return Err(Error::DimensionTooLarge { n, limit: STATS_MAX_DIM });
    }
    let size = len as f64;
    let mut inf = vec![0.0; n];
    let mut sensitivity = 0;
    for x in 0..len {
        let mut sens = 0;
        for (i, slot) in inf.iter_mut().enumerate() {
            let y = x ^ 1 << i;
            if f[x] != f[y] {
                sens += 1;
            }
            // each unordered pair is visited twice: E|f(x) − f(x^i)| / 2
            *slot += (f[x] - f[y]).abs() / 2.0;
        }
        sensitivity = sensitivity.max(sens);
    }
    for v in &mut inf {
        *v /= size;
    }
    let mean = f.iter().sum::<f64>() / size;
    let var_mu = f.iter().map(|v| (v - mean).abs()).sum::<f64>() / size;
    // Σ_{x,y} |f(x) − f(y)| = 2 Σ_k v_(k) (2k − N + 1) over sorted values
    let mut sorted = f.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pair_sum: f64 = sorted
        .iter()
        .enumerate()
        .map(|(k, v)| v * (2.0 * k as f64 - size + 1.0))
        .sum();
    let var1 = 2.0 * pair_sum / (size * size);
    Ok(BruteStats {
        total_inf: inf.iter().sum(),
        inf,
        var1,
        var_mu,
        sensitivity,
        mean,
    })
}

/// The restriction of `f` to `s`, as a table over the free coordinates in
/// increasing order.
pub fn restricted_table(f: &[f64], n: usize, s: &Subcube) -> Vec<f64> {
    let free: Vec<usize> = (0..n).filter(|&i| !s.fixes(i)).collect();
    (0..1usize << free.len())
        .map(|y| {
            let mut x = s.values as usize & ((1usize << n) - 1);
            for (k, &i) in free.iter().enumerate() {
                x |= (y >> k & 1) << i;
            }
            f[x]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e2_weighting_function() {
        let f = [0.5, 1.0, 0.5, 2.0];
        let s = brute_stats(&f).unwrap();
        assert!((s.inf[0] - 0.5).abs() < 1e-15);
        assert!((s.inf[1] - 0.25).abs() < 1e-15);
        assert!((s.total_inf - 0.75).abs() < 1e-15);
        assert!((s.var1 - 0.625).abs() < 1e-15);
        assert!((s.var_mu - 0.5).abs() < 1e-15);
        assert_eq!(s.sensitivity, 2);
        assert!((s.mean - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_and_dictator() {
        let s = brute_stats(&[3.0; 8]).unwrap();
        assert_eq!(s.total_inf, 0.0);
        assert_eq!(s.var1, 0.0);
        assert_eq!(s.var_mu, 0.0);
        assert_eq!(s.sensitivity, 0);
        assert_eq!(s.mean, 3.0);
        // f = x_0 as ±1 over n = 2
        let s = brute_stats(&[-1.0, 1.0, -1.0, 1.0]).unwrap();
        assert_eq!(s.inf, vec![1.0, 0.0]);
        assert_eq!(s.sensitivity, 1);
    }

    #[test]
    fn var1_matches_pairwise_definition() {
        let f: Vec<f64> = (0..32).map(|k| ((k * 37) % 11) as f64 * 0.3).collect();
        let mut direct = 0.0;
        for a in &f {
            for b in &f {
                direct += (a - b).abs();
            }
        }
        direct /= 1024.0;
        assert!((brute_stats(&f).unwrap().var1 - direct).abs() < 1e-12);
    }

    #[test]
    fn restriction_table() {
        let f = [0.5, 1.0, 0.5, 2.0];
        let s = Subcube { mask: 1, values: 1 };
        assert_eq!(restricted_table(&f, 2, &s), vec![1.0, 2.0]);
        assert_eq!(restricted_table(&f, 2, &Subcube::FULL), f.to_vec());
    }
}
