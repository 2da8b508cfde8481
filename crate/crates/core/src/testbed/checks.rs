use serde::Serialize;

use crate::cube::Subcube;
use crate::dense::{tv_distance, DensePmf};
use crate::error::{Error, Result};
use crate::seed;
use crate::testbed::stats::{brute_stats, restricted_table};
use crate::testbed::{gen_dt_dist, Instance};
use crate::tree::DistTree;

/// Largest dimension [`check_inequalities`] accepts.
pub const CHECK_MAX_DIM: usize = 12;

/// Allowed deviation for identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

/// Allowed violation for inequalities.
pub const INEQUALITY_SLACK: f64 = 1e-9;

/// One evaluated check. For an inequality `lhs ≤ rhs` the margin is
/// `rhs − lhs`; for an identity it is `−|lhs − rhs|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub instance: u64,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckReport {
    pub records: Vec<CheckRecord>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.pass)
    }

    pub fn get(&self, check: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.check == check)
    }

    fn le(&mut self, instance: u64, check: &str, lhs: f64, rhs: f64) {
        let margin = rhs - lhs;
        self.records.push(CheckRecord {
            instance,
            check: check.to_string(),
            lhs,
            rhs,
            margin,
            pass: margin >= -INEQUALITY_SLACK,
        });
    }

    fn eq(&mut self, instance: u64, check: &str, lhs: f64, rhs: f64) {
        let margin = -(lhs - rhs).abs();
        self.records.push(CheckRecord {
            instance,
            check: check.to_string(),
            lhs,
            rhs,
            margin,
            pass: -margin <= IDENTITY_TOLERANCE,
        });
    }
}

/// `Σ_ℓ Pr_D[ℓ] · dist_TV(D_ℓ, uniform on ℓ)` over the leaves of `t`.
fn leafwise_uniformity(d: &DensePmf, t: &DistTree) -> f64 {
    let n = d.dim();
    let table = d.table();
    t.leaves()
        .iter()
        .map(|leaf| {
            let w = d.weight(&leaf.cube);
            if w == 0.0 {
                return 0.0;
            }
            let u = 1.0 / ((n - leaf.cube.depth()) as f64).exp2();
            let tv: f64 = leaf
                .cube
                .points(n)
                .map(|x| (table[x.index()] / w - u).abs())
                .sum::<f64>()
                / 2.0;
            w * tv
        })
        .sum()
}

/// `(E_{ℓ∈T}[Inf(f_ℓ)], 2^{-n} ‖f − T‖₁)` where `T` labels each leaf of
/// `shape` with the mean of `f` on it and leaves are weighted by volume.
fn leaf_influence_and_error(f: &[f64], n: usize, shape: &DistTree) -> Result<(f64, f64)> {
    let size = (n as f64).exp2();
    let mut avg_inf = 0.0;
    let mut l1 = 0.0;
    for leaf in shape.leaves() {
        let cube: Subcube = leaf.cube;
        let sub = restricted_table(f, n, &cube);
        let stats = brute_stats(&sub)?;
        let vol = 1.0 / (cube.depth() as f64).exp2();
        avg_inf += vol * stats.total_inf;
        l1 += sub.iter().map(|v| (v - stats.mean).abs()).sum::<f64>();
    }
    Ok((avg_inf, l1 / size))
}

/// Evaluates every preliminary inequality and identity on the instance's
/// weighting function, exactly.
pub fn check_inequalities(inst: &Instance) -> Result<CheckReport> {
    let d = &inst.dense;
    let n = d.dim();
    if n > CHECK_MAX_DIM {
        return Err(Error::DimensionTooLarge { n, limit: CHECK_MAX_DIM });
    }
    let id = inst.seed;
    let f = d.weighting_table();
    let st = brute_stats(&f)?;
    let mut r = CheckReport::default();

    r.le(id, "efron_stein", st.var1, st.total_inf);
    r.le(id, "influence_sensitivity", st.total_inf, 2.0 * st.sensitivity as f64 * st.var1);
    r.le(id, "var_mu_le_var1", st.var_mu, st.var1);
    r.le(id, "var1_le_2var_mu", st.var1, 2.0 * st.var_mu);

    // E_b Inf(f_{x_i=b}) = Inf(f) − Inf_i(f); the worst coordinate is reported
    let mut worst: Option<(f64, f64)> = None;
    for i in 0..n {
        let mut avg = 0.0;
        for b in [0u64, 1] {
            let cube = Subcube { mask: 1 << i, values: b << i };
            avg += brute_stats(&restricted_table(&f, n, &cube))?.total_inf / 2.0;
        }
        let rhs = st.total_inf - st.inf[i];
        if worst.is_none_or(|(l, r)| (avg - rhs).abs() > (l - r).abs()) {
            worst = Some((avg, rhs));
        }
    }
    if let Some((lhs, rhs)) = worst {
        r.eq(id, "influence_drop", lhs, rhs);
    }

    let tv_u = tv_distance(d, &DensePmf::uniform(n)?)?;
    r.le(id, "uniformity_bound", 2.0 * tv_u, st.total_inf);

    // an unrelated tree distribution, used both as T' and as D_T
    let other = gen_dt_dist(n, n.min(3), seed::derive(inst.seed, "check-other"))?;
    let depth = inst.tree.depth();
    let (lhs, err) = leaf_influence_and_error(&f, n, &other.tree)?;
    r.le(id, "influence_vs_l1_error", lhs, 4.0 * depth as f64 * err);

    let g = other.dense.weighting_table();
    let label_err: f64 = f.iter().zip(&g).map(|(a, b)| (a - b).abs()).sum::<f64>() / (n as f64 + 1.0).exp2();
    r.eq(id, "tv_label_error", tv_distance(d, &other.dense)?, label_err);

    r.le(
        id,
        "tv_split",
        leafwise_uniformity(d, &other.tree),
        2.0 * tv_distance(d, &other.dense)?,
    );
    Ok(r)
}
