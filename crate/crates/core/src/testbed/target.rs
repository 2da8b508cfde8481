use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cube::Point;
use crate::dense::DensePmf;
use crate::error::{Error, Result};
use crate::seed;
use crate::testbed::GEN_MAX_DIM;

/// A boolean function on {-1,+1}^n stored as its full table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TableFile", into = "TableFile")]
pub struct TruthTable {
    n: usize,
    table: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    n: usize,
    table: Vec<u8>,
}

impl TryFrom<TableFile> for TruthTable {
    type Error = Error;

    fn try_from(f: TableFile) -> Result<TruthTable> {
        if f.table.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter("truth table entries must be 0 or 1".into()));
        }
        TruthTable::new(f.n, f.table.into_iter().map(|b| b == 1).collect())
    }
}

impl From<TruthTable> for TableFile {
    fn from(t: TruthTable) -> TableFile {
        TableFile {
            n: t.n,
            table: t.table.into_iter().map(u8::from).collect(),
        }
    }
}

impl TruthTable {
    pub fn new(n: usize, table: Vec<bool>) -> Result<TruthTable> {
        if n > 24 {
            return Err(Error::DimensionTooLarge { n, limit: 24 });
        }
        if table.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: table.len(),
            });
        }
        Ok(TruthTable { n, table })
    }

    pub fn from_fn(n: usize, f: impl Fn(&Point) -> bool) -> Result<TruthTable> {
        let table = (0..1usize << n)
            .map(|k| f(&Point::from_bits_unchecked(n, k as u64)))
            .collect();
        TruthTable::new(n, table)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn eval(&self, x: &Point) -> bool {
        self.table[x.index()]
    }

    pub fn eval_bits(&self, bits: u64) -> bool {
        self.table[bits as usize]
    }

    /// `Pr_{x~D}[h(x) ≠ f(x)]`, exactly.
    pub fn error_under(&self, d: &DensePmf, h: impl Fn(&Point) -> bool) -> Result<f64> {
        if d.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: d.dim(),
            });
        }
        Ok(d.table()
            .iter()
            .enumerate()
            .filter(|&(k, _)| h(&Point::from_bits_unchecked(self.n, k as u64)) != self.table[k])
            .map(|(_, p)| p)
            .sum::<f64>()
            + 0.0)
    }

    /// Whether the value depends on coordinate `i`.
    pub fn depends_on(&self, i: usize) -> bool {
        (0..self.table.len()).any(|k| self.table[k] != self.table[k ^ 1 << i])
    }
}

/// Target families, all closed under restriction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetClass {
    /// Decision trees of depth ≤ k.
    Depth(usize),
    /// Functions of k fixed coordinates.
    Junta(usize),
    /// Signs of degree-≤k polynomials.
    Degree(usize),
}

impl FromStr for TargetClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<TargetClass> {
        let (name, k) = s
            .split_once(':')
            .ok_or_else(|| Error::UnknownClass(s.to_string()))?;
        let k: usize = k.parse().map_err(|_| Error::UnknownClass(s.to_string()))?;
        match name {
            "depth" => Ok(TargetClass::Depth(k)),
            "junta" => Ok(TargetClass::Junta(k)),
            "degree" => Ok(TargetClass::Degree(k)),
            _ => Err(Error::UnknownClass(s.to_string())),
        }
    }
}

impl fmt::Display for TargetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetClass::Depth(k) => write!(f, "depth:{k}"),
            TargetClass::Junta(k) => write!(f, "junta:{k}"),
            TargetClass::Degree(k) => write!(f, "degree:{k}"),
        }
    }
}

/// Random complete depth-`k` tree function with fresh coordinates on every
/// path and uniformly random leaf bits.
fn random_tree_fn(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
    enum T {
        Leaf(bool),
        Split(usize, Box<T>, Box<T>),
    }
    fn grow(n: usize, left: usize, used: u64, rng: &mut ChaCha8Rng) -> T {
        if left == 0 {
            return T::Leaf(rng.random_bool(0.5));
        }
        let free: Vec<usize> = (0..n).filter(|&i| used >> i & 1 == 0).collect();
        let v = free[rng.random_range(0..free.len())];
        let lo = grow(n, left - 1, used | 1 << v, rng);
        let hi = grow(n, left - 1, used | 1 << v, rng);
        T::Split(v, Box::new(lo), Box::new(hi))
    }
    fn eval(t: &T, x: usize) -> bool {
        match t {
            T::Leaf(b) => *b,
            T::Split(v, lo, hi) => eval(if x >> v & 1 == 1 { hi } else { lo }, x),
        }
    }
    let t = grow(n, k, 0, rng);
    (0..1usize << n).map(|x| eval(&t, x)).collect()
}

fn random_subset(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut coords: Vec<usize> = (0..n).collect();
    for j in 0..k {
        let pick = rng.random_range(j..n);
        coords.swap(j, pick);
    }
    let mut out = coords[..k].to_vec();
    out.sort_unstable();
    out
}

/// Random member of `class` over `n ≤ 16` coordinates.
pub fn gen_target(n: usize, class: TargetClass, seed: u64) -> Result<TruthTable> {
    if n > GEN_MAX_DIM {
        return Err(Error::DimensionTooLarge { n, limit: GEN_MAX_DIM });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &format!("target-{class}")));
    let table = match class {
        TargetClass::Depth(k) => {
            if k > n {
                return Err(Error::InvalidParameter(format!("depth {k} exceeds n = {n}")));
            }
            random_tree_fn(n, k, &mut rng)
        }
        TargetClass::Junta(k) => {
            if k > n {
                return Err(Error::InvalidParameter(format!("junta size {k} exceeds n = {n}")));
            }
            let j = random_subset(n, k, &mut rng);
            // redraw until the function depends on every junta coordinate
            loop {
                let inner: Vec<bool> = (0..1usize << k).map(|_| rng.random_bool(0.5)).collect();
                let table: Vec<bool> = (0..1usize << n)
                    .map(|x| {
                        let idx = j.iter().enumerate().fold(0, |acc, (b, &i)| acc | (x >> i & 1) << b);
                        inner[idx]
                    })
                    .collect();
                let t = TruthTable::new(n, table)?;
                if j.iter().all(|&i| t.depends_on(i)) {
                    break t.table;
                }
            }
        }
        TargetClass::Degree(k) => {
            // Gaussian-like coefficients on every character of degree ≤ k
            let chars: Vec<u64> = (0..1u64 << n).filter(|m| m.count_ones() as usize <= k).collect();
            let coef: Vec<f64> = chars.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
            (0..1u64 << n)
                .map(|x| {
                    let v: f64 = chars
                        .iter()
                        .zip(&coef)
                        .map(|(&m, &c)| if (m & !x).count_ones() % 2 == 0 { c } else { -c })
                        .sum();
                    v >= 0.0
                })
                .collect()
        }
    };
    TruthTable::new(n, table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_classes() {
        assert_eq!("depth:2".parse::<TargetClass>().unwrap(), TargetClass::Depth(2));
        assert_eq!("junta:3".parse::<TargetClass>().unwrap(), TargetClass::Junta(3));
        assert_eq!("degree:1".parse::<TargetClass>().unwrap(), TargetClass::Degree(1));
        assert!(matches!("ball:2".parse::<TargetClass>(), Err(Error::UnknownClass(_))));
        assert!("depth".parse::<TargetClass>().is_err());
    }

    #[test]
    fn depth_zero_is_constant() {
        for seed in 0..10 {
            let t = gen_target(6, TargetClass::Depth(0), seed).unwrap();
            assert!(t.table().iter().all(|&b| b == t.table()[0]));
        }
    }

    #[test]
    fn junta_one_is_a_dictator() {
        for seed in 0..10 {
            let t = gen_target(6, TargetClass::Junta(1), seed).unwrap();
            let deps: Vec<usize> = (0..6).filter(|&i| t.depends_on(i)).collect();
            assert_eq!(deps.len(), 1);
            let i = deps[0];
            let dict = (0..64).all(|x| t.table()[x] == (x >> i & 1 == 1));
            let anti = (0..64).all(|x| t.table()[x] == (x >> i & 1 == 0));
            assert!(dict || anti);
        }
    }

    #[test]
    fn reproducible_and_bounded() {
        let a = gen_target(8, TargetClass::Depth(2), 4).unwrap();
        assert_eq!(a, gen_target(8, TargetClass::Depth(2), 4).unwrap());
        assert!((0..8).filter(|&i| a.depends_on(i)).count() <= 3);
        let g = gen_target(5, TargetClass::Degree(1), 2).unwrap();
        assert_eq!(g.dim(), 5);
    }

    #[test]
    fn json_round_trip() {
        let t = TruthTable::new(1, vec![false, true]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"n":1,"table":[0,1]}"#);
        assert_eq!(serde_json::from_str::<TruthTable>(&s).unwrap(), t);
    }
}
