//! Hypercube primitives: signs, points of {-1,+1}^n, restrictions and their
//! compact subcube form.
//!
//! A point is stored as a bit mask where bit `i` is set exactly when
//! coordinate `i` equals +1. The same encoding indexes dense pmf tables.

use std::fmt;

use rand::RngCore;

use crate::error::{Error, Result};

/// Largest ambient dimension supported by [`Point`].
pub const MAX_DIM: usize = 64;

/// Mask with the low `n` bits set.
#[inline]
pub fn dim_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// A coordinate value in {-1, +1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Neg,
    Pos,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Neg => -1,
            Sign::Pos => 1,
        }
    }

    pub fn from_value(v: i64) -> Option<Sign> {
        match v {
            -1 => Some(Sign::Neg),
            1 => Some(Sign::Pos),
            _ => None,
        }
    }

    /// File encoding: bit 0 is -1, bit 1 is +1.
    pub fn from_bit(bit: bool) -> Sign {
        if bit {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    pub fn is_pos(self) -> bool {
        self == Sign::Pos
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Pos => Sign::Neg,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_pos() { "+1" } else { "-1" })
    }
}

/// A point of {-1,+1}^n.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Point {
    n: u8,
    bits: u64,
}

impl Point {
    pub fn new(n: usize, bits: u64) -> Result<Point> {
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge { n, limit: MAX_DIM });
        }
        if bits & !dim_mask(n) != 0 {
            return Err(Error::InvalidPoint(format!(
                "bits {bits:#x} set beyond dimension {n}"
            )));
        }
        Ok(Point { n: n as u8, bits })
    }

    /// Point from its dense-table index. Caller guarantees `n <= 64` and
    /// that `bits` has no bits above `n`.
    #[inline]
    pub(crate) fn from_bits_unchecked(n: usize, bits: u64) -> Point {
        debug_assert!(n <= MAX_DIM && bits & !dim_mask(n) == 0);
        Point { n: n as u8, bits }
    }

    pub fn from_index(n: usize, index: usize) -> Result<Point> {
        Point::new(n, index as u64)
    }

    pub fn from_signs(signs: &[i8]) -> Result<Point> {
        if signs.len() > MAX_DIM {
            return Err(Error::DimensionTooLarge {
                n: signs.len(),
                limit: MAX_DIM,
            });
        }
        let mut bits = 0u64;
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => bits |= 1 << i,
                -1 => {}
                other => {
                    return Err(Error::InvalidPoint(format!(
                        "entry {i} is {other}, expected -1 or +1"
                    )))
                }
            }
        }
        Ok(Point {
            n: signs.len() as u8,
            bits,
        })
    }

    /// All-(+1) point.
    pub fn ones(n: usize) -> Point {
        Point::from_bits_unchecked(n, dim_mask(n))
    }

    pub fn uniform(n: usize, rng: &mut (impl RngCore + ?Sized)) -> Point {
        Point::from_bits_unchecked(n, rng.next_u64() & dim_mask(n))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    #[inline]
    pub fn sign(&self, i: usize) -> Sign {
        Sign::from_bit(self.bits >> i & 1 == 1)
    }

    #[inline]
    pub fn value(&self, i: usize) -> i8 {
        self.sign(i).value()
    }

    /// `x` with coordinate `i` flipped.
    #[inline]
    pub fn flipped(&self, i: usize) -> Point {
        Point {
            n: self.n,
            bits: self.bits ^ (1 << i),
        }
    }

    /// `x` with coordinate `i` overwritten by `b`.
    #[inline]
    pub fn with(&self, i: usize, b: Sign) -> Point {
        let bits = if b.is_pos() {
            self.bits | (1 << i)
        } else {
            self.bits & !(1 << i)
        };
        Point { n: self.n, bits }
    }

    /// `x` with coordinate `i` replaced by a fresh uniform sign.
    pub fn rerandomized(&self, i: usize, rng: &mut (impl RngCore + ?Sized)) -> Point {
        self.with(i, Sign::from_bit(rng.next_u64() & 1 == 1))
    }

    pub fn to_signs(&self) -> Vec<i8> {
        (0..self.dim()).map(|i| self.value(i)).collect()
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point(")?;
        for i in 0..self.dim() {
            f.write_str(if self.sign(i).is_pos() { "+" } else { "-" })?;
        }
        write!(f, ")")
    }
}

/// Compact subcube: the coordinates in `mask` are fixed, and among them the
/// ones set in `values` equal +1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subcube {
    pub mask: u64,
    pub values: u64,
}

impl Subcube {
    pub const FULL: Subcube = Subcube { mask: 0, values: 0 };

    #[inline]
    pub fn depth(&self) -> usize {
        self.mask.count_ones() as usize
    }

    #[inline]
    pub fn contains_bits(&self, bits: u64) -> bool {
        (bits ^ self.values) & self.mask == 0
    }

    #[inline]
    pub fn contains(&self, x: &Point) -> bool {
        self.contains_bits(x.bits())
    }

    /// Whether the two subcubes share at least one point.
    #[inline]
    pub fn compatible(&self, other: &Subcube) -> bool {
        (self.values ^ other.values) & self.mask & other.mask == 0
    }

    /// Intersection; meaningful only when the two are compatible.
    #[inline]
    pub fn meet(&self, other: &Subcube) -> Subcube {
        Subcube {
            mask: self.mask | other.mask,
            values: self.values | other.values,
        }
    }

    #[inline]
    pub fn fixes(&self, i: usize) -> bool {
        self.mask >> i & 1 == 1
    }

    #[inline]
    pub fn with(&self, i: usize, b: Sign) -> Subcube {
        let bit = 1u64 << i;
        Subcube {
            mask: self.mask | bit,
            values: if b.is_pos() {
                self.values | bit
            } else {
                self.values & !bit
            },
        }
    }

    /// The point of the subcube obtained by overwriting `x`'s fixed coordinates.
    #[inline]
    pub fn project_bits(&self, bits: u64) -> u64 {
        (bits & !self.mask) | self.values
    }

    /// Enumerates every point of {-1,+1}^n inside the subcube, in increasing
    /// index order.
    pub fn points(&self, n: usize) -> impl Iterator<Item = Point> + '_ {
        let free = dim_mask(n) & !self.mask;
        let values = self.values & dim_mask(n);
        let count: u64 = 1u64 << free.count_ones();
        let mut sub = 0u64;
        (0..count).map(move |_| {
            let p = Point::from_bits_unchecked(n, sub | values);
            // next subset of `free` in increasing order
            sub = sub.wrapping_sub(free) & free;
            p
        })
    }
}

/// An ordered list of (coordinate, sign) pairs with distinct coordinates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Restriction {
    pairs: Vec<(usize, Sign)>,
}

impl Restriction {
    pub fn empty() -> Restriction {
        Restriction { pairs: Vec::new() }
    }

    pub fn new(pairs: Vec<(usize, Sign)>) -> Result<Restriction> {
        let mut seen = 0u64;
        for &(i, _) in &pairs {
            if i >= MAX_DIM {
                return Err(Error::CoordinateOutOfRange {
                    coord: i,
                    n: MAX_DIM,
                });
            }
            if seen >> i & 1 == 1 {
                return Err(Error::InvalidRestriction(format!(
                    "coordinate {i} appears twice"
                )));
            }
            seen |= 1 << i;
        }
        Ok(Restriction { pairs })
    }

    /// Restriction fixing every coordinate of `x`.
    pub fn full(x: &Point) -> Restriction {
        Restriction {
            pairs: (0..x.dim()).map(|i| (i, x.sign(i))).collect(),
        }
    }

    /// Restriction from a subcube, with coordinates in increasing order.
    pub fn from_subcube(s: Subcube) -> Restriction {
        let mut pairs = Vec::with_capacity(s.depth());
        let mut m = s.mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            pairs.push((i, Sign::from_bit(s.values >> i & 1 == 1)));
            m &= m - 1;
        }
        Restriction { pairs }
    }

    pub fn pairs(&self) -> &[(usize, Sign)] {
        &self.pairs
    }

    pub fn depth(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<Sign> {
        self.pairs.iter().find(|(j, _)| *j == i).map(|&(_, b)| b)
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.get(i).is_some()
    }

    /// Extends the restriction by `x_i = b`.
    pub fn with(&self, i: usize, b: Sign) -> Result<Restriction> {
        if self.is_fixed(i) {
            return Err(Error::CoordinateFixed(i));
        }
        if i >= MAX_DIM {
            return Err(Error::CoordinateOutOfRange {
                coord: i,
                n: MAX_DIM,
            });
        }
        let mut pairs = self.pairs.clone();
        pairs.push((i, b));
        Ok(Restriction { pairs })
    }

    pub fn subcube(&self) -> Subcube {
        self.pairs
            .iter()
            .fold(Subcube::FULL, |acc, &(i, b)| acc.with(i, b))
    }

    /// Checks that the restriction lives in dimension `n`.
    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.depth() > n {
            return Err(Error::InvalidRestriction(format!(
                "depth {} exceeds dimension {n}",
                self.depth()
            )));
        }
        match self.pairs.iter().find(|(i, _)| *i >= n) {
            Some(&(coord, _)) => Err(Error::CoordinateOutOfRange { coord, n }),
            None => Ok(()),
        }
    }

    pub fn admits(&self, x: &Point) -> bool {
        self.subcube().contains(x)
    }

    /// `x_pi`: `x` with the restricted coordinates overwritten.
    pub fn apply(&self, x: &Point) -> Point {
        Point::from_bits_unchecked(x.dim(), self.subcube().project_bits(x.bits()))
    }

    /// Coordinates of `[n]` not fixed by the restriction, increasing.
    pub fn free_coords(&self, n: usize) -> Vec<usize> {
        let mask = self.subcube().mask;
        (0..n).filter(|&i| mask >> i & 1 == 0).collect()
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (i, b)) in self.pairs.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "x{i}={b}")?;
        }
        write!(f, "}}")
    }
}

/// Parses `"0=+1,3=-1"` (also accepts `+`/`-` and `1`/`0` for the sign).
impl std::str::FromStr for Restriction {
    type Err = Error;

    fn from_str(text: &str) -> Result<Restriction> {
        let mut pairs = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (coord, sign) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidRestriction(format!("expected i=sign, got `{part}`")))?;
            let coord: usize = coord
                .trim()
                .parse()
                .map_err(|_| Error::InvalidRestriction(format!("bad coordinate `{coord}`")))?;
            let sign = match sign.trim() {
                "+1" | "+" | "1" => Sign::Pos,
                "-1" | "-" | "0" => Sign::Neg,
                other => {
                    return Err(Error::InvalidRestriction(format!("bad sign `{other}`")));
                }
            };
            pairs.push((coord, sign));
        }
        Restriction::new(pairs)
    }
}
