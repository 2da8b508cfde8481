use std::sync::Arc;

use serde_json::{json, Value};

use crate::cube::Point;
use crate::error::Result;
use crate::testbed::TruthTable;
use crate::tree::{DistTree, Node};

/// Largest dimension at which flat hypotheses serialize as truth tables.
pub const TABLE_MAX_DIM: usize = 16;

/// Decision tree with boolean leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoolTree {
    Leaf(bool),
    Split {
        var: usize,
        lo: Box<BoolTree>,
        hi: Box<BoolTree>,
    },
}

impl BoolTree {
    pub fn split(var: usize, lo: BoolTree, hi: BoolTree) -> BoolTree {
        BoolTree::Split {
            var,
            lo: Box::new(lo),
            hi: Box::new(hi),
        }
    }

    pub fn eval_bits(&self, bits: u64) -> bool {
        match self {
            BoolTree::Leaf(b) => *b,
            BoolTree::Split { var, lo, hi } => {
                if bits >> var & 1 == 1 {
                    hi.eval_bits(bits)
                } else {
                    lo.eval_bits(bits)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            BoolTree::Leaf(_) => 0,
            BoolTree::Split { lo, hi, .. } => 1 + lo.depth().max(hi.depth()),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            BoolTree::Leaf(b) => json!({ "leaf": u8::from(*b) }),
            BoolTree::Split { var, lo, hi } => {
                json!({ "var": var, "lo": lo.to_json(), "hi": hi.to_json() })
            }
        }
    }
}

/// `χ_S(x) = Π_{i∈S} x_i` for the set `S` given by `mask`.
pub fn character(mask: u64, bits: u64) -> f64 {
    if (mask & !bits).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Leaf-routed node: a tree skeleton whose leaves hold sub-hypotheses.
#[derive(Clone, Debug)]
pub enum Routed {
    Leaf(Arc<Hypothesis>),
    Split {
        var: usize,
        lo: Box<Routed>,
        hi: Box<Routed>,
    },
}

impl Routed {
    fn eval_bits(&self, bits: u64) -> bool {
        match self {
            Routed::Leaf(h) => h.eval_bits(bits),
            Routed::Split { var, lo, hi } => {
                if bits >> var & 1 == 1 {
                    hi.eval_bits(bits)
                } else {
                    lo.eval_bits(bits)
                }
            }
        }
    }

    fn to_json(&self, n: usize) -> Value {
        match self {
            Routed::Leaf(h) => json!({ "hyp": h.to_json(n) }),
            Routed::Split { var, lo, hi } => {
                json!({ "var": var, "lo": lo.to_json(n), "hi": hi.to_json(n) })
            }
        }
    }
}

/// A boolean predictor on {-1,+1}^n.
#[derive(Clone, Debug)]
pub enum Hypothesis {
    Constant(bool),
    Tree(BoolTree),
    /// Predicts 1 iff `Σ c_S χ_S(x) > 0`.
    LowDegree { coefficients: Vec<(u64, f64)> },
    Table(TruthTable),
    Routed(Routed),
}

impl Hypothesis {
    pub fn eval_bits(&self, bits: u64) -> bool {
        match self {
            Hypothesis::Constant(b) => *b,
            Hypothesis::Tree(t) => t.eval_bits(bits),
            Hypothesis::LowDegree { coefficients } => {
                coefficients.iter().map(|&(m, c)| c * character(m, bits)).sum::<f64>() > 0.0
            }
            Hypothesis::Table(t) => t.eval_bits(bits),
            Hypothesis::Routed(r) => r.eval_bits(bits),
        }
    }

    pub fn predict(&self, x: &Point) -> bool {
        self.eval_bits(x.bits())
    }

    /// Stitches per-leaf hypotheses, given in [`DistTree::leaves`] order,
    /// onto the skeleton of `t`.
    pub fn routed(t: &DistTree, per_leaf: Vec<Hypothesis>) -> Hypothesis {
        fn build(node: &Node, it: &mut std::vec::IntoIter<Hypothesis>) -> Routed {
            match node {
                Node::Leaf { .. } => Routed::Leaf(Arc::new(it.next().expect("one hypothesis per leaf"))),
                Node::Split { var, lo, hi } => {
                    let lo = build(lo, it);
                    let hi = build(hi, it);
                    Routed::Split {
                        var: *var,
                        lo: Box::new(lo),
                        hi: Box::new(hi),
                    }
                }
            }
        }
        assert_eq!(per_leaf.len(), t.leaf_count(), "one hypothesis per leaf");
        let mut it = per_leaf.into_iter();
        Hypothesis::Routed(build(t.root(), &mut it))
    }

    /// Full truth table over `n` coordinates.
    pub fn table(&self, n: usize) -> Result<TruthTable> {
        TruthTable::from_fn(n, |x| self.predict(x))
    }

    /// JSON form. Routed hypotheses reuse the tree schema with
    /// `{"hyp": ...}` leaves; flat ones give their truth table when
    /// `n ≤ 16` and their parameters otherwise.
    pub fn to_json(&self, n: usize) -> Value {
        match self {
            Hypothesis::Routed(r) => json!({ "n": n, "root": r.to_json(n) }),
            flat if n <= TABLE_MAX_DIM => {
                let table: Vec<u8> = (0..1u64 << n).map(|b| u8::from(flat.eval_bits(b))).collect();
                json!({ "n": n, "table": table })
            }
            Hypothesis::Constant(b) => json!({ "n": n, "constant": u8::from(*b) }),
            Hypothesis::Tree(t) => json!({ "n": n, "tree": t.to_json() }),
            Hypothesis::LowDegree { coefficients } => {
                let coeffs: Vec<Value> = coefficients
                    .iter()
                    .map(|&(m, c)| {
                        let set: Vec<usize> = (0..64).filter(|i| m >> i & 1 == 1).collect();
                        json!({ "set": set, "coef": c })
                    })
                    .collect();
                json!({ "n": n, "coefficients": coeffs })
            }
            Hypothesis::Table(t) => json!({ "n": n, "table": t.table().iter().map(|&b| u8::from(b)).collect::<Vec<_>>() }),
        }
    }
}
