//! Learning distributions over {-1,+1}^n that are representable by
//! depth-d decision trees, estimating distributional influences, and
//! lifting uniform-distribution learners to such distributions.
//!
//! Points use the convention that bit `i` set means `x_i = +1`.

pub mod builddt;
pub mod cli;
pub mod cube;
pub mod dense;
pub mod error;
pub mod influence;
pub mod json;
pub mod lift;
pub mod oracle;
pub mod seed;
pub mod testbed;
pub mod tree;

pub use builddt::{learn_distribution, learn_with_plan, LearnPlan, Learned};
pub use cube::{Point, Restriction, Sign, Subcube};
pub use dense::{tv_distance, DensePmf};
pub use error::{Error, Result};
pub use influence::InfluenceKind;
pub use oracle::{AccessMode, DistOracle};
pub use tree::{DistTree, Node};
