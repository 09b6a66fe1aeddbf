//! Certificates for pointwise ordering of Gaussian quadratic form distributions.
//!
//! For weights `a, b ∈ ℝ₊ⁿ` and independent standard normal `ξᵢ`, the crate decides on which
//! `x` the inequality `P(Σ aᵢξᵢ² < x) ≤ P(Σ bᵢξᵢ² < x)` is guaranteed by a checkable sufficient
//! condition, and cross-checks every such guarantee against a numerical CDF oracle.

pub mod certificates;
pub mod cli;
pub mod error;
pub mod model;
pub mod oracle;
pub mod roots;
pub mod transforms;

pub use error::{Error, Result};
pub use model::{ComparisonInstance, WeightVector};
