//! Numerical evaluation of `β(x, w) = P(Σ wᵢ ξᵢ² < x)` for independent standard normal `ξᵢ`.
//!
//! Two independent routes are provided: characteristic-function inversion with an explicit error
//! bound ([`beta_cdf_inversion`]) and seeded Monte Carlo ([`beta_cdf_mc`], [`EmpiricalCdf`]).
//! [`compare_at`] turns a pair of estimates into an ordering verdict that only commits when the
//! error intervals are disjoint.

mod inversion;
mod monte_carlo;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::WeightVector;

pub use inversion::beta_cdf_inversion;
pub use monte_carlo::{beta_cdf_mc, beta_cdf_mc_sigmas, EmpiricalCdf, MC_CHUNK, MC_SIGMAS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdfMethod {
    Inversion,
    MonteCarlo,
}

/// A CDF value with an absolute error bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfEstimate {
    pub x: f64,
    pub value: f64,
    /// Truncation plus quadrature bound for inversion; `sigmas` standard errors for Monte Carlo.
    pub error_bound: f64,
    pub method: CdfMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<f64>,
}

impl CdfEstimate {
    pub(crate) fn exact(x: f64, value: f64, method: CdfMethod) -> Self {
        Self {
            x,
            value,
            error_bound: 0.0,
            method,
            n_samples: None,
            seed: None,
            sigmas: None,
        }
    }

    pub fn lower(&self) -> f64 {
        self.value - self.error_bound
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error_bound
    }
}

/// How [`compare_at`] evaluates the two CDFs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleMethod {
    Inversion { tol: f64 },
    /// Both vectors use the same seed (common random numbers).
    MonteCarlo { samples: u64, seed: u64, sigmas: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// `β(x, a) < β(x, b)` beyond both error bounds.
    OrderedAB,
    /// `β(x, a) > β(x, b)` beyond both error bounds.
    OrderedBA,
    Indistinguishable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub verdict: Verdict,
    pub a: CdfEstimate,
    pub b: CdfEstimate,
}

pub fn verdict_of(a: &CdfEstimate, b: &CdfEstimate) -> Verdict {
    if a.upper() < b.lower() {
        Verdict::OrderedAB
    } else if b.upper() < a.lower() {
        Verdict::OrderedBA
    } else {
        Verdict::Indistinguishable
    }
}

pub fn beta_cdf(w: &WeightVector, x: f64, method: OracleMethod) -> Result<CdfEstimate> {
    match method {
        OracleMethod::Inversion { tol } => beta_cdf_inversion(w, x, tol),
        OracleMethod::MonteCarlo {
            samples,
            seed,
            sigmas,
        } => beta_cdf_mc_sigmas(w, x, samples, seed, sigmas),
    }
}

/// Evaluates both CDFs at `x` and classifies their order.
pub fn compare_at(
    a: &WeightVector,
    b: &WeightVector,
    x: f64,
    method: OracleMethod,
) -> Result<Comparison> {
    let ea = beta_cdf(a, x, method)?;
    let eb = beta_cdf(b, x, method)?;
    Ok(Comparison {
        verdict: verdict_of(&ea, &eb),
        a: ea,
        b: eb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wv(w: &[f64]) -> WeightVector {
        WeightVector::new(w).unwrap()
    }

    const INV: OracleMethod = OracleMethod::Inversion { tol: 1e-9 };

    #[test]
    fn dominated_pair_is_ordered() {
        let c = compare_at(&wv(&[4.0, 1.0]), &wv(&[1.0, 1.0]), 1.0, INV).unwrap();
        assert_eq!(c.verdict, Verdict::OrderedAB);
    }

    #[test]
    fn equal_vectors_are_indistinguishable() {
        for method in [
            INV,
            OracleMethod::MonteCarlo {
                samples: 20_000,
                seed: 3,
                sigmas: 3.0,
            },
        ] {
            let c = compare_at(&wv(&[2.0, 0.5]), &wv(&[0.5, 2.0]), 1.7, method).unwrap();
            assert_eq!(c.verdict, Verdict::Indistinguishable);
        }
    }

    #[test]
    fn reversal_when_max_is_smaller() {
        let c = compare_at(&wv(&[0.5, 0.5]), &wv(&[1.0, 0.0]), 5.0, INV).unwrap();
        assert_eq!(c.verdict, Verdict::OrderedBA);
        assert!((c.a.value - 0.993262).abs() < 1e-6);
        assert!((c.b.value - 0.974653).abs() < 1e-6);
    }
}
