//! Weight vectors and aligned comparison instances.
//!
//! A [`WeightVector`] stores the weights of a quadratic form `Σ wᵢ ξᵢ²` sorted
//! nonincreasing, together with the permutation back to the caller's order.
//! A [`ComparisonInstance`] pairs two such vectors positionally (largest with
//! largest) and caches the per-index quantities every certificate rule reads:
//! `f(i) = 1/bᵢ − 1/aᵢ`, `ln(aᵢ/bᵢ)` and its prefix/suffix sums.
//!
//! All indices in this crate are zero-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used for algebraic identity checks.
pub const IDENTITY_RTOL: f64 = 1e-12;

/// Nonnegative weights in canonical (nonincreasing) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    weights: Vec<f64>,
    /// `perm[k]` is the position in the caller's input of canonical entry `k`.
    perm: Vec<usize>,
}

impl WeightVector {
    /// Canonicalizes `raw`. Zeros are allowed; an all-zero vector is not.
    pub fn new(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Empty);
        }
        for (index, &value) in raw.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        if raw.iter().all(|&w| w == 0.0) {
            return Err(Error::AllZero);
        }
        let mut perm: Vec<usize> = (0..raw.len()).collect();
        // Stable sort keeps ties in input order, so the result is a pure function of the multiset
        // of values up to which equal entry is recorded where.
        perm.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]));
        let weights = perm.iter().map(|&i| raw[i]).collect();
        Ok(Self { weights, perm })
    }

    /// Builds a vector that is already canonical; used for derived vectors (limits, candidates).
    pub(crate) fn from_canonical(weights: Vec<f64>) -> Result<Self> {
        Self::new(&weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weights in the caller's original order.
    pub fn original(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.weights.len()];
        for (k, &pos) in self.perm.iter().enumerate() {
            out[pos] = self.weights[k];
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.weights[0]
    }

    /// Number of strictly positive weights.
    pub fn positive_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    /// The strictly positive weights, still nonincreasing.
    pub fn positive_weights(&self) -> &[f64] {
        &self.weights[..self.positive_count()]
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    /// Same vector multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            weights: self.weights.iter().map(|w| w * c).collect(),
            perm: self.perm.clone(),
        }
    }
}

/// Two weight vectors paired positionally after independent canonicalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonInstance {
    a: WeightVector,
    b: WeightVector,
    f: Vec<f64>,
    log_ratio: Vec<f64>,
    /// `prefix[j] = Σ_{i<j} ln(aᵢ/bᵢ)`, length `n + 1`.
    prefix: Vec<f64>,
    /// `suffix[k] = Σ_{i≥k} ln(aᵢ/bᵢ)`, length `n + 1`.
    suffix: Vec<f64>,
    argmax_first: usize,
    argmax_last: usize,
}

impl ComparisonInstance {
    pub fn new(a_raw: &[f64], b_raw: &[f64]) -> Result<Self> {
        if a_raw.len() != b_raw.len() {
            return Err(Error::LengthMismatch {
                a: a_raw.len(),
                b: b_raw.len(),
            });
        }
        let a = WeightVector::new(a_raw)?;
        let b = WeightVector::new(b_raw)?;
        Ok(Self::from_vectors(a, b))
    }

    /// Pairs two canonical vectors of equal length.
    pub fn from_vectors(a: WeightVector, b: WeightVector) -> Self {
        assert_eq!(a.len(), b.len(), "paired vectors must have equal length");
        let n = a.len();
        let (aw, bw) = (a.weights(), b.weights());
        let f: Vec<f64> = aw.iter().zip(bw).map(|(&ai, &bi)| 1.0 / bi - 1.0 / ai).collect();
        let log_ratio: Vec<f64> = aw.iter().zip(bw).map(|(&ai, &bi)| (ai / bi).ln()).collect();

        let mut prefix = vec![0.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] + log_ratio[i];
        }
        let mut suffix = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] + log_ratio[i];
        }

        let fmax = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let argmax_first = f.iter().position(|&v| v == fmax).unwrap_or(0);
        let argmax_last = f.iter().rposition(|&v| v == fmax).unwrap_or(0);

        Self {
            a,
            b,
            f,
            log_ratio,
            prefix,
            suffix,
            argmax_first,
            argmax_last,
        }
    }

    pub fn a(&self) -> &WeightVector {
        &self.a
    }

    pub fn b(&self) -> &WeightVector {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    /// `f(i) = 1/bᵢ − 1/aᵢ`; may be negative.
    pub fn f_values(&self) -> &[f64] {
        &self.f
    }

    pub fn log_ratio(&self) -> &[f64] {
        &self.log_ratio
    }

    pub fn prefix_sums(&self) -> &[f64] {
        &self.prefix
    }

    pub fn suffix_sums(&self) -> &[f64] {
        &self.suffix
    }

    /// `Σ ln(aᵢ/bᵢ) = 2 ln D(a, b)`.
    pub fn two_ln_d(&self) -> f64 {
        self.suffix[0]
    }

    /// `Σ_{i≥k} ln(aᵢ/bᵢ)`; `k = 0` gives `2 ln D(a, b)`.
    pub fn log_ratio_sums(&self, k: usize) -> Result<f64> {
        self.check_index(k)?;
        Ok(self.suffix[k])
    }

    pub fn max_f(&self) -> f64 {
        self.f[self.argmax_first]
    }

    pub fn argmax_first(&self) -> usize {
        self.argmax_first
    }

    pub fn argmax_last(&self) -> usize {
        self.argmax_last
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.a.is_strictly_positive() && self.b.is_strictly_positive()
    }

    /// Fails with [`Error::ZeroWeight`] unless every entry of both vectors is positive.
    pub fn require_positive(&self) -> Result<()> {
        for v in [&self.a, &self.b] {
            if let Some(index) = v.weights().iter().position(|&w| w <= 0.0) {
                return Err(Error::ZeroWeight { index });
            }
        }
        Ok(())
    }

    pub fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.n() {
            Err(Error::IndexOutOfRange { index: k, n: self.n() })
        } else {
            Ok(())
        }
    }

    /// The instance comparing `b` against `a`.
    pub fn swapped(&self) -> Self {
        Self::from_vectors(self.b.clone(), self.a.clone())
    }

    /// `f` is nondecreasing in the positional pairing.
    pub fn f_nondecreasing(&self) -> bool {
        self.f.windows(2).all(|w| w[0] <= w[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(x: f64, y: f64, tol: f64) -> bool {
        (x - y).abs() <= tol
    }

    #[test]
    fn canonicalizes_and_computes_f() {
        let inst = ComparisonInstance::new(&[1.0, 4.0], &[1.0, 1.0]).unwrap();
        assert_eq!(inst.a().weights(), &[4.0, 1.0]);
        assert_eq!(inst.f_values(), &[0.75, 0.0]);
        assert_eq!(inst.a().original(), vec![1.0, 4.0]);
    }

    #[test]
    fn identity_instance() {
        let inst = ComparisonInstance::new(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(inst.f_values(), &[0.0, 0.0]);
        assert_eq!(inst.two_ln_d(), 0.0);
        assert_eq!(inst.log_ratio_sums(1).unwrap(), 0.0);
    }

    #[test]
    fn example_two_log_ratios() {
        let inst = ComparisonInstance::new(&[1.0, 1.0, 1.0], &[1.2, 0.5, 0.4]).unwrap();
        let lr = inst.log_ratio();
        assert!(close(lr[0], -0.182322, 1e-6));
        assert!(close(lr[1], 0.693147, 1e-6));
        assert!(close(lr[2], 0.916291, 1e-6));
        assert!(close(inst.two_ln_d(), 1.427116, 1e-6));
        assert!(close(inst.log_ratio_sums(1).unwrap(), 1.609438, 1e-6));
        let f = inst.f_values();
        assert!(close(f[0], -1.0 / 6.0, 1e-12));
        assert!(close(f[1], 1.0, 1e-12));
        assert!(close(f[2], 1.5, 1e-12));
        assert_eq!(inst.argmax_first(), 2);
        assert!(inst.f_nondecreasing());
    }

    #[test]
    fn log_ratio_sum_of_first_example() {
        let inst = ComparisonInstance::new(&[4.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!(close(inst.log_ratio_sums(0).unwrap(), 4f64.ln(), 1e-15));
        assert_eq!(
            inst.log_ratio_sums(2),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            ComparisonInstance::new(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { a: 1, b: 2 })
        );
        assert!(matches!(
            WeightVector::new(&[1.0, -0.5]),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
        assert_eq!(WeightVector::new(&[0.0, 0.0]), Err(Error::AllZero));
        assert!(WeightVector::new(&[f64::NAN]).is_err());
        assert_eq!(WeightVector::new(&[]), Err(Error::Empty));
    }

    #[test]
    fn zeros_allowed_but_flagged() {
        let inst = ComparisonInstance::new(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!(!inst.is_strictly_positive());
        assert_eq!(inst.require_positive(), Err(Error::ZeroWeight { index: 1 }));
    }

    #[test]
    fn argmax_first_and_last() {
        let inst = ComparisonInstance::new(&[2.0, 2.0, 1.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(inst.argmax_first(), 0);
        assert_eq!(inst.argmax_last(), 1);
    }
}
