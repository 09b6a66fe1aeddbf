//! Product-preserving balancing of adjacent coordinates and the limits it converges to.
//!
//! A step on side A replaces `(aᵢ, aᵢ₊₁)` by the pair with the same product that makes
//! `f(i) = f(i+1)`; side B does the same to `b`. Each step is a pair swap in the sense of
//! [`pair_swap_applicable`](crate::certificates::pair_swap_applicable), so
//! `β(x, a) ≤ β(x, a')` (side A) and `β(x, b') ≤ β(x, b)` (side B) for every `x`.
//!
//! Repeating steps until `f` is nondecreasing converges to a vector with piecewise constant `f`,
//! computed directly by [`balance_limit`]: the last flat segment starts at the first maximizer of
//! the suffix level (`T(k)` or `D(k)`), and the prefix before it is handled recursively.

use serde::{Deserialize, Serialize};

use crate::certificates::{d_level, first_argmax, log_sum, prop1, t_level, Certificate};
use crate::error::{Error, Result};
use crate::model::{ComparisonInstance, WeightVector, IDENTITY_RTOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceSide {
    A,
    B,
}

/// One elementary balancing step on positions `i, i + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceStep {
    pub i: usize,
    pub side: BalanceSide,
    /// `4 (1/(aᵢaᵢ₊₁) − 1/(bᵢbᵢ₊₁))`.
    pub z: f64,
    /// Common value of `f(i)` and `f(i + 1)` after the step.
    pub f_new: f64,
    pub before: (f64, f64),
    pub after: (f64, f64),
}

/// A maximal run of equal `f` in a balancing limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    /// One past the last index.
    pub end: usize,
    pub level: f64,
    /// `Π` of the balanced side over the segment, before and after.
    pub product_before: f64,
    pub product_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformTrace {
    pub side: BalanceSide,
    /// Elementary steps; empty when the limit was computed in closed form.
    pub steps: Vec<BalanceStep>,
    /// Segments from left to right; empty for a step-by-step trace.
    pub segments: Vec<Segment>,
    /// The balanced vector in canonical position order.
    pub limit: Vec<f64>,
    /// Start of the last flat segment.
    pub k_star: usize,
}

impl TransformTrace {
    /// The instance with the balanced side replaced by the limit.
    pub fn instance(&self, inst: &ComparisonInstance) -> Result<ComparisonInstance> {
        let limit = WeightVector::from_canonical(self.limit.clone())?;
        Ok(match self.side {
            BalanceSide::A => ComparisonInstance::from_vectors(limit, inst.b().clone()),
            BalanceSide::B => ComparisonInstance::from_vectors(inst.a().clone(), limit),
        })
    }
}

/// Positive root pair `(p, q)` of `p q = prod`, `q − p = w ≥ 0`.
fn gap_pair(prod: f64, w: f64) -> (f64, f64) {
    let s = (w * w + 4.0 * prod).sqrt();
    let p = 2.0 * prod / (w + s);
    (p, 0.5 * (w + s))
}

fn check_monotone(v: &[f64]) -> Result<()> {
    match v.windows(2).position(|w| w[1] > w[0]) {
        Some(i) => Err(Error::NonMonotoneResult(i + 1)),
        None => Ok(()),
    }
}

/// Balances positions `i, i + 1` of the raw canonical vectors in place.
fn balance_in_place(a: &mut [f64], b: &mut [f64], i: usize, side: BalanceSide) -> Result<BalanceStep> {
    let f_i = 1.0 / b[i] - 1.0 / a[i];
    let f_j = 1.0 / b[i + 1] - 1.0 / a[i + 1];
    if !(f_j < f_i) {
        return Err(Error::NotApplicable(format!(
            "f({}) = {f_j} is not below f({i}) = {f_i}",
            i + 1
        )));
    }
    let z = 4.0 * (1.0 / (a[i] * a[i + 1]) - 1.0 / (b[i] * b[i + 1]));
    let step = match side {
        BalanceSide::A => {
            // New aᵢ = 1/p, aᵢ₊₁ = 1/q with p = 1/bᵢ − f⁺, q = 1/bᵢ₊₁ − f⁺.
            let before = (a[i], a[i + 1]);
            let (p, q) = gap_pair(1.0 / (a[i] * a[i + 1]), 1.0 / b[i + 1] - 1.0 / b[i]);
            a[i] = 1.0 / p;
            a[i + 1] = 1.0 / q;
            BalanceStep {
                i,
                side,
                z,
                f_new: 1.0 / b[i] - p,
                before,
                after: (a[i], a[i + 1]),
            }
        }
        BalanceSide::B => {
            // New bᵢ = 1/r, bᵢ₊₁ = 1/s with r = 1/aᵢ + f⁺, s = 1/aᵢ₊₁ + f⁺.
            let before = (b[i], b[i + 1]);
            let (r, s) = gap_pair(1.0 / (b[i] * b[i + 1]), 1.0 / a[i + 1] - 1.0 / a[i]);
            b[i] = 1.0 / r;
            b[i + 1] = 1.0 / s;
            BalanceStep {
                i,
                side,
                z,
                f_new: r - 1.0 / a[i],
                before,
                after: (b[i], b[i + 1]),
            }
        }
    };
    Ok(step)
}

/// One balancing step at zero-based `i`; returns the updated instance and the step record.
pub fn balance_pair(
    inst: &ComparisonInstance,
    i: usize,
    side: BalanceSide,
) -> Result<(ComparisonInstance, BalanceStep)> {
    inst.require_positive()?;
    if i + 1 >= inst.n() {
        return Err(Error::IndexOutOfRange {
            index: i + 1,
            n: inst.n(),
        });
    }
    let mut a = inst.a().weights().to_vec();
    let mut b = inst.b().weights().to_vec();
    let step = balance_in_place(&mut a, &mut b, i, side)?;
    // A side-B step raises bᵢ and may overtake bᵢ₋₁, which would change the pairing.
    match side {
        BalanceSide::A => check_monotone(&a)?,
        BalanceSide::B => check_monotone(&b)?,
    }
    let next = ComparisonInstance::from_vectors(
        WeightVector::from_canonical(a)?,
        WeightVector::from_canonical(b)?,
    );
    Ok((next, step))
}

/// The limit of repeated balancing on one side, by recursive segmentation.
pub fn balance_limit(inst: &ComparisonInstance, side: BalanceSide) -> Result<TransformTrace> {
    inst.require_positive()?;
    let (a, b, lr) = (inst.a().weights(), inst.b().weights(), inst.log_ratio());
    let mut out = match side {
        BalanceSide::A => a.to_vec(),
        BalanceSide::B => b.to_vec(),
    };
    let mut segments = Vec::new();
    let mut end = inst.n();
    while end > 0 {
        let level_of = |k: usize| match side {
            BalanceSide::A => t_level(&a[k..end], &b[k..end], &lr[k..end]),
            BalanceSide::B => d_level(&a[k..end], &b[k..end], &lr[k..end]),
        };
        let levels: Vec<_> = (0..end).map(level_of).collect();
        let values: Vec<f64> = levels.iter().map(|l| l.value).collect();
        let start = first_argmax(&values);
        let root = levels[start];
        let product_before: f64 = out[start..end].iter().product();
        match side {
            BalanceSide::A => {
                let pole = 1.0 / b[start..end].iter().copied().fold(0.0, f64::max);
                for i in start..end {
                    out[i] = 1.0 / ((1.0 / b[i] - pole) + root.gap);
                }
            }
            BalanceSide::B => {
                let pole = 1.0 / a[start..end].iter().copied().fold(0.0, f64::max);
                for i in start..end {
                    out[i] = 1.0 / ((1.0 / a[i] - pole) + root.gap);
                }
            }
        }
        segments.push(Segment {
            start,
            end,
            level: root.value,
            product_before,
            product_after: out[start..end].iter().product(),
        });
        end = start;
    }
    segments.reverse();
    check_monotone(&out)?;
    let k_star = segments.last().map_or(0, |s| s.start);
    Ok(TransformTrace {
        side,
        steps: Vec::new(),
        segments,
        limit: out,
        k_star,
    })
}

/// Repeats [`balance_pair`] in forward sweeps until no coordinate moves by more than `tol`
/// (relative) or `max_sweeps` is reached. Used to check [`balance_limit`]. Positions stay paired
/// throughout; only the final vector is required to be nonincreasing.
pub fn iterate_balance(
    inst: &ComparisonInstance,
    side: BalanceSide,
    max_sweeps: usize,
    tol: f64,
) -> Result<(TransformTrace, bool)> {
    inst.require_positive()?;
    let mut a = inst.a().weights().to_vec();
    let mut b = inst.b().weights().to_vec();
    let n = a.len();
    let mut steps = Vec::new();
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut moved: f64 = 0.0;
        for i in 0..n.saturating_sub(1) {
            let f_i = 1.0 / b[i] - 1.0 / a[i];
            let f_j = 1.0 / b[i + 1] - 1.0 / a[i + 1];
            if f_j < f_i {
                let s = balance_in_place(&mut a, &mut b, i, side)?;
                moved = moved
                    .max(((s.after.0 - s.before.0) / s.before.0).abs())
                    .max(((s.after.1 - s.before.1) / s.before.1).abs());
                steps.push(s);
            }
        }
        if moved <= tol {
            converged = true;
            break;
        }
    }
    let limit = match side {
        BalanceSide::A => a,
        BalanceSide::B => b,
    };
    let f: Vec<f64> = match side {
        BalanceSide::A => inst.b().weights().iter().zip(&limit).map(|(bi, ai)| 1.0 / bi - 1.0 / ai).collect(),
        BalanceSide::B => limit.iter().zip(inst.a().weights()).map(|(bi, ai)| 1.0 / bi - 1.0 / ai).collect(),
    };
    check_monotone(&limit)?;
    let k_star = first_argmax(&f);
    Ok((
        TransformTrace {
            side,
            steps,
            segments: Vec::new(),
            limit,
            k_star,
        },
        converged,
    ))
}

/// Pairs sorted `a` with sorted `b`; `None` when the resulting `f` is not nondecreasing.
pub fn reorder_for_increasing_f(a_raw: &[f64], b_raw: &[f64]) -> Result<Option<ComparisonInstance>> {
    let inst = ComparisonInstance::new(a_raw, b_raw)?;
    inst.require_positive()?;
    Ok(inst.f_nondecreasing().then_some(inst))
}

/// One move of the chain: the flat suffix of `f(·, a, b')` is lowered to the next value of `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    /// First index of the flat suffix before the move.
    pub t1: usize,
    pub eps: f64,
    /// Flat level after the move.
    pub d: f64,
    pub b_prime: Vec<f64>,
    /// `(1/d) Σ ln(aᵢ/b'ᵢ)`.
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub initial_d: f64,
    pub initial_g: f64,
    pub steps: Vec<ChainStep>,
    /// First index of the final flat suffix.
    pub t_final: usize,
    pub d: f64,
    pub g: f64,
    pub b_prime: Vec<f64>,
}

fn chain_g(a: &[f64], b_prime: &[f64], d: f64) -> f64 {
    let lr: Vec<f64> = a.iter().zip(b_prime).map(|(&ai, &bi)| (ai / bi).ln()).collect();
    log_sum(&lr) / d
}

/// First index of the run of values equal to `f[k]` that ends at `k`.
fn run_start(f: &[f64], mut k: usize) -> usize {
    while k > 0 && f[k - 1] == f[k] {
        k -= 1;
    }
    k
}

/// Raises `b` on the flat suffix of `f` (lowering `1/bᵢ` by `ε`) while the log-ratio sum before
/// the suffix stays nonnegative, so that each `b' ≥ b` and `G` never decreases.
pub fn theorem2_chain(inst: &ComparisonInstance) -> Result<ChainTrace> {
    inst.require_positive()?;
    if !inst.f_nondecreasing() {
        return Err(Error::NotApplicable("f is not nondecreasing under the sorted pairing".into()));
    }
    let n = inst.n();
    let a = inst.a().weights();
    let f = inst.f_values();
    let p = inst.prefix_sums();
    let mut d = f[n - 1];
    if d <= 0.0 {
        return Err(Error::NotApplicable(format!("max f = {d} ≤ 0")));
    }
    let mut b_prime = inst.b().weights().to_vec();
    let initial_g = chain_g(a, &b_prime, d);
    let mut t1 = run_start(f, n - 1);
    let mut steps = Vec::new();
    while t1 > 0 && p[t1] >= 0.0 && f[t1 - 1] > 0.0 {
        let next = f[t1 - 1];
        let eps = d - next;
        d = next;
        let from = t1;
        t1 = run_start(f, t1 - 1);
        for i in t1..n {
            b_prime[i] = 1.0 / (1.0 / a[i] + d);
        }
        steps.push(ChainStep {
            t1: from,
            eps,
            d,
            b_prime: b_prime.clone(),
            g: chain_g(a, &b_prime, d),
        });
    }
    Ok(ChainTrace {
        initial_d: f[n - 1],
        initial_g,
        g: chain_g(a, &b_prime, d),
        steps,
        t_final: t1,
        d,
        b_prime,
    })
}

/// Prop. 1 certificates with auxiliary `d = b'` taken from [`theorem2_chain`].
pub fn auxiliary_candidates(inst: &ComparisonInstance) -> Vec<Certificate> {
    let Ok(chain) = theorem2_chain(inst) else {
        return Vec::new();
    };
    if chain.steps.is_empty() {
        return Vec::new();
    }
    match prop1(inst, None, Some(&chain.b_prime)) {
        Ok(c) => vec![c.with_note("auxiliary d from the flat-suffix chain")],
        Err(_) => Vec::new(),
    }
}

/// `|Π after / Π before − 1|` over every segment.
pub fn max_product_drift(trace: &TransformTrace) -> f64 {
    trace
        .segments
        .iter()
        .map(|s| (s.product_after / s.product_before - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Whether every step kept its pair product within `IDENTITY_RTOL` relative.
pub fn steps_preserve_products(trace: &TransformTrace) -> bool {
    trace.steps.iter().all(|s| {
        let before = s.before.0 * s.before.1;
        let after = s.after.0 * s.after.1;
        ((after - before) / before).abs() <= 4.0 * IDENTITY_RTOL
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(a: &[f64], b: &[f64]) -> ComparisonInstance {
        ComparisonInstance::new(a, b).unwrap()
    }

    #[test]
    fn side_a_first_example() {
        let (next, step) = balance_pair(&inst(&[4.0, 1.0], &[1.0, 1.0]), 0, BalanceSide::A).unwrap();
        assert_eq!(next.a().weights(), &[2.0, 2.0]);
        assert_eq!(step.f_new, 0.5);
    }

    #[test]
    fn side_b_matches_closed_form() {
        let i = inst(&[4.0, 1.0], &[1.0, 1.0]);
        let (next, step) = balance_pair(&i, 0, BalanceSide::B).unwrap();
        let (ia, ib) = (0.25, 1.0);
        let printed = 0.5 * (((ia + ib) * (ia + ib) - step.z).sqrt() - ia - ib);
        assert_eq!(step.z, -3.0);
        assert!((step.f_new - printed).abs() < 1e-15);
        assert!((step.f_new - 0.443_000).abs() < 1e-6);
        let b = next.b().weights();
        assert!((b[0] - 1.443_000).abs() < 1e-6 && (b[1] - 0.693_001).abs() < 1e-6);
        assert!((b[0] * b[1] - 1.0).abs() < 1e-15);
        let f = next.f_values();
        assert!((f[0] - f[1]).abs() < 1e-15);
    }

    #[test]
    fn balancing_needs_a_violation() {
        let i = inst(&[1.0, 1.0], &[1.0, 1.0]);
        assert!(matches!(balance_pair(&i, 0, BalanceSide::A), Err(Error::NotApplicable(_))));
        assert!(matches!(balance_pair(&i, 1, BalanceSide::A), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn limits_of_first_example() {
        let i = inst(&[4.0, 1.0], &[1.0, 1.0]);
        let t = balance_limit(&i, BalanceSide::A).unwrap();
        assert_eq!(t.k_star, 0);
        assert!((t.limit[0] - 2.0).abs() < 1e-15 && (t.limit[1] - 2.0).abs() < 1e-15);
        let t = balance_limit(&i, BalanceSide::B).unwrap();
        assert!((t.limit[0] - 1.443_000).abs() < 1e-6 && (t.limit[1] - 0.693_001).abs() < 1e-6);
        assert!(max_product_drift(&t) < 1e-10);
    }

    #[test]
    fn equal_vectors_are_fixed() {
        let i = inst(&[3.0, 2.0, 1.0], &[3.0, 2.0, 1.0]);
        for side in [BalanceSide::A, BalanceSide::B] {
            let t = balance_limit(&i, side).unwrap();
            assert_eq!(t.limit, vec![3.0, 2.0, 1.0]);
            let (it, converged) = iterate_balance(&i, side, 10, 1e-12).unwrap();
            assert!(converged && it.steps.is_empty());
        }
    }

    #[test]
    fn iteration_reaches_the_limit() {
        let i = inst(&[8.793, 3.39, 3.24, 0.87, 0.614, 0.394], &[8.493, 3.083, 2.744, 2.172, 0.457, 0.258]);
        for side in [BalanceSide::A, BalanceSide::B] {
            let lim = balance_limit(&i, side).unwrap();
            let (it, converged) = iterate_balance(&i, side, 1_000_000, 1e-15).unwrap();
            assert!(converged);
            assert!(steps_preserve_products(&it));
            for (x, y) in lim.limit.iter().zip(&it.limit) {
                assert!((x / y - 1.0).abs() < 1e-8, "{side:?}: {:?} vs {:?}", lim.limit, it.limit);
            }
        }
    }

    #[test]
    fn reorder_examples() {
        let r = reorder_for_increasing_f(&[1.0, 1.0, 1.0], &[0.4, 1.2, 0.5]).unwrap().unwrap();
        assert_eq!(r.b().weights(), &[1.2, 0.5, 0.4]);
        assert!(reorder_for_increasing_f(&[2.0, 1.0], &[2.0, 1.0]).unwrap().is_some());
        assert!(reorder_for_increasing_f(&[4.0, 1.0], &[1.0, 1.0]).unwrap().is_none());
    }

    #[test]
    fn chain_of_second_example() {
        let c = theorem2_chain(&inst(&[1.0, 1.0, 1.0], &[1.2, 0.5, 0.4])).unwrap();
        assert_eq!(c.steps.len(), 1);
        let s = &c.steps[0];
        assert_eq!(s.t1, 2);
        assert!((s.eps - 0.5).abs() < 1e-15);
        assert_eq!(s.b_prime, vec![1.2, 0.5, 0.5]);
        assert_eq!(c.d, 1.0);
        assert!((c.g - 1.203_973).abs() < 1e-6);
        assert!(c.g >= c.initial_g);
    }

    #[test]
    fn chain_without_moves() {
        let c = theorem2_chain(&inst(&[2.0, 2.0], &[1.0, 1.0])).unwrap();
        assert!(c.steps.is_empty());
        let c = theorem2_chain(&inst(&[1.0, 1.0], &[0.5, 0.5])).unwrap();
        assert!(c.steps.is_empty());
        assert!((c.g - 1.386_294).abs() < 1e-6);
    }

    #[test]
    fn candidates_reproduce_the_chain_threshold() {
        let i = inst(&[1.0, 1.0, 1.0], &[1.2, 0.5, 0.4]);
        let c = auxiliary_candidates(&i);
        assert_eq!(c.len(), 1);
        match c[0].region {
            Some(crate::certificates::Region::AtMost(x)) => assert!((x - 1.203_973).abs() < 1e-6),
            ref r => panic!("{r:?}"),
        }
    }
}
