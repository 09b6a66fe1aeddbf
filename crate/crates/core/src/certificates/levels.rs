//! The suffix levels `T(k)` and `D(k)`.
//!
//! `T(k)` solves `Σ_{i≥k} [ln(aᵢ/bᵢ) + ln(1 − T bᵢ)] = 0` on `(−∞, 1/max b)` and `D(k)` solves
//! `Σ_{i≥k} [ln(aᵢ/bᵢ) − ln(1 + D aᵢ)] = 0` on `(−1/max a, ∞)`. Both are means of the suffix
//! `f` values: each term vanishes at `T = f(i)` (resp. `D = f(i)`).
//!
//! The equations are solved in the distance to the pole, `g = 1/max b − T` and
//! `h = D + 1/max a`, where the per-term logarithms `ln(aᵢ(1/bᵢ − 1/max b + g))` keep full
//! relative precision even when the root is close to the pole. When the root is small relative to
//! the pole distance it is re-solved directly in `T` (resp. `D`) with `ln_1p`, which keeps its sign
//! equal to the sign of the log-ratio sum.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::ComparisonInstance;
use crate::roots::{bisect_bracket, bisect_increasing};

/// Relative slack used when comparing levels for ties.
pub const LEVEL_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub k: usize,
    pub value: f64,
    /// `1/max b − T` for `T`, `D + 1/max a` for `D`, over the suffix.
    pub gap: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
}

/// A root over an arbitrary index range, before it is tagged with `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Level {
    pub value: f64,
    pub gap: f64,
    pub residual: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Level {
    fn tagged(self, k: usize) -> RootResult {
        RootResult {
            k,
            value: self.value,
            gap: self.gap,
            residual: self.residual,
            bracket: (self.lo, self.hi),
        }
    }
}

/// Sum in the same order as the instance's suffix sums, so signs agree exactly.
pub(crate) fn log_sum(lr: &[f64]) -> f64 {
    lr.iter().rev().fold(0.0, |s, &x| s + x)
}

fn fmax(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Solves an equation whose left side `F` is strictly decreasing in the level.
///
/// `pole` is the pole distance scale (`1/max b` or `1/max a`), `on_gap` the equation written as an
/// increasing function of the gap, `direct` the decreasing equation in the level itself, and
/// `to_level`/`to_gap` convert between the two.
fn solve(
    s: f64,
    pole: f64,
    on_gap: impl Fn(f64) -> f64,
    direct: impl Fn(f64) -> f64,
    to_level: impl Fn(f64) -> f64,
    to_gap: impl Fn(f64) -> f64,
) -> Level {
    if s == 0.0 {
        return Level {
            value: 0.0,
            gap: pole,
            residual: 0.0,
            lo: 0.0,
            hi: 0.0,
        };
    }
    let far = bisect_increasing(&on_gap, pole).expect("level equation always changes sign");
    let value = to_level(far.root);
    if value.abs() >= 0.25 * pole {
        let (a, b) = (to_level(far.lo), to_level(far.hi));
        return Level {
            value,
            gap: far.root,
            residual: far.residual,
            lo: a.min(b),
            hi: a.max(b),
        };
    }

    // |level| < pole/4: bracket between 0 and ±pole/2 and solve directly.
    let phi = |t: f64| -direct(t);
    let (lo, hi) = if s > 0.0 { (0.0, 0.5 * pole) } else { (-0.5 * pole, 0.0) };
    let near = bisect_bracket(phi, lo, hi, phi(lo), phi(hi), far.iterations);
    let mut value = near.root;
    if value == 0.0 || (value > 0.0) != (s > 0.0) {
        value = if s > 0.0 { near.hi } else { near.lo };
    }
    Level {
        value,
        gap: to_gap(value),
        residual: direct(value).abs(),
        lo: near.lo,
        hi: near.hi,
    }
}

/// `T` over the index range covered by the slices.
pub(crate) fn t_level(a: &[f64], b: &[f64], lr: &[f64]) -> Level {
    let s = log_sum(lr);
    let bmax = fmax(b);
    let pole = 1.0 / bmax;
    let delta: Vec<f64> = b.iter().map(|&bi| 1.0 / bi - pole).collect();
    let on_gap = |g: f64| -> f64 {
        a.iter()
            .zip(&delta)
            .map(|(&ai, &di)| (ai * (di + g)).ln())
            .sum()
    };
    let direct = |t: f64| -> f64 {
        lr.iter()
            .zip(b)
            .map(|(&l, &bi)| l + (-t * bi).ln_1p())
            .sum()
    };
    solve(s, pole, on_gap, direct, |g| pole - g, |t| pole - t)
}

/// `D` over the index range covered by the slices.
pub(crate) fn d_level(a: &[f64], b: &[f64], lr: &[f64]) -> Level {
    let s = log_sum(lr);
    let amax = fmax(a);
    let pole = 1.0 / amax;
    let eps: Vec<f64> = a.iter().map(|&ai| 1.0 / ai - pole).collect();
    let on_gap = |h: f64| -> f64 {
        b.iter()
            .zip(&eps)
            .map(|(&bi, &ei)| (bi * (ei + h)).ln())
            .sum()
    };
    let direct = |d: f64| -> f64 {
        lr.iter()
            .zip(a)
            .map(|(&l, &ai)| l - (d * ai).ln_1p())
            .sum()
    };
    solve(s, pole, on_gap, direct, |h| h - pole, |d| d + pole)
}

/// `T(k, a, b)`; `k` is zero-based.
pub fn t_root(inst: &ComparisonInstance, k: usize) -> Result<RootResult> {
    inst.check_index(k)?;
    inst.require_positive()?;
    let (a, b, lr) = (inst.a().weights(), inst.b().weights(), inst.log_ratio());
    Ok(t_level(&a[k..], &b[k..], &lr[k..]).tagged(k))
}

/// `D(k, a, b)`; `k` is zero-based.
pub fn d_root(inst: &ComparisonInstance, k: usize) -> Result<RootResult> {
    inst.check_index(k)?;
    inst.require_positive()?;
    let (a, b, lr) = (inst.a().weights(), inst.b().weights(), inst.log_ratio());
    Ok(d_level(&a[k..], &b[k..], &lr[k..]).tagged(k))
}

/// `T(k)` for every `k`.
pub fn t_roots(inst: &ComparisonInstance) -> Result<Vec<RootResult>> {
    (0..inst.n()).map(|k| t_root(inst, k)).collect()
}

/// `D(k)` for every `k`.
pub fn d_roots(inst: &ComparisonInstance) -> Result<Vec<RootResult>> {
    (0..inst.n()).map(|k| d_root(inst, k)).collect()
}

/// First index whose value is within [`LEVEL_RTOL`] of the maximum.
pub(crate) fn first_argmax(values: &[f64]) -> usize {
    let m = fmax(values);
    let slack = LEVEL_RTOL * m.abs().max(f64::MIN_POSITIVE);
    values.iter().position(|&v| v >= m - slack).unwrap_or(0)
}

/// Start of the flat suffix in the a-side balancing limit: the first `k` maximizing `T(k)`.
pub fn t_start_index(inst: &ComparisonInstance) -> Result<usize> {
    let v: Vec<f64> = t_roots(inst)?.iter().map(|r| r.value).collect();
    Ok(first_argmax(&v))
}

/// Start of the flat suffix in the b-side balancing limit: the first `k` maximizing `D(k)`.
pub fn d_start_index(inst: &ComparisonInstance) -> Result<usize> {
    let v: Vec<f64> = d_roots(inst)?.iter().map(|r| r.value).collect();
    Ok(first_argmax(&v))
}

/// Jensen-type bounds on the suffix levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenBounds {
    /// `m (1 − (Π bᵢ/aᵢ)^{1/m}) / Σ bᵢ` over the suffix of length `m`.
    pub t_upper: f64,
    /// `Σ ln(aᵢ/bᵢ) / Σ bᵢ`.
    pub t_upper_loose: f64,
    /// `Σ ln(aᵢ/bᵢ) / Σ aᵢ`.
    pub d_lower: f64,
}

pub fn jensen_bounds(inst: &ComparisonInstance, k: usize) -> Result<JensenBounds> {
    inst.check_index(k)?;
    inst.require_positive()?;
    let s = inst.suffix_sums()[k];
    let m = (inst.n() - k) as f64;
    let sum_a: f64 = inst.a().weights()[k..].iter().sum();
    let sum_b: f64 = inst.b().weights()[k..].iter().sum();
    Ok(JensenBounds {
        t_upper: -m * (-s / m).exp_m1() / sum_b,
        t_upper_loose: s / sum_b,
        d_lower: s / sum_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(a: &[f64], b: &[f64]) -> ComparisonInstance {
        ComparisonInstance::new(a, b).unwrap()
    }

    #[test]
    fn first_example_roots() {
        let i = inst(&[4.0, 1.0], &[1.0, 1.0]);
        let t = t_root(&i, 0).unwrap();
        assert!((t.value - 0.5).abs() < 1e-14);
        let d = d_root(&i, 0).unwrap();
        assert!((d.value - (73f64.sqrt() - 5.0) / 8.0).abs() < 1e-14);
        assert!((d.value - 0.443000).abs() < 1e-6);
    }

    #[test]
    fn equal_vectors_give_zero() {
        let i = inst(&[3.0, 1.0, 0.5], &[3.0, 1.0, 0.5]);
        for k in 0..3 {
            assert_eq!(t_root(&i, k).unwrap().value, 0.0);
            assert_eq!(d_root(&i, k).unwrap().value, 0.0);
        }
    }

    #[test]
    fn last_index_is_f() {
        let i = inst(&[1.0, 1.0, 1.0], &[1.2, 0.5, 0.4]);
        assert!((t_root(&i, 2).unwrap().value - 1.5).abs() < 1e-12);
        assert!((d_root(&i, 2).unwrap().value - 1.5).abs() < 1e-12);
        // (1 − 0.5T)(1 − 0.4T) = 0.2
        assert!((t_root(&i, 1).unwrap().value - 1.219_223).abs() < 1e-6);
    }

    #[test]
    fn d_closed_form_on_suffix() {
        let i = inst(&[2.0, 2.0], &[1.0, 1.0]);
        assert!((d_root(&i, 1).unwrap().value - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sign_survives_tiny_sums() {
        let i = inst(&[1.0 + 1e-15, 1.0], &[1.0, 1.0]);
        assert!(i.two_ln_d() > 0.0);
        assert!(t_root(&i, 0).unwrap().value > 0.0);
        assert!(d_root(&i, 0).unwrap().value > 0.0);
        let j = i.swapped();
        assert!(t_root(&j, 0).unwrap().value < 0.0);
        assert!(d_root(&j, 0).unwrap().value < 0.0);
    }

    #[test]
    fn roots_near_the_pole() {
        // T(1) = f(1) = 1/b − 1/a with a ≫ b.
        let i = inst(&[1e8], &[1.0]);
        let t = t_root(&i, 0).unwrap();
        assert!((t.gap - 1e-8).abs() < 1e-20);
        assert!((t.value - (1.0 - 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn jensen_first_example() {
        let i = inst(&[4.0, 1.0], &[1.0, 1.0]);
        let j = jensen_bounds(&i, 0).unwrap();
        assert!((j.t_upper - 0.5).abs() < 1e-15);
        assert!((j.d_lower - 0.277_259).abs() < 1e-6);
        let e = inst(&[1.0, 1.0], &[1.0, 1.0]);
        let j = jensen_bounds(&e, 0).unwrap();
        assert_eq!((j.t_upper, j.d_lower), (0.0, 0.0));
    }

    #[test]
    fn start_indices() {
        let i = inst(&[1.0, 1.0, 1.0], &[1.2, 0.5, 0.4]);
        assert_eq!(t_start_index(&i).unwrap(), 2);
        assert_eq!(d_start_index(&i).unwrap(), 2);
        let i = inst(&[4.0, 1.0], &[1.0, 1.0]);
        assert_eq!(t_start_index(&i).unwrap(), 0);
    }
}
