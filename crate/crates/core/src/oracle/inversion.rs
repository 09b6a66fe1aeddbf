//! Imhof-type inversion of the characteristic function.
//!
//! ```text
//! β(x, w) = 1/2 − (1/π) ∫₀^∞ sin θ(u) / (u ρ(u)) du
//! θ(u) = ½ Σ arctan(wᵢ u) − x u / 2,    ρ(u) = Π (1 + wᵢ² u²)^{1/4}
//! ```
//!
//! The integral is split at a point `U` past which `θ' < 0`. Since `θ'` is strictly decreasing
//! and `1/(uρ)` is decreasing, `h = 1/(u ρ θ')` is monotone on `[U, ∞)` and tends to zero, so
//! integrating by parts bounds the tail by `2 |h(U)|`. The head `[0, U]` is cut into panels that
//! each span at most half an oscillation and integrated with adaptive Gauss–Kronrod (7/15).
//!
//! With few weights the first-order bound decays slowly (like `U^{-1-p/2}`), so a second
//! integration by parts is used when it allows a smaller `U`:
//!
//! ```text
//! ∫_U^∞ sin θ · g = cos θ(U) h(U) − sin θ(U) k(U) − ∫_U^∞ sin θ · k',   g = 1/(uρ), h = g/θ', k = h'/θ'
//! ```
//!
//! For `u ≥ max(1/w_min, √(3 Σ 1/wᵢ / x))` the factors of `|k| = (|g'| q + g q') / q³` (with
//! `q = −θ'`) are monotone in the right direction, so `|k|` decreases to zero and the remainder is
//! at most `|k(U)|`.

use std::f64::consts::PI;

use super::{CdfEstimate, CdfMethod};
use crate::error::{Error, Result};
use crate::model::WeightVector;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Panels beyond this count are not attempted; the best achievable bound is reported instead.
const MAX_PANELS: usize = 4_000_000;
const MAX_DEPTH: u32 = 24;
/// Below this (normalized) abscissa the integrand is replaced by its limit at zero.
const SMALL_U: f64 = 1e-8;

/// Integrand state for weights normalized so that the largest weight is one.
struct Integrand<'a> {
    w: &'a [f64],
    x: f64,
    limit_at_zero: f64,
}

impl Integrand<'_> {
    fn eval(&self, u: f64) -> f64 {
        if u < SMALL_U {
            return self.limit_at_zero;
        }
        let mut theta = -0.5 * self.x * u;
        let mut ln_rho = 0.0;
        for &wi in self.w {
            let t = wi * u;
            theta += 0.5 * t.atan();
            ln_rho += 0.25 * (t * t).ln_1p();
        }
        theta.sin() / u * (-ln_rho).exp()
    }

    fn theta_prime(&self, u: f64) -> f64 {
        let s: f64 = self
            .w
            .iter()
            .map(|&wi| wi / (1.0 + wi * wi * u * u))
            .sum();
        0.5 * (s - self.x)
    }

    fn ln_rho(&self, u: f64) -> f64 {
        self.w
            .iter()
            .map(|&wi| 0.25 * (wi * wi * u * u).ln_1p())
            .sum()
    }

    /// Bound on `(1/π) |∫_U^∞ …|`; infinite while `θ'(U) ≥ 0`.
    fn tail_bound(&self, u: f64) -> f64 {
        let tp = self.theta_prime(u);
        if tp >= 0.0 {
            return f64::INFINITY;
        }
        2.0 / PI * (-self.ln_rho(u)).exp() / (u * -tp)
    }

    /// Boundary terms `cos θ h − sin θ k` and the remainder bound `|k|`, both unscaled by `1/π`.
    fn second_order_tail(&self, u: f64) -> (f64, f64) {
        let mut theta = -0.5 * self.x * u;
        let (mut s, mut s_prime, mut r) = (0.0, 0.0, 1.0 / u);
        for &wi in self.w {
            let t = wi * u;
            let d = 1.0 + t * t;
            theta += 0.5 * t.atan();
            s += wi / d;
            s_prime += wi * wi * wi * u / (d * d);
            r += 0.5 * wi * t / d;
        }
        let g = (-self.ln_rho(u)).exp() / u;
        let tp = 0.5 * (s - self.x);
        let tpp = -s_prime;
        let h = g / tp;
        let h_prime = (-g * r * tp - g * tpp) / (tp * tp);
        let k = h_prime / tp;
        (theta.cos() * h - theta.sin() * k, k.abs())
    }

    /// Smallest `U` from which the second-order remainder bound is valid.
    fn second_order_start(&self) -> f64 {
        let w_min = self.w.iter().copied().fold(f64::INFINITY, f64::min);
        let inv_sum: f64 = self.w.iter().map(|&wi| 1.0 / wi).sum();
        (1.0 / w_min).max((3.0 * inv_sum / self.x).sqrt())
    }

    fn gauss_kronrod(&self, lo: f64, hi: f64) -> (f64, f64) {
        let center = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let fc = self.eval(center);
        let mut kronrod = WGK[7] * fc;
        let mut gauss = WG[3] * fc;
        for j in 0..7 {
            let dx = half * XGK[j];
            let pair = self.eval(center - dx) + self.eval(center + dx);
            kronrod += WGK[j] * pair;
            if j % 2 == 1 {
                gauss += WG[j / 2] * pair;
            }
        }
        (kronrod * half, ((kronrod - gauss) * half).abs())
    }

    /// Adaptive bisection until the Kronrod/Gauss difference meets `eps`.
    fn adaptive(&self, lo: f64, hi: f64, eps: f64, depth: u32) -> (f64, f64) {
        let (value, err) = self.gauss_kronrod(lo, hi);
        if err <= eps || depth >= MAX_DEPTH {
            return (value, err);
        }
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = self.adaptive(lo, mid, 0.5 * eps, depth + 1);
        let (v2, e2) = self.adaptive(mid, hi, 0.5 * eps, depth + 1);
        (v1 + v2, e1 + e2)
    }
}

/// `β(x, w)` by characteristic-function inversion, to absolute accuracy `tol`.
///
/// `tol` must lie in `(1e-12, 1e-2)`. Zero weights are dropped. Returns
/// [`Error::ToleranceUnreachable`] with the best bound reached when the panel budget runs out.
pub fn beta_cdf_inversion(w: &WeightVector, x: f64, tol: f64) -> Result<CdfEstimate> {
    if !(tol > 1e-12 && tol < 1e-2) {
        return Err(Error::InvalidTolerance(tol));
    }
    if x.is_nan() {
        return Err(Error::InvalidArgument("x is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(CdfEstimate::exact(x, 0.0, CdfMethod::Inversion));
    }
    if x == f64::INFINITY {
        return Ok(CdfEstimate::exact(x, 1.0, CdfMethod::Inversion));
    }

    let positive = w.positive_weights();
    let scale = positive[0];
    let normalized: Vec<f64> = positive.iter().map(|&wi| wi / scale).collect();
    let xn = x / scale;
    let integrand = Integrand {
        w: &normalized,
        x: xn,
        limit_at_zero: 0.5 * (normalized.iter().sum::<f64>() - xn),
    };

    let tail_budget = 0.5 * tol;
    let mut upper = 1.0;
    while integrand.tail_bound(upper) > tail_budget {
        upper *= 1.25;
    }
    let mut second = integrand.second_order_start();
    while second < upper && integrand.second_order_tail(second).1 / PI > tail_budget {
        second *= 1.25;
    }
    let use_second = second < upper;
    if use_second {
        upper = second;
    }

    // Half the budget goes to the head, shared across panels in proportion to their length.
    let head_budget = 0.5 * tol * PI;
    let mut integral = 0.0;
    let mut head_err = 0.0;
    let mut lo = 0.0;
    let mut panels = 0usize;
    while lo < upper {
        if panels >= MAX_PANELS {
            let achieved = (head_err / PI + integrand.tail_bound(lo)).max(tol);
            return Err(Error::ToleranceUnreachable {
                requested: tol,
                achieved,
            });
        }
        let freq = integrand.theta_prime(lo).abs().max(0.5 * xn);
        let width = (0.5 * PI / freq).min((0.5 * lo).max(0.125));
        let hi = (lo + width).min(upper);
        let eps = head_budget * (hi - lo) / upper;
        let (v, e) = integrand.adaptive(lo, hi, eps, 0);
        integral += v;
        head_err += e;
        lo = hi;
        panels += 1;
    }

    let tail = if use_second {
        let (boundary, remainder) = integrand.second_order_tail(upper);
        integral += boundary;
        remainder / PI
    } else {
        integrand.tail_bound(upper)
    };
    let error_bound = head_err / PI + tail;
    if error_bound > tol {
        return Err(Error::ToleranceUnreachable {
            requested: tol,
            achieved: error_bound,
        });
    }
    let value = (0.5 - integral / PI).clamp(0.0, 1.0);
    Ok(CdfEstimate {
        x,
        value,
        error_bound,
        method: CdfMethod::Inversion,
        n_samples: None,
        seed: None,
        sigmas: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beta(w: &[f64], x: f64, tol: f64) -> CdfEstimate {
        beta_cdf_inversion(&WeightVector::new(w).unwrap(), x, tol).unwrap()
    }

    #[test]
    fn second_order_tail_matches_chi_square() {
        use statrs::function::gamma::gamma_lr;
        for n in 1..=3usize {
            let w = WeightVector::new(&vec![2.0; n]).unwrap();
            let norm = Integrand { w: &[1.0; 3][..n], x: 1.0, limit_at_zero: 0.0 };
            let first = {
                let mut u = 1.0;
                while norm.tail_bound(u) > 1e-11 {
                    u *= 1.25;
                }
                u
            };
            assert!(n > 2 || norm.second_order_start() < first);
            for &x in &[0.05, 0.7, 3.0, 12.0, 40.0] {
                let e = beta_cdf_inversion(&w, x, 1e-10).unwrap();
                let exact = gamma_lr(n as f64 / 2.0, x / 4.0);
                assert!((e.value - exact).abs() <= e.error_bound, "n={n} x={x}: {} vs {exact}", e.value);
            }
        }
    }

    #[test]
    fn chi_square_two_degrees() {
        let e = beta(&[1.0, 1.0], 2.0, 1e-8);
        assert!((e.value - (1.0 - (-1f64).exp())).abs() <= 1e-8);
        assert!(e.error_bound <= 1e-8);
    }

    #[test]
    fn single_weight_with_zeros() {
        // P(|Z| < 1)
        let e = beta(&[1.0, 0.0, 0.0], 1.0, 1e-8);
        assert!((e.value - 0.682_689_492_137_085_9).abs() <= 1e-8, "{}", e.value);
    }

    #[test]
    fn half_weights_are_exponential() {
        let e = beta(&[0.5, 0.5], 5.0, 1e-8);
        assert!((e.value - (1.0 - (-5f64).exp())).abs() <= 1e-8);
    }

    #[test]
    fn nonpositive_x_is_zero() {
        assert_eq!(beta(&[4.0, 1.0], 0.0, 1e-6).value, 0.0);
        assert_eq!(beta(&[4.0, 1.0], -3.0, 1e-6).value, 0.0);
    }

    #[test]
    fn tolerance_is_validated() {
        let w = WeightVector::new(&[1.0]).unwrap();
        assert_eq!(
            beta_cdf_inversion(&w, 1.0, 0.1),
            Err(Error::InvalidTolerance(0.1))
        );
        assert!(beta_cdf_inversion(&w, 1.0, 1e-13).is_err());
    }

    #[test]
    fn four_degrees_closed_form() {
        // χ²₄ CDF: 1 − e^{−x/2}(1 + x/2)
        for &x in &[0.3, 1.0, 4.0, 9.0, 20.0] {
            let exact = 1.0 - (-x / 2.0f64).exp() * (1.0 + x / 2.0);
            let e = beta(&[1.0; 4], x, 1e-10);
            assert!((e.value - exact).abs() <= 1e-10, "x={x}");
        }
    }
}
