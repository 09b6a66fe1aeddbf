//! Bracketing root finder for monotone scalar equations.

/// Outcome of [`bisect_increasing`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracketed {
    pub root: f64,
    pub residual: f64,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

/// Finds the root of a strictly increasing `phi` on `(0, ∞)`.
///
/// `start` is any positive point. The bracket is grown geometrically (halving toward zero,
/// doubling toward infinity) until `phi` changes sign, then bisected until the interval cannot
/// shrink any further in binary64. The midpoint is geometric while the endpoints differ by more
/// than a factor of two, which keeps the iteration count bounded when the root sits many orders of
/// magnitude away from `start`.
///
/// `phi` may return `-∞` near zero. Returns `None` if no sign change is found.
pub fn bisect_increasing<F>(phi: F, start: f64) -> Option<Bracketed>
where
    F: Fn(f64) -> f64,
{
    debug_assert!(start > 0.0 && start.is_finite());
    let mut lo = start;
    let mut hi = start;
    let mut phi_lo = phi(lo);
    let mut phi_hi = phi_lo;
    let mut iterations = 0;

    if phi_lo == 0.0 {
        return Some(Bracketed {
            root: start,
            residual: 0.0,
            lo,
            hi,
            iterations,
        });
    }
    if phi_lo > 0.0 {
        while phi_lo > 0.0 {
            hi = lo;
            phi_hi = phi_lo;
            lo *= 0.5;
            if lo < f64::MIN_POSITIVE {
                return None;
            }
            phi_lo = phi(lo);
            iterations += 1;
        }
    } else {
        while phi_hi < 0.0 {
            lo = hi;
            phi_lo = phi_hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return None;
            }
            phi_hi = phi(hi);
            iterations += 1;
        }
    }

    Some(bisect_bracket(phi, lo, hi, phi_lo, phi_hi, iterations))
}

/// Bisects an increasing `phi` on `[lo, hi]` with `phi(lo) < 0 < phi(hi)` already evaluated.
///
/// Works on any sign of the endpoints; the geometric midpoint is only used when both are positive.
pub fn bisect_bracket<F>(
    phi: F,
    mut lo: f64,
    mut hi: f64,
    mut phi_lo: f64,
    mut phi_hi: f64,
    mut iterations: usize,
) -> Bracketed
where
    F: Fn(f64) -> f64,
{
    loop {
        let mid = if lo > 0.0 && hi > 2.0 * lo {
            (lo * hi).sqrt()
        } else {
            lo + 0.5 * (hi - lo)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        let phi_mid = phi(mid);
        iterations += 1;
        if phi_mid == 0.0 {
            return Bracketed {
                root: mid,
                residual: 0.0,
                lo: mid,
                hi: mid,
                iterations,
            };
        }
        if phi_mid < 0.0 {
            lo = mid;
            phi_lo = phi_mid;
        } else {
            hi = mid;
            phi_hi = phi_mid;
        }
    }

    let (root, residual) = if phi_lo.abs() <= phi_hi.abs() {
        (lo, phi_lo.abs())
    } else {
        (hi, phi_hi.abs())
    };
    Bracketed {
        root,
        residual,
        lo,
        hi,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_square_root() {
        let r = bisect_increasing(|x| x * x - 2.0, 1.0).unwrap();
        assert!((r.root - 2f64.sqrt()).abs() < 1e-15);
        assert!(r.residual < 1e-15);
    }

    #[test]
    fn handles_roots_far_from_start() {
        let r = bisect_increasing(|x| x.ln() + 80.0, 1.0).unwrap();
        assert!((r.root.ln() + 80.0).abs() < 1e-12);
        let r = bisect_increasing(|x| x.ln() - 60.0, 1.0).unwrap();
        assert!((r.root.ln() - 60.0).abs() < 1e-12);
        assert!(r.iterations < 300);
    }

    #[test]
    fn tolerates_negative_infinity_near_zero() {
        let r = bisect_increasing(|x| x.ln() + (x + 1.0).ln(), 3.0).unwrap();
        // x(x+1) = 1
        assert!((r.root - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn bracket_across_zero() {
        let r = bisect_bracket(|x| x.powi(3) + 1e-30, -1.0, 1.0, -1.0, 1.0, 0);
        assert!(r.root < 0.0 && r.root > -2e-10);
    }

    #[test]
    fn no_sign_change() {
        assert!(bisect_increasing(|_| 1.0, 1.0).is_none());
    }
}
