//! Bracketed bisection.

use crate::error::{Error, Result};

/// Bisects `f` on `[lo, hi]` until the bracket collapses in floating point
/// or `|f| <= f_tol`. Returns whichever bracket end has the smaller `|f|`.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    f_tol: f64,
    what: &'static str,
) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoSignChange { what, lo, hi });
    }
    let mut best = if f_lo.abs() < f_hi.abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    for _ in 0..2200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let f_mid = f(mid);
        if f_mid.abs() < best.1.abs() {
            best = (mid, f_mid);
        }
        if f_mid == 0.0 || f_mid.abs() <= f_tol {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two_to_roundoff() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 0.0, "test").unwrap();
        assert!((r - 2f64.sqrt()).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn rejects_bracket_without_sign_change() {
        let e = bisect(|x| x * x + 1.0, -1.0, 1.0, 0.0, "test").unwrap_err();
        assert!(matches!(e, Error::NoSignChange { .. }));
    }

    #[test]
    fn reversed_bracket_is_fine() {
        let r = bisect(|x| x - 0.25, 1.0, 0.0, 0.0, "test").unwrap();
        assert_eq!(r, 0.25);
    }
}
