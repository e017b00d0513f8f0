//! Plain bisection root finding.

use crate::error::{AmError, Result};

/// Locates a root of `f` in `[lo, hi]` by bisection.
///
/// `f(lo)` and `f(hi)` must have opposite signs (or one of them be zero).
/// Iteration stops once the bracket is narrower than `tol`, or when the
/// midpoint can no longer be distinguished from an endpoint.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    bisect_until(&mut f, lo, hi, |width, _| width <= tol)
}

/// Bisection with a caller-supplied stopping rule `done(width, f(mid))`.
pub fn bisect_until<F, D>(f: &mut F, mut lo: f64, mut hi: f64, mut done: D) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64, f64) -> bool,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(AmError::NoBracket(format!(
            "f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 || mid <= lo || mid >= hi || done(hi - lo, fmid) {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
}
