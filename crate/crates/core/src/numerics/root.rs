use crate::{Error, Result};

/// Bisection for a root of a nonincreasing function on `[lo, hi]`.
///
/// The bracket's upper end is doubled (up to `cap`) until `f(hi) ≤ 0`.
pub fn bisect_decreasing<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    lo: f64,
    hi: f64,
    cap: f64,
    tol: f64,
    max_iter: usize,
    context: &'static str,
) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let flo = f(lo)?;
    if flo < 0.0 {
        return Err(Error::NoRoot { context, lo, hi });
    }
    let mut fhi = f(hi)?;
    while fhi > 0.0 {
        if hi >= cap {
            return Err(Error::NoRoot { context, lo, hi });
        }
        lo = hi;
        hi = (2.0 * hi).min(cap);
        fhi = f(hi)?;
    }
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
