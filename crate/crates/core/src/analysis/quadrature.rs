//! Adaptive Simpson quadrature.

use crate::error::{DispatchError, Result};

const MAX_DEPTH: u32 = 50;

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(DispatchError::Domain(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(fa, fm, fb, a, b);
    recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(DispatchError::Numerical {
            message: format!("non-finite integrand on [{a}, {b}]"),
            residual: delta,
        });
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(DispatchError::Numerical {
            message: format!("quadrature did not converge on [{a}, {b}]"),
            residual: delta.abs(),
        });
    }
    Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}
