//! Bracketed scalar root finding and extremum refinement.

use crate::error::{Error, Result};

/// Finds a root of `f` inside the bracket `[lo, hi]`.
///
/// Hybrid secant/bisection: a secant step is taken when it stays safely inside the current
/// bracket, otherwise the bracket is bisected. Stops when `|f| <= ftol` or the bracket
/// collapses to floating-point width (returning the best endpoint seen).
///
/// Requires a sign change across the initial bracket.
pub fn bracketed<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("bracket [{lo}, {hi}]")));
    }
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoRoot(format!(
            "no sign change on [{lo}, {hi}] (f={fa:.3e} and {fb:.3e})"
        )));
    }
    let (mut best_x, mut best_f) = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for _ in 0..max_iter {
        if best_f.abs() <= ftol {
            return Ok(best_x);
        }
        let width = b - a;
        if width <= f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
            return Ok(best_x);
        }
        // Secant through the bracket endpoints, guarded away from the edges.
        let xs = b - fb * width / (fb - fa);
        let guard = 0.01 * width;
        let x = if xs > a + guard && xs < b - guard {
            xs
        } else {
            a + 0.5 * width
        };
        let fx = f(x);
        if fx.abs() < best_f.abs() {
            best_x = x;
            best_f = fx;
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    if best_f.abs() <= ftol {
        Ok(best_x)
    } else {
        Err(Error::Convergence {
            context: "bracketed root search".into(),
            residual: best_f.abs(),
            iterations: max_iter,
        })
    }
}

/// Plain bisection to a target abscissa width. Used where only a sign change is reliable
/// (level-set extraction on sampled fields).
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    xtol: f64,
) -> Result<f64> {
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    if fa == 0.0 {
        return Ok(a);
    }
    let fb = f(b);
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoRoot(format!("no sign change on [{lo}, {hi}]")));
    }
    while b - a > xtol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section refinement of a minimum bracketed by `a < b < c` with
/// `f(b) <= min(f(a), f(c))`. Returns the abscissa of the refined minimum.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, c: f64, xtol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut lo = a;
    let mut hi = c;
    // Seed the two interior probes from the golden ratio, ignoring b's exact position.
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let _ = b;
    while hi - lo > xtol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}
