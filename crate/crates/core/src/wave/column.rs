//! Direct solution of the one-station (laminar) column by downward marching.
//!
//! The square Newton system for the discrete laminar column is singular exactly at
//! λ = λ_c — criticality *is* the appearance of a null mode of the linearized
//! column — so for the slightly supercritical levels that solitary waves live at,
//! its basin of attraction shrinks below the truncation error of any reasonable
//! seed. Marching sidesteps that: pick the surface height T, let the surface
//! condition together with the two topmost interior rows fix the three rows below
//! the surface, then walk the remaining interior rows downward — every step is a
//! scalar cubic that is strictly monotone whenever the vorticity is non-positive
//! (its derivative is at least 1/dp²). The bed value then depends on T alone.
//!
//! Just above λ_c the column equations have *two* nearby solutions (the conjugate
//! laminar pair, a distance O(ε) apart), so the bed value as a function of T has
//! two nearby roots with a shallow maximum between them. The shallow-water root —
//! the one the wave decays to — is isolated by bracketing between a clearly
//! subcritical height and the inter-root maximum, whose location is known in
//! closed form to leading order. Plain bisection is then immune to the O(ε)
//! flatness that defeats Newton there.

use crate::error::{Error, Result};

/// Solves a strictly monotone scalar equation by guarded Newton.
fn monotone_root(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    seed: f64,
    scale: f64,
) -> Result<f64> {
    let mut x = seed;
    for _ in 0..60 {
        let fx = f(x);
        if fx.abs() <= 1e-13 * scale {
            return Ok(x);
        }
        let d = df(x);
        if !(d.abs() > 0.0) {
            return Err(Error::Numerical(format!(
                "marching step lost monotonicity (f' = {d})"
            )));
        }
        let step = fx / d;
        x -= step;
        if step.abs() <= f64::EPSILON * x.abs().max(1.0) {
            return Ok(x);
        }
    }
    Err(Error::Numerical(
        "marching step failed to converge in 60 iterations".into(),
    ))
}

/// Marches the column down from surface height `t`, returning all np heights
/// (bed row included). The surface slope uses the same four-point one-sided
/// stencil as the two-dimensional system, so the start block solves the surface
/// row together with the two topmost interior rows before the plain interior
/// recurrence takes over.
fn march(
    t: f64,
    np: usize,
    dp: f64,
    gamma_mp: &[f64],
    g: f64,
    lambda: f64,
    d_ref: f64,
) -> Result<Vec<f64>> {
    let js = np - 1;
    let mut h = vec![0.0; np];
    h[js] = t;
    let arg = lambda - 2.0 * g * (t - d_ref);
    if !(arg > 0.0) {
        return Err(Error::Domain(format!(
            "surface height {t} exceeds the Bernoulli ceiling"
        )));
    }
    // Slope the surface condition demands of the four-point stencil.
    let s = 1.0 / arg.sqrt();
    let scale = (t / (dp * dp)).abs().max(1.0);
    // Start block: unknowns a = h[js-1], b = h[js-2], c = h[js-3].
    // Interior row at js-1 gives b(a); the surface row is linear in c; the
    // interior row at js-2 closes the system as a scalar residual in a.
    let inner = |a: f64| -> Result<(f64, f64, f64)> {
        let gam = gamma_mp[js - 1];
        let f = |b: f64| {
            let w = (t - b) / (2.0 * dp);
            (t - 2.0 * a + b) / (dp * dp) + gam * w * w * w
        };
        let df = |b: f64| {
            let w = (t - b) / (2.0 * dp);
            1.0 / (dp * dp) - 1.5 * gam * w * w / dp
        };
        let b = monotone_root(f, df, 2.0 * a - t, scale)?;
        let c = (11.0 * t - 18.0 * a + 9.0 * b - 6.0 * dp * s) / 2.0;
        let w = (a - c) / (2.0 * dp);
        let r = (a - 2.0 * b + c) / (dp * dp) + gamma_mp[js - 2] * w * w * w;
        Ok((r, b, c))
    };
    // The start residual is monotone decreasing in a to leading order (slope
    // ≈ -3/dp²), so a damped secant from the linear-profile guess is reliable.
    let mut a0 = t - dp * s;
    let (mut r0, ..) = inner(a0)?;
    let mut a1 = a0 - r0 * dp * dp / 3.0;
    let mut solved = r0.abs() <= 1e-13 * scale;
    if !solved {
        for _ in 0..60 {
            let (r1, b, c) = inner(a1)?;
            if r1.abs() <= 1e-13 * scale || (a1 - a0).abs() <= f64::EPSILON * a1.abs().max(1.0) {
                h[js - 1] = a1;
                h[js - 2] = b;
                h[js - 3] = c;
                solved = true;
                break;
            }
            if r1 == r0 {
                return Err(Error::Numerical("column start block stalled".into()));
            }
            let da = r1 * (a1 - a0) / (r1 - r0);
            a0 = a1;
            r0 = r1;
            a1 -= da;
        }
    } else {
        let (_, b, c) = inner(a0)?;
        h[js - 1] = a0;
        h[js - 2] = b;
        h[js - 3] = c;
    }
    if !solved {
        return Err(Error::Numerical(
            "column start block failed to converge".into(),
        ));
    }
    // Interior rows j = js-3 .. 1 each determine the row below.
    for j in (1..=js - 3).rev() {
        let (hi, mid) = (h[j + 1], h[j]);
        let gam = gamma_mp[j];
        let f = |x: f64| {
            let w = (hi - x) / (2.0 * dp);
            (hi - 2.0 * mid + x) / (dp * dp) + gam * w * w * w
        };
        let df = |x: f64| {
            let w = (hi - x) / (2.0 * dp);
            1.0 / (dp * dp) - 1.5 * gam * w * w / dp
        };
        h[j - 1] = monotone_root(f, df, 2.0 * mid - hi, scale)?;
    }
    Ok(h)
}

/// Discrete laminar column together with the surface heights of the conjugate
/// pair it belongs to. The pair spread measures the supercriticality *as the
/// grid sees it* (the continuum spread is ελ_c/g), which steers seeding.
pub(crate) struct ColumnSolution {
    pub h: Vec<f64>,
    /// Surface height of the shallow (returned) conjugate state.
    pub t_left: f64,
    /// Surface height of the deep conjugate state.
    pub t_right: f64,
}

/// Solves the discrete laminar column: surface and interior rows hold exactly and
/// the marched bed value is driven to zero by shooting in the surface height.
/// Returns the shallow root of the conjugate pair (the state the wave decays to).
pub(crate) fn solve_column(
    np: usize,
    dp: f64,
    gamma_mp: &[f64],
    g: f64,
    lambda: f64,
    d_ref: f64,
    lambda_c: f64,
) -> Result<ColumnSolution> {
    let bed_of = |t: f64| -> Result<f64> { Ok(march(t, np, dp, gamma_mp, g, lambda, d_ref)?[0]) };
    // The inter-root maximum sits at d_ref + (λ-λ_c)/2g to leading order; probe
    // around it for a positive bed value to cap the bracket between the roots.
    let peak = d_ref + (lambda - lambda_c).max(0.0) / (2.0 * g);
    let mut hi = f64::NAN;
    let mut best = f64::NEG_INFINITY;
    for factor in [1.0, 0.8, 1.25, 0.6, 1.6, 0.4, 2.0] {
        let t = d_ref + (peak - d_ref) * factor;
        let f = bed_of(t)?;
        if f > best {
            best = f;
        }
        if f > 0.0 {
            hi = t;
            break;
        }
    }
    if !hi.is_finite() {
        return Err(Error::Numerical(format!(
            "no laminar column on this grid at λ = {lambda:.6}: the discrete \
             conjugate pair is unresolved (best bed value {best:.3e}); refine the \
             streamline resolution or raise the supercriticality"
        )));
    }
    // Below the shallow root the bed value is negative; step down until seen.
    let mut lo = d_ref - 2.0 * (peak - d_ref).max(1e-3 * d_ref);
    let mut flo = bed_of(lo)?;
    for _ in 0..20 {
        if flo < 0.0 {
            break;
        }
        lo -= 0.05 * d_ref;
        flo = bed_of(lo)?;
    }
    if flo >= 0.0 {
        return Err(Error::Numerical(
            "failed to bracket the laminar column from below".into(),
        ));
    }
    let t = crate::num::root::bracketed(
        |t| bed_of(t).unwrap_or(f64::NAN),
        lo,
        hi,
        1e-16 * d_ref,
        300,
    )?;
    let mut h = march(t, np, dp, gamma_mp, g, lambda, d_ref)?;
    let bed = h[0];
    if bed.abs() > 1e-11 * d_ref {
        return Err(Error::Convergence {
            context: "laminar column shooting".into(),
            residual: bed.abs(),
            iterations: 300,
        });
    }
    h[0] = 0.0;
    // Locate the deep conjugate state beyond the inter-root maximum. The bed
    // value turns negative again before the Bernoulli ceiling, where the marched
    // column plunges.
    let ceiling = d_ref + 0.499 * lambda / g;
    let mut lo2 = hi;
    let mut hi2 = hi;
    let mut step = (hi - t).max(1e-4 * d_ref);
    loop {
        let cand = (hi2 + step).min(ceiling);
        let f = bed_of(cand)?;
        if f < 0.0 {
            hi2 = cand;
            break;
        }
        lo2 = cand;
        if cand >= ceiling {
            return Err(Error::Numerical(
                "deep conjugate column not found below the Bernoulli ceiling".into(),
            ));
        }
        step *= 2.0;
    }
    let t_right = crate::num::root::bracketed(
        |t| bed_of(t).unwrap_or(f64::NAN),
        lo2,
        hi2,
        1e-14 * d_ref,
        300,
    )?;
    Ok(ColumnSolution {
        h,
        t_left: t,
        t_right,
    })
}
