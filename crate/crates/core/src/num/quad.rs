//! Adaptive Gauss–Kronrod quadrature.
//!
//! Globally adaptive G7/K15 panels: the interval with the largest error estimate is
//! bisected until the summed estimate meets `max(atol, rtol*|integral|)`. Integrands near
//! an inverse-square-root blowup (the steep side of `(λ+2Γ)^{-3/2}` brackets) are handled
//! by seeding breakpoints at known steep spots.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

// G7/K15 nodes and weights on [-1, 1] (positive half; node 7 is the midpoint).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One evaluated panel: K15 value plus |K15 - G7| error estimate.
fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let fsum = f(c - x) + f(c + x);
        k += WGK[i] * fsum;
        if i % 2 == 1 {
            g += WG[i / 2] * fsum;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(PartialEq)]
struct Panel {
    err: f64,
    a: f64,
    b: f64,
    val: f64,
}

impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // Tie-break on the left endpoint so the refinement order is deterministic.
        self.err
            .total_cmp(&other.err)
            .then(other.a.total_cmp(&self.a))
    }
}

/// Integrates `f` over `[a, b]` to `max(atol, rtol*|I|)`.
///
/// `breakpoints` lists interior abscissae where the integrand is steep; the initial
/// subdivision honors them. `a <= b` is required.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    atol: f64,
    rtol: f64,
    breakpoints: &[f64],
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::InvalidArgument(format!(
            "integration bounds [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    cuts.extend(inner);
    cuts.push(b);

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in cuts.windows(2) {
        let (val, err) = kronrod_panel(&f, w[0], w[1]);
        total += val;
        total_err += err;
        heap.push(Panel {
            err,
            a: w[0],
            b: w[1],
            val,
        });
    }

    let max_panels = 4000;
    let mut n_panels = cuts.len() - 1;
    while total_err > atol.max(rtol * total.abs()) {
        if n_panels >= max_panels {
            return Err(Error::Numerical(format!(
                "quadrature did not reach tolerance (error {total_err:.3e} with {n_panels} panels)"
            )));
        }
        let worst = heap.pop().expect("heap is non-empty while error > 0");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution; its estimate cannot improve.
            heap.push(Panel {
                err: 0.0,
                ..worst
            });
            total_err = heap.iter().map(|p| p.err).sum();
            if total_err <= atol.max(rtol * total.abs()) {
                break;
            }
            return Err(Error::Numerical(
                "quadrature stalled on a floating-point-width panel".into(),
            ));
        }
        let (lv, le) = kronrod_panel(&f, worst.a, mid);
        let (rv, re) = kronrod_panel(&f, mid, worst.b);
        total += lv + rv - worst.val;
        total_err += le + re - worst.err;
        heap.push(Panel {
            err: le,
            a: worst.a,
            b: mid,
            val: lv,
        });
        heap.push(Panel {
            err: re,
            a: mid,
            b: worst.b,
            val: rv,
        });
        n_panels += 1;
    }
    Ok(total)
}

/// Cumulative integral of `f` from `grid[0]` to every grid node, one K15 panel per cell.
///
/// Meant for smooth integrands on fine grids, where a single panel per cell is already at
/// roundoff accuracy; returns the running sums (first entry 0).
pub fn cumulative_on_grid<F: Fn(f64) -> f64>(f: F, grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in grid.windows(2) {
        let (val, _) = kronrod_panel(&f, w[0], w[1]);
        acc += val;
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // K15 is exact for degree <= 22; a quartic over one panel must be machine-exact.
        let i = integrate(|x| 3.0 * x.powi(4) - x + 2.0, -1.0, 2.0, 1e-14, 1e-14, &[]).unwrap();
        let exact = 3.0 * (32.0 + 1.0) / 5.0 - (4.0 - 1.0) / 2.0 + 2.0 * 3.0;
        assert!((i - exact).abs() < 1e-13, "got {i}, want {exact}");
    }

    #[test]
    fn smooth_transcendental() {
        let i = integrate(|x| (-x).exp() * x.sin(), 0.0, 10.0, 1e-13, 1e-14, &[]).unwrap();
        // Antiderivative of e^{-x} sin x is -(sin x + cos x) e^{-x} / 2.
        let prim = |x: f64| -0.5 * (-x).exp() * (x.sin() + x.cos());
        assert!((i - (prim(10.0) - prim(0.0))).abs() < 1e-12);
    }

    #[test]
    fn near_singular_with_breakpoint() {
        // (x^2 + d)^{-3/2} integrates to x / (d sqrt(x^2+d)); steep at x=0 for tiny d.
        let d = 1e-8;
        let prim = |x: f64| x / (d * (x * x + d).sqrt());
        let exact = prim(1.0) - prim(-1.0);
        let i = integrate(
            |x| (x * x + d).powf(-1.5),
            -1.0,
            1.0,
            1e-10,
            1e-12,
            &[0.0],
        )
        .unwrap();
        assert!(
            ((i - exact) / exact).abs() < 1e-11,
            "rel err {:.3e}",
            ((i - exact) / exact).abs()
        );
    }

    #[test]
    fn cumulative_matches_adaptive() {
        let n = 257;
        let grid: Vec<f64> = (0..n).map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64).collect();
        let f = |x: f64| (2.0 - x).powf(-0.5);
        let cum = cumulative_on_grid(f, &grid);
        for (k, &g) in grid.iter().enumerate().step_by(64) {
            let direct = integrate(f, -1.0, g, 1e-14, 1e-14, &[]).unwrap();
            assert!((cum[k] - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_reversed_bounds() {
        assert!(integrate(|x| x, 1.0, 0.0, 1e-10, 1e-10, &[]).is_err());
    }
}
