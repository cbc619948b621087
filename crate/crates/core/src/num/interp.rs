//! Piecewise-cubic Hermite interpolation on uniform grids.
//!
//! Tables carry exact nodal slopes where available (the laminar profile knows its
//! derivative in closed form); monotone data can be inverted with a guarded Newton.
//! [`limit_slopes_monotone`] applies Fritsch–Carlson limiting to externally supplied
//! slopes so interpolants of monotone data cannot oscillate.

use crate::error::{Error, Result};

/// Cubic Hermite interpolant on a uniform abscissa grid with per-node slopes.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    x0: f64,
    dx: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl HermiteTable {
    /// `y[k]` and slopes `m[k]` at `x0 + k*dx`, `dx > 0`.
    pub fn new(x0: f64, dx: f64, y: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        if y.len() < 2 || y.len() != m.len() {
            return Err(Error::InvalidArgument(format!(
                "table needs >=2 nodes with matching slopes (got {} values, {} slopes)",
                y.len(),
                m.len()
            )));
        }
        if !(dx > 0.0) {
            return Err(Error::InvalidArgument(format!("node spacing {dx}")));
        }
        Ok(Self { x0, dx, y, m })
    }

    pub fn x_min(&self) -> f64 {
        self.x0
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.dx * (self.y.len() - 1) as f64
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.y.len();
        let s = (x - self.x0) / self.dx;
        let k = (s.floor() as isize).clamp(0, n as isize - 2) as usize;
        (k, s - k as f64)
    }

    /// Interpolated value; clamps `x` into the table span only within 1e-9 of the ends.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_span(x)?;
        let (k, t) = self.locate(x);
        let (h00, h10, h01, h11) = hermite_basis(t);
        Ok(h00 * self.y[k]
            + h10 * self.dx * self.m[k]
            + h01 * self.y[k + 1]
            + h11 * self.dx * self.m[k + 1])
    }

    /// Interpolated first derivative.
    pub fn eval_deriv(&self, x: f64) -> Result<f64> {
        self.check_span(x)?;
        let (k, t) = self.locate(x);
        let (d00, d10, d01, d11) = hermite_basis_deriv(t);
        Ok((d00 * self.y[k] + d01 * self.y[k + 1]) / self.dx
            + d10 * self.m[k]
            + d11 * self.m[k + 1])
    }

    /// Interpolated second derivative (piecewise linear, jumps at the nodes).
    pub fn eval_deriv2(&self, x: f64) -> Result<f64> {
        self.check_span(x)?;
        let (k, t) = self.locate(x);
        let (s00, s10, s01, s11) = (
            12.0 * t - 6.0,
            6.0 * t - 4.0,
            -12.0 * t + 6.0,
            6.0 * t - 2.0,
        );
        Ok((s00 * self.y[k] + s01 * self.y[k + 1]) / (self.dx * self.dx)
            + (s10 * self.m[k] + s11 * self.m[k + 1]) / self.dx)
    }

    fn check_span(&self, x: f64) -> Result<()> {
        let slack = 1e-9 * self.dx.max(self.x_max() - self.x_min());
        if x < self.x_min() - slack || x > self.x_max() + slack {
            return Err(Error::Domain(format!(
                "abscissa {x} outside table span [{}, {}]",
                self.x_min(),
                self.x_max()
            )));
        }
        Ok(())
    }

    /// Inverts `y = eval(x)` for strictly monotone tables: guarded Newton with a bisection
    /// bracket on the containing cell.
    pub fn invert(&self, target: f64) -> Result<f64> {
        let n = self.y.len();
        let increasing = self.y[n - 1] > self.y[0];
        let (lo_v, hi_v) = if increasing {
            (self.y[0], self.y[n - 1])
        } else {
            (self.y[n - 1], self.y[0])
        };
        let slack = 1e-9 * (hi_v - lo_v).abs().max(1.0);
        if target < lo_v - slack || target > hi_v + slack {
            return Err(Error::Domain(format!(
                "inversion target {target} outside range [{lo_v}, {hi_v}]"
            )));
        }
        let t = target.clamp(lo_v, hi_v);
        // Bracket the containing cell by binary search over nodal values.
        let mut a = 0usize;
        let mut b = n - 1;
        while b - a > 1 {
            let mid = (a + b) / 2;
            let below = if increasing {
                self.y[mid] <= t
            } else {
                self.y[mid] >= t
            };
            if below {
                a = mid;
            } else {
                b = mid;
            }
        }
        let mut lo = self.x0 + self.dx * a as f64;
        let mut hi = lo + self.dx;
        let mut x = 0.5 * (lo + hi);
        for _ in 0..60 {
            let f = self.eval(x)? - t;
            if f.abs() <= 1e-15 * (hi_v - lo_v).abs().max(1.0) {
                return Ok(x);
            }
            if (f > 0.0) == increasing {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.eval_deriv(x)?;
            let xn = x - f / d;
            x = if d != 0.0 && xn > lo && xn < hi {
                xn
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= f64::EPSILON * x.abs().max(1.0) {
                return Ok(x);
            }
        }
        Ok(x)
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

fn hermite_basis_deriv(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    (
        6.0 * t2 - 6.0 * t,
        3.0 * t2 - 4.0 * t + 1.0,
        -6.0 * t2 + 6.0 * t,
        3.0 * t2 - 2.0 * t,
    )
}

/// Fritsch–Carlson limiting of supplied slopes against the data's secants, in place.
///
/// Wherever the data is locally monotone the limited interpolant is monotone too; at
/// interior extrema of the data the slope is zeroed.
pub fn limit_slopes_monotone(x_spacing: f64, y: &[f64], m: &mut [f64]) {
    let n = y.len();
    if n < 2 {
        return;
    }
    let secant = |k: usize| (y[k + 1] - y[k]) / x_spacing;
    for k in 0..n {
        let (dl, dr) = (
            if k > 0 { Some(secant(k - 1)) } else { None },
            if k + 1 < n { Some(secant(k)) } else { None },
        );
        match (dl, dr) {
            (Some(a), Some(b)) if a * b <= 0.0 => m[k] = 0.0,
            _ => {
                let d = dr.or(dl).unwrap();
                if d == 0.0 {
                    m[k] = 0.0;
                } else if m[k] / d < 0.0 {
                    m[k] = 0.0;
                } else if (m[k] / d).abs() > 3.0 {
                    m[k] = 3.0 * d;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic_table() -> HermiteTable {
        // f(x) = x^3 - 2x, reproduced exactly by Hermite pieces with exact slopes.
        let n = 9;
        let dx = 0.25;
        let y: Vec<f64> = (0..n).map(|k| {
            let x = k as f64 * dx;
            x * x * x - 2.0 * x
        }).collect();
        let m: Vec<f64> = (0..n).map(|k| {
            let x = k as f64 * dx;
            3.0 * x * x - 2.0
        }).collect();
        HermiteTable::new(0.0, dx, y, m).unwrap()
    }

    #[test]
    fn reproduces_cubics_exactly() {
        let t = cubic_table();
        for &x in &[0.0, 0.11, 0.77, 1.3, 1.999, 2.0] {
            let v = t.eval(x).unwrap();
            let d = t.eval_deriv(x).unwrap();
            assert!((v - (x * x * x - 2.0 * x)).abs() < 1e-14);
            assert!((d - (3.0 * x * x - 2.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn second_derivative_of_cubic() {
        let t = cubic_table();
        for &x in &[0.05, 0.5, 1.23, 1.9] {
            let s = t.eval_deriv2(x).unwrap();
            assert!((s - 6.0 * x).abs() < 1e-12);
        }
    }

    #[test]
    fn inversion_round_trip() {
        // Strictly increasing section of exp.
        let n = 33;
        let dx = 0.125;
        let y: Vec<f64> = (0..n).map(|k| (k as f64 * dx).exp()).collect();
        let m: Vec<f64> = (0..n).map(|k| (k as f64 * dx).exp()).collect();
        let t = HermiteTable::new(0.0, dx, y, m).unwrap();
        for &x in &[0.0, 0.3, 1.234, 2.5, 3.9] {
            let v = t.eval(x).unwrap();
            let xi = t.invert(v).unwrap();
            assert!((xi - x).abs() < 1e-11, "x {x} round-tripped to {xi}");
        }
    }

    #[test]
    fn out_of_span_rejected() {
        let t = cubic_table();
        assert!(t.eval(-0.5).is_err());
        assert!(t.eval(2.5).is_err());
        assert!(t.invert(1e9).is_err());
    }

    #[test]
    fn limiting_preserves_monotone_runs() {
        // Monotone data with a deliberately wild supplied slope.
        let y = vec![0.0, 1.0, 1.1, 3.0, 3.2];
        let mut m = vec![1.0, 50.0, 0.2, 4.0, 0.1];
        limit_slopes_monotone(1.0, &y, &mut m);
        let t = HermiteTable::new(0.0, 1.0, y.clone(), m).unwrap();
        let mut prev = t.eval(0.0).unwrap();
        for k in 1..=400 {
            let v = t.eval(4.0 * k as f64 / 400.0).unwrap();
            assert!(v + 1e-12 >= prev, "interpolant dipped at {k}");
            prev = v;
        }
    }

    #[test]
    fn limiting_zeroes_extrema() {
        let y = vec![0.0, 1.0, 0.0];
        let mut m = vec![2.0, 5.0, -2.0];
        limit_slopes_monotone(1.0, &y, &mut m);
        assert_eq!(m[1], 0.0);
    }
}
