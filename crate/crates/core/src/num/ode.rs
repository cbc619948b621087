//! Adaptive Dormand–Prince 5(4) integration with dense output.
//!
//! The driver exposes each accepted step to a callback as a [`DenseStep`] (the standard
//! fourth-order continuous extension), which callers use for event localization by
//! bisection. The callback may also replace the end state (level-set projection); the
//! first stage is then recomputed instead of reusing the FSAL stage.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
// Error coefficients (5th minus embedded 4th order).
const E1: f64 = B1 - 5179.0 / 57600.0;
const E3: f64 = B3 - 7571.0 / 16695.0;
const E4: f64 = B4 - 393.0 / 640.0;
const E5: f64 = B5 + 92097.0 / 339200.0;
const E6: f64 = B6 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output coefficients.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension over one accepted step.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t_start: f64,
    pub t_end: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    /// Evaluates the interpolant at `t` in `[t_start, t_end]` (ordered either direction).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let h = self.t_end - self.t_start;
        let th = (t - self.t_start) / h;
        let th1 = 1.0 - th;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = self.cont[0][i]
                + th
                    * (self.cont[1][i]
                        + th1 * (self.cont[2][i] + th * (self.cont[3][i] + th1 * self.cont[4][i])));
        }
        y
    }
}

/// What the step callback wants the driver to do next.
pub enum StepControl<const N: usize> {
    Continue,
    /// Replace the accepted end state (e.g. projection back onto an invariant manifold).
    Replace([f64; N]),
    /// Stop integrating after this step.
    Stop,
}

pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_init: Option<f64>,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 2_000_000,
            h_init: None,
        }
    }
}

/// Integrates `dy/dt = rhs(t, y)` from `t0` to `t_end` (either direction).
///
/// `on_step` runs once per accepted step with the dense interpolant.
pub fn integrate<const N: usize>(
    rhs: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &Dopri5Options,
    on_step: &mut dyn FnMut(&DenseStep<N>) -> StepControl<N>,
) -> Result<(f64, [f64; N])> {
    if t_end == t0 {
        return Ok((t0, y0));
    }
    let dir = (t_end - t0).signum();
    let span = (t_end - t0).abs();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = dir * opts.h_init.map_or(1e-6 * span.max(1e-6), f64::abs);
    let mut n_steps = 0usize;

    loop {
        if n_steps >= opts.max_steps {
            return Err(Error::Numerical(format!(
                "ODE driver exceeded {} steps at t={t}",
                opts.max_steps
            )));
        }
        n_steps += 1;
        // Do not step past the end point.
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        let mut y2 = [0.0; N];
        for i in 0..N {
            y2[i] = y[i] + h * A21 * k1[i];
        }
        let k2 = rhs(t + C2 * h, &y2);
        let mut y3 = [0.0; N];
        for i in 0..N {
            y3[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = rhs(t + C3 * h, &y3);
        let mut y4 = [0.0; N];
        for i in 0..N {
            y4[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = rhs(t + C4 * h, &y4);
        let mut y5 = [0.0; N];
        for i in 0..N {
            y5[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = rhs(t + C5 * h, &y5);
        let mut y6 = [0.0; N];
        for i in 0..N {
            y6[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = rhs(t + h, &y6);
        let mut y_new = [0.0; N];
        for i in 0..N {
            y_new[i] =
                y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let k7 = rhs(t + h, &y_new);

        let mut err_sq = 0.0;
        let mut finite = true;
        for i in 0..N {
            if !y_new[i].is_finite() {
                finite = false;
                break;
            }
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / N as f64).sqrt();

        if !finite || err > 1.0 {
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Numerical(format!(
                    "ODE step size underflow at t={t} (err {err:.3e})"
                )));
            }
            let fac = if finite {
                (0.9 * err.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h *= fac;
            continue;
        }

        // Accepted: build the dense interpolant.
        let mut cont = [[0.0; N]; 5];
        for i in 0..N {
            let ydiff = y_new[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            cont[0][i] = y[i];
            cont[1][i] = ydiff;
            cont[2][i] = bspl;
            cont[3][i] = ydiff - h * k7[i] - bspl;
            cont[4][i] = h
                * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        let dense = DenseStep {
            t_start: t,
            t_end: t + h,
            cont,
        };
        t += h;
        y = y_new;
        let mut fsal = Some(k7);
        match on_step(&dense) {
            StepControl::Continue => {}
            StepControl::Replace(ynew) => {
                y = ynew;
                fsal = None;
            }
            StepControl::Stop => return Ok((t, y)),
        }
        if (t - t_end) * dir >= 0.0 {
            return Ok((t, y));
        }
        k1 = match fsal {
            Some(k) => k,
            None => rhs(t, &y),
        };
        h *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
    }
}
