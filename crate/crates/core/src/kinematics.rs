//! Particle trajectories, path events, and zero-speed curves.
//!
//! A particle is labeled by its height y0 on the crest line x = 0. In the frame
//! moving with the wave the flow is steady and the particle obeys
//!
//!   ẋ = u - c = ψ_y,    ẏ = v = -ψ_x,
//!
//! so its path is the streamline through (0, y0) and ψ is a first integral.
//! The trace starts ahead of the wave near the grid edge, runs the adaptive
//! integrator until the particle has swept past the crest to the mirror station,
//! and projects each accepted step back onto the streamline (the height function
//! gives the ψ level set in closed form, so the projection is exact). Crest
//! passage and zero-horizontal-velocity times are located by bisection on the
//! dense output. Still-frame positions are recovered as X = x + c·t.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FlowField;
use crate::num::ode::{integrate, DenseStep, Dopri5Options, StepControl};

/// Bisection width for event times, relative to the elapsed time scale.
const EVENT_TIME_TOL: f64 = 1e-11;
/// Interior probes per accepted step when bracketing velocity sign changes.
const EVENT_PROBES: usize = 4;
/// Merge events closer than this (relative to the path duration).
const EVENT_MERGE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceOptions {
    /// Start/end station as a fraction of the half length. Kept inside the far
    /// stitching ramp so the wave tail is small but still strictly positive.
    pub exit_fraction: f64,
    /// Number of equally spaced time samples stored on the path.
    pub n_samples: usize,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Time budget for the trace. `None` sizes it from the far-field speed;
    /// slow paths (speed close to the crest velocity) may need more.
    pub horizon: Option<f64>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            exit_fraction: 0.995,
            n_samples: 1200,
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 2_000_000,
            horizon: None,
        }
    }
}

/// One stored point of a particle path (moving- and still-frame positions).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub x_wave: f64,
    pub x_still: f64,
    pub y: f64,
    pub u: f64,
    pub v: f64,
    pub psi: f64,
}

/// A located path event (crest passage or zero horizontal velocity).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathEvent {
    pub t: f64,
    pub x_wave: f64,
    pub x_still: f64,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct ParticlePath {
    /// Height on the crest line that labels the particle.
    pub y0: f64,
    /// Streamline label ψ = -p of the path.
    pub p_label: f64,
    pub c: f64,
    /// Far-field height the path approaches from above.
    pub asymptote: f64,
    /// Crest passage: the unique time with x(t) = 0.
    pub t0: PathEvent,
    /// Times with u = 0, in increasing order.
    pub u_zeros: Vec<PathEvent>,
    pub t_end: f64,
    pub samples: Vec<PathSample>,
    /// Largest |ψ - ψ0| over the stored samples.
    pub psi_drift_max: f64,
    /// Largest per-step projection correction the integrator needed.
    pub projection_max: f64,
    /// Smallest sample clearance above the asymptote.
    pub min_clearance: f64,
    /// Net still-frame displacement X(t_end) - X(0).
    pub drift: f64,
    pub accepted_steps: usize,
}

impl ParticlePath {
    /// Loop width of a path whose horizontal velocity changes sign twice: the
    /// still-frame distance covered between the moment forward motion starts
    /// (first zero of u) and the moment it ends (last zero).
    pub fn loop_size(&self) -> Option<f64> {
        if self.u_zeros.len() < 2 {
            return None;
        }
        let first = self.u_zeros.first().unwrap();
        let last = self.u_zeros.last().unwrap();
        Some(last.x_still - first.x_still)
    }

    pub fn start(&self) -> &PathSample {
        self.samples.first().expect("path has samples")
    }

    pub fn end(&self) -> &PathSample {
        self.samples.last().expect("path has samples")
    }
}

/// Locates a sign change of `f` inside [a, b] by bisection on the dense output.
fn bisect_time(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, ttol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= ttol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Traces the particle whose streamline passes through (0, y0).
pub fn trace_particle(
    field: &FlowField,
    c: f64,
    y0: f64,
    opts: &TraceOptions,
) -> Result<ParticlePath> {
    if !(opts.exit_fraction > 0.5 && opts.exit_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "exit fraction {} must lie in (0.5, 1)",
            opts.exit_fraction
        )));
    }
    if opts.n_samples < 3 {
        return Err(Error::InvalidArgument(
            "a path needs at least 3 samples".into(),
        ));
    }
    let p_label = field.p_at(0.0, y0)?;
    let asymptote = field.height_at_p(field.half_length() + 1.0, p_label);
    let x_exit = opts.exit_fraction * field.half_length();
    let y_start = field.height_at_p(x_exit, p_label);

    let rhs = move |_t: f64, s: &[f64; 2]| {
        let p = field.p_at_clamped(s[0], s[1]);
        let jet = field.jet_at_p(s[0], p);
        [jet.psi_y, jet.v()]
    };
    let ode_opts = Dopri5Options {
        rtol: opts.rtol,
        atol: opts.atol,
        max_steps: opts.max_steps,
        h_init: None,
    };
    // Generous horizon: |ẋ| ≥ the slowest far-field relative speed on the path.
    let t_horizon = match opts.horizon {
        Some(t) if t > 0.0 => t,
        Some(t) => {
            return Err(Error::InvalidArgument(format!(
                "trace horizon {t} must be positive"
            )))
        }
        None => 4.0 * x_exit / field.far_relative_speed(asymptote)?,
    };

    let mut denses: Vec<DenseStep<2>> = Vec::new();
    let mut projection_max = 0.0_f64;
    integrate(
        &rhs,
        0.0,
        [x_exit, y_start],
        t_horizon,
        &ode_opts,
        &mut |step| {
            denses.push(step.clone());
            let s = step.eval(step.t_end);
            if s[0] <= -x_exit {
                return StepControl::Stop;
            }
            // Exact projection onto the ψ level set: slave y to the streamline.
            let y_on = field.height_at_p(s[0], p_label);
            projection_max = projection_max.max((s[1] - y_on).abs());
            StepControl::Replace([s[0], y_on])
        },
    )?;

    let last = denses.last().ok_or_else(|| {
        Error::Numerical("particle trace produced no accepted steps".into())
    })?;
    if last.eval(last.t_end)[0] > -x_exit {
        return Err(Error::Numerical(format!(
            "particle did not reach the exit station within t = {t_horizon:.3}"
        )));
    }

    // End time: x(t) = -x_exit inside the final step.
    let ttol = EVENT_TIME_TOL * last.t_end.max(1.0);
    let t_end = {
        let f = |t: f64| last.eval(t)[0] + x_exit;
        bisect_time(&f, last.t_start, last.t_end, ttol)
    };

    // Crest passage: x is strictly decreasing, so exactly one step brackets 0.
    let t0 = denses
        .iter()
        .find(|d| d.eval(d.t_start)[0] > 0.0 && d.eval(d.t_end)[0] <= 0.0)
        .map(|d| {
            let f = |t: f64| d.eval(t)[0];
            let t = bisect_time(&f, d.t_start, d.t_end, ttol);
            event_at(field, c, p_label, t, d)
        })
        .ok_or_else(|| Error::Numerical("crest passage not bracketed on the path".into()))?;

    // Zeros of u = c + ψ_y: probe each step interior, bisect each bracket.
    let u_of = |d: &DenseStep<2>, t: f64| {
        let s = d.eval(t);
        let p = field.p_at_clamped(s[0], s[1]);
        c + field.jet_at_p(s[0], p).u_rel()
    };
    let mut u_zeros: Vec<PathEvent> = Vec::new();
    for d in &denses {
        let lo = d.t_start;
        let hi = d.t_end.min(t_end);
        if hi <= lo {
            break;
        }
        let n = EVENT_PROBES + 1;
        let mut t_prev = lo;
        let mut u_prev = u_of(d, t_prev);
        for k in 1..=n {
            let t_k = lo + (hi - lo) * k as f64 / n as f64;
            let u_k = u_of(d, t_k);
            if (u_prev > 0.0) != (u_k > 0.0) {
                let f = |t: f64| u_of(d, t);
                let t_z = bisect_time(&f, t_prev, t_k, ttol);
                let merge = EVENT_MERGE * t_end.max(1.0);
                if u_zeros.last().is_none_or(|e| (t_z - e.t).abs() > merge) {
                    u_zeros.push(event_at(field, c, p_label, t_z, d));
                }
            }
            t_prev = t_k;
            u_prev = u_k;
        }
    }

    // Uniform time samples, each emitted on the ψ level set.
    let mut samples = Vec::with_capacity(opts.n_samples);
    let mut psi_drift_max = 0.0_f64;
    let mut min_clearance = f64::INFINITY;
    let mut cursor = 0usize;
    for k in 0..opts.n_samples {
        let t = t_end * k as f64 / (opts.n_samples - 1) as f64;
        while cursor + 1 < denses.len() && denses[cursor].t_end < t {
            cursor += 1;
        }
        let x = denses[cursor].eval(t)[0];
        let y = field.height_at_p(x, p_label);
        let jet = field.jet_at_p(x, p_label);
        let psi = -field.p_at(x, y)?;
        psi_drift_max = psi_drift_max.max((psi + p_label).abs());
        min_clearance = min_clearance.min(y - asymptote);
        let (u, v) = jet.velocity(c);
        samples.push(PathSample {
            t,
            x_wave: x,
            x_still: x + c * t,
            y,
            u,
            v,
            psi,
        });
    }

    let drift = samples.last().unwrap().x_still - samples[0].x_still;
    Ok(ParticlePath {
        y0,
        p_label,
        c,
        asymptote,
        t0,
        u_zeros,
        t_end,
        samples,
        psi_drift_max,
        projection_max,
        min_clearance,
        drift,
        accepted_steps: denses.len(),
    })
}

fn event_at(field: &FlowField, c: f64, p_label: f64, t: f64, d: &DenseStep<2>) -> PathEvent {
    let x = d.eval(t)[0];
    PathEvent {
        t,
        x_wave: x,
        x_still: x + c * t,
        y: field.height_at_p(x, p_label),
    }
}

/// A point on the zero-speed curve u(x, y; c) = 0 in the half plane x > 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ZeroSpeedPoint {
    pub y: f64,
    pub x: f64,
    /// |u| left at the located point.
    pub residual: f64,
}

/// Extracts the right zero-speed branch on a height sweep (y_lo, y_hi): for each
/// height the unique station x > 0 with u = 0. The left branch is its mirror
/// image. Fails if u does not change sign across [0, 0.9·L] at some height.
pub fn zero_speed_curve(
    field: &FlowField,
    c: f64,
    y_lo: f64,
    y_hi: f64,
    n: usize,
) -> Result<Vec<ZeroSpeedPoint>> {
    if !(y_hi > y_lo) || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "zero-speed sweep needs y_lo < y_hi and n >= 2 (got [{y_lo}, {y_hi}], n = {n})"
        )));
    }
    let x_max = 0.9 * field.half_length();
    let mut points = Vec::with_capacity(n);
    for k in 0..n {
        let y = y_lo + (y_hi - y_lo) * k as f64 / (n - 1) as f64;
        let u_at = |x: f64| -> Result<f64> {
            let p = field.p_at(x, y)?;
            Ok(c + field.jet_at_p(x, p).u_rel())
        };
        let (mut a, mut b) = (0.0, x_max);
        let (ua, ub) = (u_at(a)?, u_at(b)?);
        if !(ua > 0.0 && ub < 0.0) {
            return Err(Error::NoRoot(format!(
                "u does not cross zero on [0, {x_max:.3}] at height {y:.6} \
                 (u(0) = {ua:.3e}, u(end) = {ub:.3e})"
            )));
        }
        for _ in 0..200 {
            if b - a <= 1e-13 * x_max {
                break;
            }
            let m = 0.5 * (a + b);
            if u_at(m)? > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let x = 0.5 * (a + b);
        points.push(ZeroSpeedPoint {
            y,
            x,
            residual: u_at(x)?.abs(),
        });
    }
    Ok(points)
}

/// Heights of the streamline with label p at the given stations.
pub fn streamline_heights(field: &FlowField, p: f64, xs: &[f64]) -> Vec<f64> {
    xs.iter().map(|&x| field.height_at_p(x, p)).collect()
}
