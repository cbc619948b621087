//! Drift-pattern prediction and observation.
//!
//! For a wave observed in a frame of speed c the horizontal velocity is
//! u = c - w, with w the relative flow speed. Far from the crest w grows with
//! depth, so c against the far-field speed range splits the behavior into three
//! regimes: Favorable (c at least the bed far speed: u > 0 everywhere), Adverse
//! (c at most the surface far speed: u < 0 away from the crest at every depth),
//! and Mixed in between. Two thresholds organize the mixed picture:
//!
//!   y*: the far-field height where u vanishes (above it u_far > 0),
//!   ỹ:  the crest-line height where u vanishes (above it u(0, y) > 0).
//!
//! A particle labeled by its crest height Y0 then drifts in one of the classic
//! patterns: a forward hump when its far level stays above y*, a single leftward
//! loop when it dips below y* but still outruns the frame under the crest
//! (Y0 > ỹ), and a backward hump when the crest never pushes it forward. Bed
//! particles slide straight or dart briefly forward as the crest passes.
//! Prediction reads only the thresholds; observation integrates the path and
//! collapses the sign sequence of u, and the two must agree.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FlowField;
use crate::kinematics::{trace_particle, ParticlePath, TraceOptions};

/// |u| below this counts as "at rest" when collapsing observed sign runs.
const SIGN_TOL: f64 = 1e-9;
/// Sweep keep-out half width around pattern boundaries, relative to depth.
const BOUNDARY_BAND: f64 = 1e-6;
/// Heights within this of the bed (relative to depth) are bed particles.
const BED_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// c ≥ far-field speed at the bed: the whole fluid moves forward.
    Favorable,
    /// c between the far-field surface and bed speeds.
    Mixed,
    /// c ≤ far-field speed at the surface.
    Adverse,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::Favorable => "favorable",
            Regime::Mixed => "mixed",
            Regime::Adverse => "adverse",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftPattern {
    HumpRight,
    LoopLeft,
    HumpLeft,
    BedStraightRight,
    BedStraightLeft,
    BedBackwardForwardLeft,
}

impl fmt::Display for DriftPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DriftPattern::HumpRight => "hump-right",
            DriftPattern::LoopLeft => "loop-left",
            DriftPattern::HumpLeft => "hump-left",
            DriftPattern::BedStraightRight => "bed-straight-right",
            DriftPattern::BedStraightLeft => "bed-straight-left",
            DriftPattern::BedBackwardForwardLeft => "bed-backward-forward-left",
        };
        f.write_str(s)
    }
}

impl DriftPattern {
    pub fn is_bed(&self) -> bool {
        matches!(
            self,
            DriftPattern::BedStraightRight
                | DriftPattern::BedStraightLeft
                | DriftPattern::BedBackwardForwardLeft
        )
    }
}

/// Everything the prediction tree needs for one (field, c) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Thresholds {
    pub c: f64,
    pub regime: Regime,
    pub w_far_surface: f64,
    pub w_far_bed: f64,
    /// u at the crest, on the surface and on the bed.
    pub u_crest_top: f64,
    pub u_crest_bed: f64,
    /// Far-field height where u vanishes (strictly mixed frames only).
    pub y_star: Option<f64>,
    /// Crest-line height where u vanishes, when u changes sign there.
    pub y_tilde: Option<f64>,
}

fn bisect_height(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    // f < 0 at lo, f > 0 at hi; standard bisection to floating-point resolution.
    for _ in 0..120 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if f(m)? > 0.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn thresholds(field: &FlowField, c: f64) -> Result<Thresholds> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "frame speed c = {c} must be positive"
        )));
    }
    let depth = field.depth();
    let eta0 = field.surface_height(0.0);
    let w_far_surface = field.far_relative_speed(0.0)?;
    let w_far_bed = field.far_relative_speed(-depth)?;
    let u_at_crest = |y: f64| -> Result<f64> {
        let p = field.p_at(0.0, y)?;
        Ok(c + field.jet_at_p(0.0, p).u_rel())
    };
    let u_crest_top = u_at_crest(eta0)?;
    let u_crest_bed = u_at_crest(-depth)?;

    let regime = if c >= w_far_bed {
        Regime::Favorable
    } else if c <= w_far_surface {
        Regime::Adverse
    } else {
        Regime::Mixed
    };

    // Far speed decreases with height, so u_far = c - w_far increases: bisect
    // for its zero when c lies strictly inside the far speed range.
    let y_star = if regime == Regime::Mixed {
        Some(bisect_height(-depth, 0.0, |y| {
            Ok(c - field.far_relative_speed(y)?)
        })?)
    } else {
        None
    };
    // Same monotonicity on the crest line.
    let y_tilde = if u_crest_bed < 0.0 && u_crest_top > 0.0 {
        Some(bisect_height(-depth, eta0, u_at_crest)?)
    } else {
        None
    };

    Ok(Thresholds {
        c,
        regime,
        w_far_surface,
        w_far_bed,
        u_crest_top,
        u_crest_bed,
        y_star,
        y_tilde,
    })
}

/// Predicted drift pattern for the particle with crest height y0.
pub fn predict(field: &FlowField, th: &Thresholds, y0: f64) -> Result<DriftPattern> {
    let depth = field.depth();
    if y0 <= -depth + BED_TOL * depth.max(1.0) {
        return Ok(match th.regime {
            Regime::Favorable => DriftPattern::BedStraightRight,
            // u on the bed peaks under the crest: a positive peak means a
            // forward dart inside otherwise backward motion.
            _ if th.u_crest_bed > 0.0 => DriftPattern::BedBackwardForwardLeft,
            _ => DriftPattern::BedStraightLeft,
        });
    }
    match th.regime {
        Regime::Favorable => Ok(DriftPattern::HumpRight),
        Regime::Mixed => {
            let y_star = th.y_star.ok_or_else(|| {
                Error::Hypothesis(
                    "mixed frame without a far-field zero height; \
                     far speed range does not bracket c"
                        .into(),
                )
            })?;
            let l = field.asymptote(y0)?;
            if l >= y_star {
                Ok(DriftPattern::HumpRight)
            } else if th.y_tilde.is_none_or(|yt| y0 > yt) {
                Ok(DriftPattern::LoopLeft)
            } else {
                Ok(DriftPattern::HumpLeft)
            }
        }
        Regime::Adverse => {
            if th.y_tilde.is_some_and(|yt| y0 > yt) {
                Ok(DriftPattern::LoopLeft)
            } else if th.u_crest_top > 0.0 && th.u_crest_bed > 0.0 {
                Err(Error::Hypothesis(format!(
                    "adverse frame with forward crest column: u(0, surface) = {:.3e}, \
                     u(0, bed) = {:.3e}",
                    th.u_crest_top, th.u_crest_bed
                )))
            } else {
                Ok(DriftPattern::HumpLeft)
            }
        }
    }
}

/// Collapses the observed sign structure of u along a traced path.
pub fn observe(path: &ParticlePath, depth: f64) -> Result<DriftPattern> {
    let bed = path.y0 <= -depth + BED_TOL * depth.max(1.0);
    let u_crest = path
        .samples
        .iter()
        .min_by(|a, b| {
            (a.t - path.t0.t)
                .abs()
                .partial_cmp(&(b.t - path.t0.t).abs())
                .unwrap()
        })
        .map(|s| s.u)
        .unwrap_or(0.0);
    let u_start = path.samples.first().map(|s| s.u).unwrap_or(0.0);
    let u_end = path.samples.last().map(|s| s.u).unwrap_or(0.0);

    let pattern = match path.u_zeros.len() {
        0 => {
            if u_crest > SIGN_TOL {
                if bed {
                    DriftPattern::BedStraightRight
                } else {
                    DriftPattern::HumpRight
                }
            } else if u_crest < -SIGN_TOL {
                if bed {
                    DriftPattern::BedStraightLeft
                } else {
                    DriftPattern::HumpLeft
                }
            } else {
                return Err(Error::Hypothesis(format!(
                    "horizontal velocity never leaves the rest band: u(t0) = {u_crest:.3e}"
                )));
            }
        }
        2 => {
            if u_crest > 0.0 && u_start < SIGN_TOL && u_end < SIGN_TOL {
                if bed {
                    DriftPattern::BedBackwardForwardLeft
                } else {
                    DriftPattern::LoopLeft
                }
            } else {
                return Err(Error::Hypothesis(format!(
                    "two u-zeros but not a backward-forward-backward run \
                     (u start {u_start:.3e}, crest {u_crest:.3e}, end {u_end:.3e})"
                )));
            }
        }
        n => {
            return Err(Error::Hypothesis(format!(
                "unexpected number of u-zeros ({n}) along the path of y0 = {}",
                path.y0
            )));
        }
    };

    // For one-signed velocities the net displacement must agree. Looping paths
    // are excluded: their backward phases keep accumulating for all time, so a
    // finite window near the band edge can legitimately end up net-forward.
    let drift_constraint = match pattern {
        DriftPattern::HumpRight | DriftPattern::BedStraightRight => Some(true),
        DriftPattern::HumpLeft | DriftPattern::BedStraightLeft => Some(false),
        DriftPattern::LoopLeft | DriftPattern::BedBackwardForwardLeft => None,
    };
    if let Some(forward) = drift_constraint {
        if forward != (path.drift > 0.0) {
            return Err(Error::Hypothesis(format!(
                "pattern {pattern} with net displacement {:.3e}",
                path.drift
            )));
        }
    }
    Ok(pattern)
}

/// One particle's predicted and observed pattern, with the tree inputs kept for
/// diagnosis on mismatch.
#[derive(Debug, Clone)]
pub struct ParticleCheck {
    pub y0: f64,
    pub asymptote: f64,
    pub predicted: DriftPattern,
    pub observed: DriftPattern,
    pub consistent: bool,
    pub drift: f64,
    pub loop_size: Option<f64>,
    pub path: ParticlePath,
}

pub fn check_particle(
    field: &FlowField,
    th: &Thresholds,
    y0: f64,
    opts: &TraceOptions,
) -> Result<ParticleCheck> {
    let predicted = predict(field, th, y0)?;
    let path = trace_particle(field, th.c, y0, opts)?;
    let observed = observe(&path, field.depth())?;
    Ok(ParticleCheck {
        y0,
        asymptote: path.asymptote,
        predicted,
        observed,
        consistent: predicted == observed,
        drift: path.drift,
        loop_size: path.loop_size(),
        path,
    })
}

/// Uniform interior depth sweep of crest heights, nudged off the pattern
/// boundaries so each particle sits strictly inside one band: a path whose
/// extreme u is below the rest tolerance cannot be attributed either way.
pub fn depth_sweep(field: &FlowField, th: &Thresholds, count: usize) -> Result<Vec<f64>> {
    let depth = field.depth();
    let eta0 = field.surface_height(0.0);
    let band = BOUNDARY_BAND * depth.max(1.0);
    let mut boundaries = Vec::new();
    if let Some(yt) = th.y_tilde {
        boundaries.push(yt);
    }
    if let Some(ys) = th.y_star {
        // The loop/hump boundary in crest heights: the streamline whose far
        // level is y*.
        boundaries.push(field.asymptote_inverse(ys)?);
    }
    let mut sweep = Vec::with_capacity(count);
    for k in 0..count {
        let mut y0 = -depth + (eta0 + depth) * (k + 1) as f64 / (count + 1) as f64;
        for &b in &boundaries {
            if (y0 - b).abs() < band {
                y0 = if y0 >= b { b + 2.0 * band } else { b - 2.0 * band };
            }
        }
        sweep.push(y0);
    }
    Ok(sweep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vorticity::VorticityFunction;
    use crate::wave::{build_wave, SolverGrid, WaveConfig};

    const G: f64 = 9.8;
    const P0: f64 = -1.0;

    fn test_field() -> FlowField {
        let wave = build_wave(&WaveConfig {
            vorticity: VorticityFunction::Constant { omega0: -1.0 },
            p0: P0,
            g: G,
            epsilon: 0.02,
            grid: SolverGrid {
                nq: 201,
                np: 21,
                half_length_depths: 20.0,
            },
        })
        .unwrap();
        FlowField::new(&wave)
    }

    #[test]
    fn regimes_split_on_the_far_speed_range() {
        let field = test_field();
        let th_fast = thresholds(&field, 1.05 * field.far_relative_speed(-field.depth()).unwrap())
            .unwrap();
        assert_eq!(th_fast.regime, Regime::Favorable);
        assert!(th_fast.y_star.is_none());
        let th_slow =
            thresholds(&field, 0.95 * field.far_relative_speed(0.0).unwrap()).unwrap();
        assert_eq!(th_slow.regime, Regime::Adverse);
        let c_mid = 0.5 * (th_fast.w_far_surface + th_fast.w_far_bed);
        let th_mid = thresholds(&field, c_mid).unwrap();
        assert_eq!(th_mid.regime, Regime::Mixed);
        let y_star = th_mid.y_star.unwrap();
        assert!(y_star > -field.depth() && y_star < 0.0);
        // At y* the far-field horizontal velocity vanishes.
        assert!((c_mid - field.far_relative_speed(y_star).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn favorable_frame_predicts_forward_humps() {
        let field = test_field();
        let c = 1.05 * field.far_relative_speed(-field.depth()).unwrap();
        let th = thresholds(&field, c).unwrap();
        assert_eq!(
            predict(&field, &th, -0.2).unwrap(),
            DriftPattern::HumpRight
        );
        assert_eq!(
            predict(&field, &th, -field.depth()).unwrap(),
            DriftPattern::BedStraightRight
        );
    }

    #[test]
    fn mixed_frame_partition_is_ordered_by_depth() {
        let field = test_field();
        let c = 0.5
            * (field.far_relative_speed(0.0).unwrap()
                + field.far_relative_speed(-field.depth()).unwrap());
        let th = thresholds(&field, c).unwrap();
        assert_eq!(th.regime, Regime::Mixed);
        let sweep = depth_sweep(&field, &th, 24).unwrap();
        let patterns: Vec<DriftPattern> = sweep
            .iter()
            .map(|&y0| predict(&field, &th, y0).unwrap())
            .collect();
        // Deep-to-shallow the sequence must be a run of each band in order
        // (HumpLeft, then LoopLeft, then HumpRight), with no interleaving.
        let mut stage = 0usize;
        for p in &patterns {
            let s = match p {
                DriftPattern::HumpLeft => 0,
                DriftPattern::LoopLeft => 1,
                DriftPattern::HumpRight => 2,
                other => panic!("interior particle classified {other}"),
            };
            assert!(s >= stage, "pattern bands out of order: {patterns:?}");
            stage = s;
        }
        assert!(patterns.contains(&DriftPattern::HumpRight));
        assert!(patterns.contains(&DriftPattern::LoopLeft));
    }

    #[test]
    fn predictions_match_observations_across_the_sweep() {
        let field = test_field();
        let c = 0.5
            * (field.far_relative_speed(0.0).unwrap()
                + field.far_relative_speed(-field.depth()).unwrap());
        let th = thresholds(&field, c).unwrap();
        let opts = TraceOptions {
            n_samples: 600,
            ..Default::default()
        };
        for y0 in depth_sweep(&field, &th, 9).unwrap() {
            let check = check_particle(&field, &th, y0, &opts).unwrap();
            assert!(
                check.consistent,
                "y0 = {}: predicted {} observed {}",
                y0, check.predicted, check.observed
            );
        }
    }

    #[test]
    fn adverse_frame_is_all_backward_or_looping() {
        let field = test_field();
        let c = 0.95 * field.far_relative_speed(0.0).unwrap();
        let th = thresholds(&field, c).unwrap();
        assert_eq!(th.regime, Regime::Adverse);
        for frac in [0.15, 0.5, 0.9] {
            let p = predict(&field, &th, -frac * field.depth()).unwrap();
            assert!(
                matches!(p, DriftPattern::HumpLeft | DriftPattern::LoopLeft),
                "adverse pattern {p}"
            );
        }
        assert_eq!(
            predict(&field, &th, -field.depth()).unwrap(),
            DriftPattern::BedStraightLeft
        );
    }
}
