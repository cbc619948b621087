//! Continuous flow-field evaluation on top of a solved wave.
//!
//! The solved height grid h(q, p) is interpolated bicubically and inverted in p
//! on demand, turning streamline coordinates back into physical ones. All moving
//! frame quantities derive from the stream function ψ = -p through the jet of h:
//!
//!   ψ_y = -1/h_p          ψ_x  = h_q/h_p
//!   ψ_yy = h_pp/h_p³      ψ_xy = (h_pq h_p - h_pp h_q)/h_p³
//!   ψ_xx = (h_qq h_p² - 2 h_q h_pq h_p + h_q² h_pp)/h_p³
//!
//! with u = c + ψ_y and v = -ψ_x. The wave is even in x, so only the half grid
//! is stored and queries at x < 0 mirror the sign of the odd quantities. Beyond
//! the far end of the grid the field is exactly x-independent: a C² quintic ramp
//! just inside the boundary stitches the interpolant onto its own far column, so
//! trajectories leave the domain into a genuinely laminar flow.

use crate::error::{Error, Result};
use crate::num::bicubic::Bicubic;
use crate::wave::{SolitaryWave, WaveGrid};

/// Inversion stop: |h - target| below this times the depth scale.
const INVERT_TOL: f64 = 1e-13;
/// Slack (times depth) accepted outside the fluid before a query is rejected.
const DOMAIN_SLACK: f64 = 1e-9;
/// Width of the stitching ramp as a fraction of the half length (at least 4 dq).
const RAMP_FRACTION: f64 = 0.02;

/// Stream function value and derivatives at one point (moving frame).
#[derive(Debug, Clone, Copy)]
pub struct PsiJet {
    pub psi: f64,
    pub psi_x: f64,
    pub psi_y: f64,
    pub psi_xx: f64,
    pub psi_xy: f64,
    pub psi_yy: f64,
}

impl PsiJet {
    /// Still-frame velocity for wave speed `c`.
    pub fn velocity(&self, c: f64) -> (f64, f64) {
        (c + self.psi_y, -self.psi_x)
    }

    /// Horizontal velocity relative to the wave (= u - c, always negative).
    pub fn u_rel(&self) -> f64 {
        self.psi_y
    }

    pub fn v(&self) -> f64 {
        -self.psi_x
    }
}

/// Height-function jet in streamline coordinates (internal).
#[derive(Debug, Clone, Copy)]
struct HJet {
    h: f64,
    hq: f64,
    hp: f64,
    hqq: f64,
    hpq: f64,
    hpp: f64,
}

#[derive(Debug, Clone)]
pub struct FlowField {
    table: Bicubic,
    grid: WaveGrid,
    /// Far-field surface height above the bed (the vertical datum: y = h - depth).
    depth: f64,
    /// Bernoulli constant of the far column (datum-consistent).
    lambda_far: f64,
    ramp_start: f64,
}

fn quintic_smoothstep(t: f64) -> (f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        t3 * (6.0 * t2 - 15.0 * t + 10.0),
        30.0 * t2 * (t2 - 2.0 * t + 1.0),
        60.0 * t * (2.0 * t2 - 3.0 * t + 1.0),
    )
}

impl FlowField {
    pub fn new(wave: &SolitaryWave) -> Self {
        let g = wave.grid;
        let table = Bicubic::new(0.0, g.dq, g.p0, g.dp, g.m, g.np, &wave.h);
        let ramp_width = (RAMP_FRACTION * g.half_length).max(4.0 * g.dq);
        FlowField {
            table,
            grid: g,
            depth: wave.depth,
            lambda_far: wave.lambda_far,
            ramp_start: g.half_length - ramp_width,
        }
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn half_length(&self) -> f64 {
        self.grid.half_length
    }

    pub fn lambda_far(&self) -> f64 {
        self.lambda_far
    }

    /// Start of the stitching ramp; field values inside |x| < ramp_start are pure
    /// interpolant, beyond the half length they are exactly x-independent.
    pub fn ramp_start(&self) -> f64 {
        self.ramp_start
    }

    pub fn p_bed(&self) -> f64 {
        self.grid.p0
    }

    /// Far-column jet: the last grid column continued as an x-independent flow.
    fn far_jet(&self, p: f64) -> HJet {
        let j = self.table.jet(self.grid.half_length, p);
        HJet {
            h: j.f,
            hq: 0.0,
            hp: j.fy,
            hqq: 0.0,
            hpq: 0.0,
            hpp: j.fyy,
        }
    }

    /// Height-function jet at station q ≥ 0 (blend-aware).
    fn h_jet(&self, q: f64, p: f64) -> HJet {
        if q >= self.grid.half_length {
            return self.far_jet(p);
        }
        let j = self.table.jet(q, p);
        let near = HJet {
            h: j.f,
            hq: j.fx,
            hp: j.fy,
            hqq: j.fxx,
            hpq: j.fxy,
            hpp: j.fyy,
        };
        if q <= self.ramp_start {
            return near;
        }
        let w = self.grid.half_length - self.ramp_start;
        let (s, s1t, s2t) = quintic_smoothstep((q - self.ramp_start) / w);
        let (s1, s2) = (s1t / w, s2t / (w * w));
        let far = self.far_jet(p);
        HJet {
            h: (1.0 - s) * near.h + s * far.h,
            hq: (1.0 - s) * near.hq + s1 * (far.h - near.h),
            hqq: (1.0 - s) * near.hqq - 2.0 * s1 * near.hq + s2 * (far.h - near.h),
            hp: (1.0 - s) * near.hp + s * far.hp,
            hpq: (1.0 - s) * near.hpq + s1 * (far.hp - near.hp),
            hpp: (1.0 - s) * near.hpp + s * far.hpp,
        }
    }

    /// Surface elevation η(x) relative to the far-field level.
    pub fn surface_height(&self, x: f64) -> f64 {
        self.h_jet(x.abs(), 0.0).h - self.depth
    }

    /// Surface elevation with its first two x-derivatives: (η, η′, η″).
    pub fn surface_jet(&self, x: f64) -> (f64, f64, f64) {
        let j = self.h_jet(x.abs(), 0.0);
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        (j.h - self.depth, sign * j.hq, j.hqq)
    }

    /// Bed level (constant).
    pub fn bed_height(&self) -> f64 {
        -self.depth
    }

    /// Inverts the monotone map p ↦ h(q, p) for `target` already clamped into
    /// [0, h(q, 0)]. Guarded Newton with a bisection bracket; the bracket shrink
    /// makes the loop a guaranteed success.
    fn invert_in_column(&self, q: f64, target: f64, surface: f64) -> f64 {
        if target <= 0.0 {
            return self.grid.p0;
        }
        if target >= surface {
            return 0.0;
        }
        let scale = self.depth.max(1.0);
        let (mut lo, mut hi) = (self.grid.p0, 0.0);
        let mut p = self.grid.p0 * (1.0 - target / surface);
        for _ in 0..90 {
            let j = self.h_jet(q, p);
            let f = j.h - target;
            if f.abs() <= INVERT_TOL * scale {
                return p;
            }
            if f > 0.0 {
                hi = p;
            } else {
                lo = p;
            }
            let mut next = p - f / j.hp;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - p).abs() <= f64::EPSILON * p.abs().max(1.0) {
                return next;
            }
            p = next;
        }
        p
    }

    /// Streamline label at a physical point: solves h(q, p) = y + depth for p.
    pub fn p_at(&self, x: f64, y: f64) -> Result<f64> {
        let q = x.abs();
        let slack = DOMAIN_SLACK * self.depth.max(1.0);
        let target = y + self.depth;
        let surface = self.h_jet(q, 0.0).h;
        if target < -slack || target > surface + slack {
            return Err(Error::Domain(format!(
                "point (x = {x:.6}, y = {y:.6}) lies outside the fluid \
                 (bed {:.6}, surface {:.6})",
                -self.depth,
                surface - self.depth
            )));
        }
        Ok(self.invert_in_column(q, target.clamp(0.0, surface), surface))
    }

    /// Streamline label with the query clamped into the fluid. ODE stage points
    /// may momentarily poke past the surface; this keeps the right-hand side
    /// total so the step controller can do its job.
    pub fn p_at_clamped(&self, x: f64, y: f64) -> f64 {
        let q = x.abs();
        let surface = self.h_jet(q, 0.0).h;
        let target = (y + self.depth).clamp(0.0, surface);
        self.invert_in_column(q, target, surface)
    }

    /// Full stream-function jet at a physical point.
    pub fn jet_at(&self, x: f64, y: f64) -> Result<PsiJet> {
        let p = self.p_at(x, y)?;
        Ok(self.jet_at_p(x, p))
    }

    /// Stream-function jet at station x on streamline p (no inversion).
    pub fn jet_at_p(&self, x: f64, p: f64) -> PsiJet {
        let hj = self.h_jet(x.abs(), p);
        let hp = hj.hp;
        let hp3 = hp * hp * hp;
        let mut jet = PsiJet {
            psi: -p,
            psi_x: hj.hq / hp,
            psi_y: -1.0 / hp,
            psi_xx: (hj.hqq * hp * hp - 2.0 * hj.hq * hj.hpq * hp + hj.hq * hj.hq * hj.hpp) / hp3,
            psi_xy: (hj.hpq * hp - hj.hpp * hj.hq) / hp3,
            psi_yy: hj.hpp / hp3,
        };
        if x < 0.0 {
            jet.psi_x = -jet.psi_x;
            jet.psi_xy = -jet.psi_xy;
        }
        jet
    }

    /// Physical height of streamline p at station x.
    pub fn height_at_p(&self, x: f64, p: f64) -> f64 {
        self.h_jet(x.abs(), p).h - self.depth
    }

    /// Still-frame velocity at a point for wave speed `c`.
    pub fn velocity(&self, x: f64, y: f64, c: f64) -> Result<(f64, f64)> {
        Ok(self.jet_at(x, y)?.velocity(c))
    }

    /// Far-field height of the streamline through (0, y0): the asymptote every
    /// particle path above that streamline approaches from above.
    pub fn asymptote(&self, y0: f64) -> Result<f64> {
        let p = self.p_at(0.0, y0)?;
        Ok(self.far_jet(p).h - self.depth)
    }

    /// Streamline label of a far-field height (inverts the far column).
    pub fn p_at_far_height(&self, y_far: f64) -> Result<f64> {
        let scale = self.depth.max(1.0);
        let target = y_far + self.depth;
        if target < -DOMAIN_SLACK * scale || target > self.depth + DOMAIN_SLACK * scale {
            return Err(Error::Domain(format!(
                "far-field height {y_far:.6} outside [-depth, 0]"
            )));
        }
        let target = target.clamp(0.0, self.depth);
        if target <= 0.0 {
            return Ok(self.grid.p0);
        }
        if target >= self.depth {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (self.grid.p0, 0.0);
        let mut p = self.grid.p0 * (1.0 - target / self.depth);
        for _ in 0..90 {
            let j = self.far_jet(p);
            let f = j.h - target;
            if f.abs() <= INVERT_TOL * scale {
                break;
            }
            if f > 0.0 {
                hi = p;
            } else {
                lo = p;
            }
            let mut next = p - f / j.hp;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - p).abs() <= f64::EPSILON * p.abs().max(1.0) {
                p = next;
                break;
            }
            p = next;
        }
        Ok(p)
    }

    /// Crest-line height of the streamline that sits at `y_far` in the far field
    /// (the inverse of `asymptote`).
    pub fn asymptote_inverse(&self, y_far: f64) -> Result<f64> {
        let p = self.p_at_far_height(y_far)?;
        Ok(self.h_jet(0.0, p).h - self.depth)
    }

    /// Relative flow speed |u - c| in the far field at height y.
    pub fn far_relative_speed(&self, y: f64) -> Result<f64> {
        let p = self.p_at_far_height(y)?;
        Ok(1.0 / self.far_jet(p).hp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vorticity::VorticityFunction;
    use crate::wave::{build_wave, SolverGrid, WaveConfig};

    const G: f64 = 9.8;
    const P0: f64 = -1.0;

    fn test_wave(vf: VorticityFunction) -> SolitaryWave {
        build_wave(&WaveConfig {
            vorticity: vf,
            p0: P0,
            g: G,
            epsilon: 0.02,
            grid: SolverGrid {
                nq: 201,
                np: 21,
                half_length_depths: 20.0,
            },
        })
        .unwrap()
    }

    #[test]
    fn crest_line_and_bed_have_no_vertical_velocity() {
        let wave = test_wave(VorticityFunction::Constant { omega0: -1.0 });
        let field = FlowField::new(&wave);
        let d = field.depth();
        for frac in [0.999, 0.7, 0.4, 0.1, 0.0] {
            let y = -d + frac * (field.surface_height(0.0) + d);
            let v = field.jet_at(0.0, y).unwrap().v();
            assert!(v.abs() < 1e-12, "v = {v} on the crest line at y = {y}");
        }
        for x in [-6.0, -1.3, 0.4, 2.0, 5.5] {
            let v = field.jet_at(x, -d).unwrap().v();
            assert!(v.abs() < 1e-12, "v = {v} on the bed at x = {x}");
        }
    }

    #[test]
    fn vertical_velocity_is_odd_and_signed_by_side() {
        let wave = test_wave(VorticityFunction::Constant { omega0: -1.0 });
        let field = FlowField::new(&wave);
        for x in [0.5, 1.5, 3.0] {
            for yfrac in [0.2, 0.6, 0.95] {
                let y = -field.depth() + yfrac * (field.surface_height(x) + field.depth());
                let jr = field.jet_at(x, y).unwrap();
                let jl = field.jet_at(-x, y).unwrap();
                assert!(jr.v() > 0.0, "v should be positive at x = {x} > 0");
                assert!((jl.v() + jr.v()).abs() < 1e-13, "v must be odd in x");
                assert!((jl.u_rel() - jr.u_rel()).abs() < 1e-13, "u even in x");
            }
        }
    }

    #[test]
    fn surface_and_bed_streamlines_carry_their_labels() {
        let wave = test_wave(VorticityFunction::Affine { a: -2.0, b: -1.0 });
        let field = FlowField::new(&wave);
        for x in [0.0, 0.9, 2.7, 6.0] {
            let eta = field.surface_height(x);
            assert!(field.p_at(x, eta).unwrap().abs() < 1e-10);
            let p_bed = field.p_at(x, -field.depth()).unwrap();
            assert!((p_bed - P0).abs() < 1e-10);
            let jet = field.jet_at(x, eta).unwrap();
            assert!(jet.psi.abs() < 1e-10, "ψ = {} on the surface", jet.psi);
        }
    }

    #[test]
    fn jet_matches_finite_differences_of_psi() {
        let wave = test_wave(VorticityFunction::Constant { omega0: -1.0 });
        let field = FlowField::new(&wave);
        let probes = [(0.63, -0.11), (1.8, -0.31), (4.2, -0.05), (-2.3, -0.22)];
        let e = 1e-5;
        for (x, y) in probes {
            let j = field.jet_at(x, y).unwrap();
            let psi = |x: f64, y: f64| -field.p_at(x, y).unwrap();
            let fd_x = (psi(x + e, y) - psi(x - e, y)) / (2.0 * e);
            let fd_y = (psi(x, y + e) - psi(x, y - e)) / (2.0 * e);
            assert!((j.psi_x - fd_x).abs() < 1e-6, "ψ_x at ({x},{y})");
            assert!((j.psi_y - fd_y).abs() < 1e-6, "ψ_y at ({x},{y})");
            let fd_xy = (field.jet_at(x, y + e).unwrap().psi_x
                - field.jet_at(x, y - e).unwrap().psi_x)
                / (2.0 * e);
            let fd_xx =
                (field.jet_at(x + e, y).unwrap().psi_x - field.jet_at(x - e, y).unwrap().psi_x)
                    / (2.0 * e);
            let fd_yy =
                (field.jet_at(x, y + e).unwrap().psi_y - field.jet_at(x, y - e).unwrap().psi_y)
                    / (2.0 * e);
            assert!((j.psi_xy - fd_xy).abs() < 1e-5, "ψ_xy at ({x},{y})");
            assert!((j.psi_xx - fd_xx).abs() < 1e-5, "ψ_xx at ({x},{y})");
            assert!((j.psi_yy - fd_yy).abs() < 1e-5, "ψ_yy at ({x},{y})");
        }
    }

    #[test]
    fn asymptote_fixes_surface_and_bed() {
        let wave = test_wave(VorticityFunction::Constant { omega0: -1.0 });
        let field = FlowField::new(&wave);
        let crest = field.surface_height(0.0);
        assert!(field.asymptote(crest).unwrap().abs() < 1e-10);
        assert!((field.asymptote(-field.depth()).unwrap() + field.depth()).abs() < 1e-12);
        // Interior streamlines settle strictly below their crest height.
        for yfrac in [0.25, 0.5, 0.75] {
            let y0 = -field.depth() + yfrac * (crest + field.depth());
            let l = field.asymptote(y0).unwrap();
            assert!(l < y0, "asymptote {l} should sit below the crest height {y0}");
            let back = field.asymptote_inverse(l).unwrap();
            assert!((back - y0).abs() < 1e-9, "round trip {back} vs {y0}");
        }
    }

    #[test]
    fn field_is_laminar_beyond_the_grid() {
        let wave = test_wave(VorticityFunction::Affine { a: -2.0, b: -1.0 });
        let field = FlowField::new(&wave);
        let l = field.half_length();
        for y in [-0.05, -0.2, -0.4] {
            let a = field.jet_at(l + 0.5, y).unwrap();
            let b = field.jet_at(l + 40.0, y).unwrap();
            assert_eq!(a.psi_y, b.psi_y, "far field must be x-independent");
            assert_eq!(a.psi_x, 0.0);
            assert_eq!(a.psi_xx, 0.0);
            assert_eq!(a.psi_xy, 0.0);
        }
        // C0 across the stitch at the grid boundary.
        for y in [-0.1, -0.3] {
            let inner = field.jet_at(l - 1e-9, y).unwrap();
            let outer = field.jet_at(l + 1e-9, y).unwrap();
            assert!((inner.psi_y - outer.psi_y).abs() < 1e-8);
            assert!((inner.psi_x - outer.psi_x).abs() < 1e-8);
        }
    }

    #[test]
    fn relative_speed_bracket_in_far_field() {
        let wave = test_wave(VorticityFunction::Constant { omega0: -1.0 });
        let field = FlowField::new(&wave);
        // w(y) decreases from bed to surface and spans [√λ_far, √(λ_far+2Γ(p0))].
        // Tolerances are O(dp³): the interpolant's boundary derivative is a
        // different cubic estimator than the solver's surface closure.
        let w_surf = field.far_relative_speed(0.0).unwrap();
        let w_bed = field.far_relative_speed(-field.depth()).unwrap();
        assert!((w_surf - field.lambda_far().sqrt()).abs() < 5e-3);
        assert!(w_bed > w_surf);
        let gamma_bed = wave.vorticity.big_gamma(P0).unwrap();
        let w_bed_expect = (wave.lambda_far + 2.0 * gamma_bed).sqrt();
        assert!(
            (w_bed - w_bed_expect).abs() < 5e-3,
            "w_bed {w_bed} vs {w_bed_expect}"
        );
    }
}
