//! Qualitative flow checks on a dense lattice, plus path-level checks.
//!
//! Each check scans the fluid (or a set of traced paths) for the worst violation
//! of one structural property of the flow: where the vertical velocity must
//! vanish, which sign it takes on each side of the crest, how the velocity
//! gradients are signed, monotonicity of the surface and of every streamline,
//! flux constancy across stations, and the surface Bernoulli balance. Results
//! carry the worst value and its location so a failure points at the spot to
//! inspect. Sign checks record the smallest correctly-signed magnitude (pass
//! while it stays positive); equality checks record the largest |residual|
//! (pass while it stays under the stated tolerance).

use serde::{Deserialize, Serialize};

use crate::classify::{Regime, Thresholds};
use crate::error::Result;
use crate::field::FlowField;
use crate::kinematics::ParticlePath;
use crate::par;
use crate::wave::SolitaryWave;

/// Velocity components that must vanish identically (bed and crest line).
const TOL_V_ZERO: f64 = 1e-10;
/// Flux deviation across stations.
const TOL_FLUX: f64 = 1e-8;
/// Surface Bernoulli residual at solver nodes.
const TOL_BERNOULLI: f64 = 1e-8;
/// Final height of a path against its asymptote.
const TOL_PATH_END: f64 = 1e-4;
/// Stream-function conservation along a path.
const TOL_PSI_DRIFT: f64 = 1e-8;
/// Monotone sequences may tie within this.
const TIE_TOL: f64 = 1e-12;
/// Loop sizes may tie within this when compared across depths.
const LOOP_TIE_TOL: f64 = 1e-9;
/// Columns this close to the crest are excluded from odd-sign checks.
const CREST_EXCLUSION: f64 = 1e-9;

/// Gauss–Legendre nodes and weights (7 points, reference interval [-1, 1]).
const GAUSS_X: [f64; 7] = [
    -0.949_107_912_342_758_5,
    -0.741_531_185_599_394_4,
    -0.405_845_151_377_397_2,
    0.0,
    0.405_845_151_377_397_2,
    0.741_531_185_599_394_4,
    0.949_107_912_342_758_5,
];
const GAUSS_W: [f64; 7] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
    0.381_830_050_505_118_9,
    0.279_705_391_489_276_7,
    0.129_484_966_168_869_7,
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    /// Worst value: largest |residual| for equality checks, smallest
    /// correctly-signed magnitude for sign checks.
    pub worst: f64,
    pub tolerance: f64,
    /// Location of the worst value.
    pub x: f64,
    pub y: f64,
}

impl CheckResult {
    fn equality(name: &str, worst: &Peak, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            pass: worst.value <= tolerance,
            worst: worst.value,
            tolerance,
            x: worst.x,
            y: worst.y,
        }
    }

    fn sign(name: &str, worst: &Trough, slack: f64) -> Self {
        CheckResult {
            name: name.into(),
            pass: worst.value > -slack,
            worst: worst.value,
            tolerance: slack,
            x: worst.x,
            y: worst.y,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Sampling density for the lattice checks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct LatticeSpec {
    pub nx: usize,
    pub ny: usize,
    /// Horizontal extent as a fraction of the half length.
    pub span_fraction: f64,
    /// Stations for the flux check.
    pub flux_stations: usize,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        LatticeSpec {
            nx: 201,
            ny: 41,
            span_fraction: 0.9,
            flux_stations: 20,
        }
    }
}

/// Running maximum of a magnitude with its location.
#[derive(Debug, Clone, Copy)]
struct Peak {
    value: f64,
    x: f64,
    y: f64,
}

impl Peak {
    fn new() -> Self {
        Peak {
            value: 0.0,
            x: f64::NAN,
            y: f64::NAN,
        }
    }

    fn take(&mut self, v: f64, x: f64, y: f64) {
        if v.abs() > self.value {
            *self = Peak {
                value: v.abs(),
                x,
                y,
            };
        }
    }

    fn merge(&mut self, other: &Peak) {
        if other.value > self.value {
            *self = *other;
        }
    }
}

/// Running minimum of a signed quantity with its location.
#[derive(Debug, Clone, Copy)]
struct Trough {
    value: f64,
    x: f64,
    y: f64,
}

impl Trough {
    fn new() -> Self {
        Trough {
            value: f64::INFINITY,
            x: f64::NAN,
            y: f64::NAN,
        }
    }

    fn take(&mut self, v: f64, x: f64, y: f64) {
        if v < self.value {
            *self = Trough { value: v, x, y };
        }
    }

    fn merge(&mut self, other: &Trough) {
        if other.value < self.value {
            *self = *other;
        }
    }
}

#[derive(Debug, Clone)]
struct ColumnStats {
    eta: f64,
    v_bed: Peak,
    v_sign: Trough,
    vy_bed_sign: Trough,
    ux_sign: Trough,
    uy_min: Trough,
    u_min: Trough,
}

fn column_stats(field: &FlowField, x: f64, ny: usize) -> Result<ColumnStats> {
    let depth = field.depth();
    let eta = field.surface_height(x);
    let mut st = ColumnStats {
        eta,
        v_bed: Peak::new(),
        v_sign: Trough::new(),
        vy_bed_sign: Trough::new(),
        ux_sign: Trough::new(),
        uy_min: Trough::new(),
        u_min: Trough::new(),
    };
    let side = if x > 0.0 { 1.0 } else { -1.0 };
    let off_crest = x.abs() > CREST_EXCLUSION * field.half_length().max(1.0);
    for j in 0..ny {
        let y = -depth + (eta + depth) * j as f64 / (ny - 1) as f64;
        let jet = field.jet_at(x, y)?;
        let (u_rel, v) = (jet.u_rel(), jet.v());
        let (u_x, u_y) = (jet.psi_xy, jet.psi_yy);
        if j == 0 {
            st.v_bed.take(v, x, y);
            if off_crest {
                st.vy_bed_sign.take(side * -jet.psi_xy, x, y);
            }
        } else if off_crest {
            st.v_sign.take(side * v, x, y);
        }
        if off_crest {
            st.ux_sign.take(-side * u_x, x, y);
        }
        st.uy_min.take(u_y, x, y);
        // Worst relative speed; the caller adds c to test u > 0.
        st.u_min.take(u_rel, x, y);
    }
    Ok(st)
}

/// Runs every lattice check for one (wave, field, frame) triple.
pub fn verify_field(
    wave: &SolitaryWave,
    field: &FlowField,
    th: &Thresholds,
    lattice: &LatticeSpec,
) -> Result<VerificationReport> {
    let depth = field.depth();
    let span = lattice.span_fraction * field.half_length();
    let nx = lattice.nx.max(3);
    let ny = lattice.ny.max(3);

    let columns: Vec<Result<ColumnStats>> = par::map_indexed(nx, |k| {
        let x = -span + 2.0 * span * k as f64 / (nx - 1) as f64;
        column_stats(field, x, ny)
    });

    let mut v_bed = Peak::new();
    let mut v_sign = Trough::new();
    let mut vy_bed_sign = Trough::new();
    let mut ux_sign = Trough::new();
    let mut uy_min = Trough::new();
    let mut u_min = Trough::new();
    let mut etas = Vec::with_capacity(nx);
    for col in columns {
        let st = col?;
        etas.push(st.eta);
        v_bed.merge(&st.v_bed);
        v_sign.merge(&st.v_sign);
        vy_bed_sign.merge(&st.vy_bed_sign);
        ux_sign.merge(&st.ux_sign);
        uy_min.merge(&st.uy_min);
        u_min.merge(&st.u_min);
    }

    // Crest line: v must vanish, and v_x must be positive above the bed.
    let mut v_crest = Peak::new();
    let mut vx_crest = Trough::new();
    let eta0 = field.surface_height(0.0);
    for j in 1..ny {
        let y = -depth + (eta0 + depth) * j as f64 / (ny - 1) as f64;
        let jet = field.jet_at(0.0, y)?;
        v_crest.take(jet.v(), 0.0, y);
        vx_crest.take(-jet.psi_xx, 0.0, y);
    }

    // Surface monotone on the sampled columns: decreasing away from the crest.
    let mut surface_mono = Trough::new();
    let mid = (nx - 1) / 2;
    for k in 1..nx {
        let x = -span + 2.0 * span * k as f64 / (nx - 1) as f64;
        let diff = etas[k] - etas[k - 1];
        // Rising toward the crest on the left, falling past it on the right.
        let signed = if k <= mid { diff } else { -diff };
        surface_mono.take(signed, x, etas[k]);
    }

    // Streamline monotonicity at a spread of labels.
    let mut stream_mono = Trough::new();
    for lvl in 1..8 {
        let p = field.p_bed() * lvl as f64 / 8.0;
        let mut prev = field.height_at_p(-span, p);
        for k in 1..nx {
            let x = -span + 2.0 * span * k as f64 / (nx - 1) as f64;
            let h = field.height_at_p(x, p);
            let signed = if k <= mid { h - prev } else { prev - h };
            stream_mono.take(signed, x, h);
            prev = h;
        }
    }

    // Flux across stations: cell-aligned Gauss quadrature of ψ_y in y, so every
    // panel stays inside one interpolation patch and the quadrature converges
    // at full order. The exact value is p0 (ψ at the surface minus ψ at the bed).
    let mut flux = Peak::new();
    for s in 0..lattice.flux_stations {
        let x = -span + 2.0 * span * (s as f64 + 0.5) / lattice.flux_stations as f64;
        let mut total = 0.0;
        let n_cells = wave.grid.np - 1;
        for cell in 0..n_cells {
            let p_lo = field.p_bed() * (1.0 - cell as f64 / n_cells as f64);
            let p_hi = field.p_bed() * (1.0 - (cell + 1) as f64 / n_cells as f64);
            let y_lo = field.height_at_p(x, p_lo);
            let y_hi = field.height_at_p(x, p_hi);
            let half = 0.5 * (y_hi - y_lo);
            let mid_y = 0.5 * (y_hi + y_lo);
            for (xg, wg) in GAUSS_X.iter().zip(GAUSS_W.iter()) {
                let y = mid_y + half * xg;
                total += wg * half * field.jet_at(x, y)?.u_rel();
            }
        }
        flux.take(total - field.p_bed(), x, 0.0);
    }

    // Surface Bernoulli balance at the solver nodes, using the same one-sided
    // vertical derivative the solution was closed with. The last column is held
    // at the far-field column, so the surface condition applies up to m - 2.
    let mut bernoulli = Peak::new();
    let g = &wave.grid;
    let js = g.js();
    for i in 0..g.m - 1 {
        let h = wave.h_at(i, js);
        let hp = wave.hp_at(i, js);
        let hq = if i == 0 {
            0.0
        } else {
            (wave.h_at(i + 1, js) - wave.h_at(i - 1, js)) / (2.0 * g.dq)
        };
        let res = (1.0 + hq * hq) / (hp * hp) + 2.0 * wave.g * (h - depth) - wave.lambda_far;
        bernoulli.take(res, i as f64 * g.dq, h - depth);
    }

    let mut checks = vec![
        CheckResult::equality("vertical-velocity-vanishes-on-bed", &v_bed, TOL_V_ZERO),
        CheckResult::equality("vertical-velocity-vanishes-on-crest-line", &v_crest, TOL_V_ZERO),
        CheckResult::sign("vertical-velocity-signed-by-side", &v_sign, 0.0),
        CheckResult::sign("bed-vertical-gradient-signed-by-side", &vy_bed_sign, 0.0),
        CheckResult::sign("crest-line-horizontal-gradient-positive", &vx_crest, 0.0),
        CheckResult::sign("surface-monotone-from-crest", &surface_mono, TIE_TOL),
        CheckResult::sign("streamlines-monotone-from-crest", &stream_mono, TIE_TOL),
        CheckResult::sign("horizontal-gradient-signed-by-side", &ux_sign, 0.0),
        CheckResult::sign("vertical-shear-positive", &uy_min, 0.0),
        CheckResult::equality("flux-constant-across-stations", &flux, TOL_FLUX),
        CheckResult::equality("surface-bernoulli-balance", &bernoulli, TOL_BERNOULLI),
    ];

    if th.regime == Regime::Favorable {
        // u = c + u_rel > 0 everywhere; the worst point is the worst u_rel.
        let worst_u = Trough {
            value: th.c + u_min.value,
            x: u_min.x,
            y: u_min.y,
        };
        checks.push(CheckResult::sign(
            "horizontal-velocity-positive",
            &worst_u,
            0.0,
        ));
    }

    Ok(VerificationReport { checks })
}

/// Checks every traced path against its asymptote and its first integral.
pub fn path_checks(paths: &[ParticlePath]) -> Vec<CheckResult> {
    let mut clearance = Trough::new();
    let mut end_gap = Peak::new();
    let mut psi_drift = Peak::new();
    for path in paths {
        clearance.take(path.min_clearance, path.y0, path.asymptote);
        let end = path.end();
        end_gap.take(end.y - path.asymptote, path.y0, end.y);
        psi_drift.take(path.psi_drift_max, path.y0, path.p_label);
    }
    vec![
        CheckResult::sign("paths-stay-above-asymptote", &clearance, 0.0),
        CheckResult::equality("paths-settle-on-asymptote", &end_gap, TOL_PATH_END),
        CheckResult::equality("stream-function-conserved-on-paths", &psi_drift, TOL_PSI_DRIFT),
    ]
}

/// Loop sizes must not grow with depth: `loops` holds (crest height, size).
pub fn loop_size_check(loops: &[(f64, f64)]) -> CheckResult {
    let mut ordered: Vec<(f64, f64)> = loops.to_vec();
    // Shallowest first; sizes must be nonincreasing as depth grows.
    ordered.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut worst = Trough::new();
    for w in ordered.windows(2) {
        let (y_hi, s_hi) = w[0];
        let (_, s_lo) = w[1];
        worst.take(s_hi - s_lo, y_hi, s_hi);
    }
    CheckResult::sign("loop-size-nonincreasing-with-depth", &worst, LOOP_TIE_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{thresholds, Regime};
    use crate::kinematics::{trace_particle, TraceOptions};
    use crate::vorticity::VorticityFunction;
    use crate::wave::{build_wave, SolverGrid, WaveConfig};

    const G: f64 = 9.8;
    const P0: f64 = -1.0;

    fn test_pair() -> (SolitaryWave, FlowField) {
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
        let field = FlowField::new(&wave);
        (wave, field)
    }

    #[test]
    fn favorable_frame_passes_every_lattice_check() {
        let (wave, field) = test_pair();
        let c = 1.05 * field.far_relative_speed(-field.depth()).unwrap();
        let th = thresholds(&field, c).unwrap();
        assert_eq!(th.regime, Regime::Favorable);
        let lattice = LatticeSpec {
            nx: 101,
            ny: 21,
            ..Default::default()
        };
        let report = verify_field(&wave, &field, &th, &lattice).unwrap();
        for chk in &report.checks {
            assert!(
                chk.pass,
                "{} failed: worst {:.3e} at ({:.4}, {:.4}) tol {:.1e}",
                chk.name, chk.worst, chk.x, chk.y, chk.tolerance
            );
        }
        assert!(report
            .checks
            .iter()
            .any(|c| c.name == "horizontal-velocity-positive"));
    }

    #[test]
    fn path_checks_pass_on_a_mixed_sweep() {
        let (_, field) = test_pair();
        let c = 0.5
            * (field.far_relative_speed(0.0).unwrap()
                + field.far_relative_speed(-field.depth()).unwrap());
        let opts = TraceOptions {
            n_samples: 400,
            ..Default::default()
        };
        let paths: Vec<_> = [0.2, 0.5, 0.8]
            .iter()
            .map(|f| {
                let y0 = -field.depth() + f * (field.surface_height(0.0) + field.depth());
                trace_particle(&field, c, y0, &opts).unwrap()
            })
            .collect();
        for chk in path_checks(&paths) {
            assert!(chk.pass, "{} failed: worst {:.3e}", chk.name, chk.worst);
        }
    }

    #[test]
    fn loop_check_flags_growth_with_depth() {
        let shrinking = [(-0.1, 0.5), (-0.3, 0.3), (-0.5, 0.1)];
        assert!(loop_size_check(&shrinking).pass);
        let growing = [(-0.1, 0.1), (-0.3, 0.3), (-0.5, 0.5)];
        assert!(!loop_size_check(&growing).pass);
    }
}
