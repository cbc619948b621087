//! End-to-end scenario runs: solve a wave, sweep observation frames, trace and
//! classify particles, verify the flow, and write reproducible artifacts.
//!
//! A scenario is one wave (vorticity, supercriticality, grid) observed from a
//! list of frame speeds c. The default frame sweep hits the three regimes: a
//! favorable frame 5% above the bed far speed, the midpoint of the mixed range,
//! and an adverse frame 5% below the surface far speed. Per frame the runner
//! classifies a uniform depth sweep, traces a seeded random set of settling
//! particles, traces a loop-band sweep when the frame admits loops, extracts
//! the zero-speed curves, and runs the full verification suite. All randomness
//! flows from the config seed, sweeps are index-ordered, and JSON/CSV emission
//! is stable, so repeated runs produce byte-identical artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{check_particle, depth_sweep, thresholds, DriftPattern, Regime, Thresholds};
use crate::error::{Error, Result};
use crate::field::FlowField;
use crate::kinematics::{zero_speed_curve, ParticlePath, PathEvent, TraceOptions, ZeroSpeedPoint};
use crate::verify::{loop_size_check, path_checks, verify_field, CheckResult, LatticeSpec, VerificationReport};
use crate::vorticity::VorticityFunction;
use crate::wave::{build_wave, SolitaryWave, SolverGrid, WaveConfig, WaveDiagnostics};

/// Fraction of the fluid height kept clear of bed and surface when drawing
/// random settling particles.
const SETTLE_MARGIN: f64 = 0.02;
/// Fraction of the loop band kept clear of its edges.
const LOOP_BAND_MARGIN: f64 = 0.05;
/// Height samples on each zero-speed branch.
const ZERO_SPEED_SAMPLES: usize = 40;
/// Interior margin of the zero-speed sweep inside (ỹ, y*).
const ZERO_SPEED_MARGIN: f64 = 0.05;
/// u residual allowed on extracted zero-speed points.
const ZERO_SPEED_TOL: f64 = 1e-9;

fn default_p0() -> f64 {
    -1.0
}
fn default_g() -> f64 {
    9.8
}
fn default_epsilon() -> f64 {
    0.01
}
fn default_sweep_count() -> usize {
    50
}
fn default_settle_count() -> usize {
    20
}
fn default_loop_count() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub vorticity: VorticityFunction,
    #[serde(default = "default_p0")]
    pub p0: f64,
    #[serde(default = "default_g")]
    pub g: f64,
    /// Supercriticality: λ = λ_c (1 + ε).
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub grid: SolverGrid,
    /// Frame speeds; when absent, the three-regime default sweep is used.
    #[serde(default)]
    pub frames: Option<Vec<f64>>,
    /// Particles in the uniform classification sweep.
    #[serde(default = "default_sweep_count")]
    pub sweep_count: usize,
    /// Randomly drawn particles for the settling check.
    #[serde(default = "default_settle_count")]
    pub settle_count: usize,
    /// Particles across the loop band.
    #[serde(default = "default_loop_count")]
    pub loop_count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub trace: TraceOptions,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "supercriticality {} must be positive",
                self.epsilon
            )));
        }
        if let Some(frames) = &self.frames {
            if frames.is_empty() {
                return Err(Error::Config("frame list must not be empty".into()));
            }
            if frames.iter().any(|c| !(*c > 0.0)) {
                return Err(Error::Config("frame speeds must be positive".into()));
            }
        }
        if self.sweep_count == 0 {
            return Err(Error::Config("sweep count must be positive".into()));
        }
        Ok(())
    }
}

/// Scalar summary of one traced particle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParticleSummary {
    pub index: usize,
    /// Which sweep produced it: "sweep", "settle", or "loop".
    pub group: String,
    pub y0: f64,
    pub asymptote: f64,
    pub predicted: DriftPattern,
    pub observed: DriftPattern,
    pub consistent: bool,
    pub drift: f64,
    pub loop_size: Option<f64>,
    pub t0: PathEvent,
    pub u_zeros: Vec<PathEvent>,
    pub psi_drift_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameReport {
    pub c: f64,
    pub regime: Regime,
    pub thresholds: Thresholds,
    /// Predicted pattern counts over the uniform sweep.
    pub partition: BTreeMap<String, usize>,
    pub traced: usize,
    pub consistent: usize,
    pub particles: Vec<ParticleSummary>,
    pub verification: VerificationReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub config: ScenarioConfig,
    pub lambda_c: f64,
    pub lambda: f64,
    pub lambda_far: f64,
    pub depth: f64,
    pub crest_height: f64,
    pub residual_inf: f64,
    pub frames: Vec<FrameReport>,
}

impl ScenarioReport {
    pub fn all_pass(&self) -> bool {
        self.frames.iter().all(|f| {
            f.verification.all_pass() && f.consistent == f.traced
        })
    }
}

/// Default three-regime frame sweep for a solved wave.
pub fn default_frames(wave: &SolitaryWave) -> Result<Vec<f64>> {
    let gamma_bed = wave.vorticity.big_gamma(wave.p0)?;
    let w_bed = (wave.lambda + 2.0 * gamma_bed).sqrt();
    let w_surf = wave.lambda.sqrt();
    Ok(vec![
        1.05 * w_bed,
        0.5 * (w_surf + w_bed),
        0.95 * w_surf,
    ])
}

/// One frame's full output: the report plus the traced paths and, when the
/// frame admits stagnation points, the zero-speed branches.
pub struct FrameRun {
    pub report: FrameReport,
    pub paths: Vec<ParticlePath>,
    pub zero_speed: Option<Vec<ZeroSpeedPoint>>,
}

/// Classifies, traces, and verifies one wave-speed frame over a solved wave.
pub fn run_frame(
    cfg: &ScenarioConfig,
    wave: &SolitaryWave,
    field: &FlowField,
    c: f64,
    frame_idx: usize,
) -> Result<FrameRun> {
    let th = thresholds(field, c)?;
    let depth = field.depth();
    let eta0 = field.surface_height(0.0);

    // Assemble the particle list: uniform sweep, seeded settling draws, and the
    // loop band when the frame admits one.
    let mut jobs: Vec<(String, f64)> = depth_sweep(field, &th, cfg.sweep_count)?
        .into_iter()
        .map(|y0| ("sweep".to_string(), y0))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(frame_idx as u64));
    let margin = SETTLE_MARGIN * (eta0 + depth);
    for _ in 0..cfg.settle_count {
        let y0 = rng.gen_range((-depth + margin)..(eta0 - margin));
        jobs.push(("settle".to_string(), y0));
    }

    let loop_band = match (th.y_tilde, th.y_star) {
        (Some(yt), Some(ys)) => {
            let top = field.asymptote_inverse(ys)?;
            (top > yt).then_some((yt, top))
        }
        _ => None,
    };
    if let Some((lo, hi)) = loop_band {
        let m = LOOP_BAND_MARGIN * (hi - lo);
        let denom = cfg.loop_count.saturating_sub(1).max(1) as f64;
        for k in 0..cfg.loop_count {
            let y0 = lo + m + (hi - lo - 2.0 * m) * k as f64 / denom;
            jobs.push(("loop".to_string(), y0));
        }
    }

    let checks: Vec<_> = crate::par::map_indexed(jobs.len(), |i| {
        check_particle(field, &th, jobs[i].1, &cfg.trace)
    });

    let mut particles = Vec::with_capacity(jobs.len());
    let mut paths = Vec::with_capacity(jobs.len());
    let mut partition: BTreeMap<String, usize> = BTreeMap::new();
    let mut consistent = 0usize;
    let mut loop_sizes: Vec<(f64, f64)> = Vec::new();
    for (i, result) in checks.into_iter().enumerate() {
        let chk = result?;
        if chk.consistent {
            consistent += 1;
        }
        if jobs[i].0 == "sweep" {
            *partition.entry(chk.predicted.to_string()).or_insert(0) += 1;
        }
        if jobs[i].0 == "loop" {
            if let Some(size) = chk.loop_size {
                loop_sizes.push((chk.y0, size));
            }
        }
        particles.push(ParticleSummary {
            index: i,
            group: jobs[i].0.clone(),
            y0: chk.y0,
            asymptote: chk.asymptote,
            predicted: chk.predicted,
            observed: chk.observed,
            consistent: chk.consistent,
            drift: chk.drift,
            loop_size: chk.loop_size,
            t0: chk.path.t0,
            u_zeros: chk.path.u_zeros.clone(),
            psi_drift_max: chk.path.psi_drift_max,
        });
        paths.push(chk.path);
    }

    let mut verification = verify_field(wave, field, &th, &cfg.lattice)?;
    verification.checks.extend(path_checks(&paths));
    if loop_sizes.len() >= 2 {
        verification.checks.push(loop_size_check(&loop_sizes));
    }
    verification.checks.push(CheckResult {
        name: "prediction-matches-observation".into(),
        pass: consistent == paths.len(),
        worst: (paths.len() - consistent) as f64,
        tolerance: 0.0,
        x: f64::NAN,
        y: f64::NAN,
    });

    // Zero-speed branches exist exactly when both thresholds do.
    let zero_speed = match (th.y_tilde, th.y_star) {
        (Some(yt), Some(ys)) if ys > yt => {
            let m = ZERO_SPEED_MARGIN * (ys - yt);
            let pts = zero_speed_curve(field, c, yt + m, ys - m, ZERO_SPEED_SAMPLES)?;
            let mut worst_res = 0.0_f64;
            let mut worst_y = f64::NAN;
            for p in &pts {
                if p.residual > worst_res {
                    worst_res = p.residual;
                    worst_y = p.y;
                }
            }
            let mut min_slope = f64::INFINITY;
            let mut slope_y = f64::NAN;
            for w in pts.windows(2) {
                let dx = w[1].x - w[0].x;
                if dx < min_slope {
                    min_slope = dx;
                    slope_y = w[1].y;
                }
            }
            verification.checks.push(CheckResult {
                name: "zero-speed-curve-residual".into(),
                pass: worst_res <= ZERO_SPEED_TOL,
                worst: worst_res,
                tolerance: ZERO_SPEED_TOL,
                x: f64::NAN,
                y: worst_y,
            });
            verification.checks.push(CheckResult {
                name: "zero-speed-curve-slope-positive".into(),
                pass: min_slope > 0.0,
                worst: min_slope,
                tolerance: 0.0,
                x: f64::NAN,
                y: slope_y,
            });
            Some(pts)
        }
        _ => None,
    };

    Ok(FrameRun {
        report: FrameReport {
            c,
            regime: th.regime,
            thresholds: th,
            partition,
            traced: paths.len(),
            consistent,
            particles,
            verification,
        },
        paths,
        zero_speed,
    })
}

/// Runs the full scenario; writes artifacts under `out_dir` when given.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: Option<&Path>) -> Result<ScenarioReport> {
    cfg.validate()?;
    let wave = build_wave(&WaveConfig {
        vorticity: cfg.vorticity.clone(),
        p0: cfg.p0,
        g: cfg.g,
        epsilon: cfg.epsilon,
        grid: cfg.grid,
    })?;
    let field = FlowField::new(&wave);
    let frames = match &cfg.frames {
        Some(fs) => fs.clone(),
        None => default_frames(&wave)?,
    };

    let mut frame_reports = Vec::with_capacity(frames.len());
    let mut frame_runs = Vec::with_capacity(frames.len());
    for (k, &c) in frames.iter().enumerate() {
        let run = run_frame(cfg, &wave, &field, c, k)?;
        frame_reports.push(run.report.clone());
        frame_runs.push(run);
    }

    let report = ScenarioReport {
        config: cfg.clone(),
        lambda_c: wave.lambda_c,
        lambda: wave.lambda,
        lambda_far: wave.lambda_far,
        depth: wave.depth,
        crest_height: field.surface_height(0.0),
        residual_inf: wave.residual_inf,
        frames: frame_reports,
    };

    if let Some(dir) = out_dir {
        write_artifacts(dir, &report, &wave, &field, &frame_runs)?;
    }
    Ok(report)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

/// On-disk wave format: the full solver state (reloadable), plus plot-ready
/// mirrored surface samples and the structural diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaveFile {
    #[serde(flatten)]
    pub wave: SolitaryWave,
    /// Mirrored surface elevation samples (x, η(x)).
    pub surface: Vec<(f64, f64)>,
    pub diagnostics: WaveDiagnostics,
}

/// Surface elevation over the full (mirrored) domain, crest at x = 0.
pub fn mirrored_surface(wave: &SolitaryWave) -> Vec<(f64, f64)> {
    let g = &wave.grid;
    let mut surface = Vec::with_capacity(2 * g.m - 1);
    for i in (1..g.m).rev() {
        surface.push((-(i as f64) * g.dq, wave.eta(i)));
    }
    for i in 0..g.m {
        surface.push((i as f64 * g.dq, wave.eta(i)));
    }
    surface
}

/// Writes a solved wave (with surface samples and diagnostics) as JSON.
pub fn save_wave(path: &Path, wave: &SolitaryWave) -> Result<()> {
    write_json(
        path,
        &WaveFile {
            wave: wave.clone(),
            surface: mirrored_surface(wave),
            diagnostics: wave.diagnostics()?,
        },
    )
}

/// Reloads a wave written by [`save_wave`].
pub fn load_wave(path: &Path) -> Result<SolitaryWave> {
    let text = fs::read_to_string(path)?;
    let file: WaveFile = serde_json::from_str(&text)?;
    Ok(file.wave)
}

fn float(buf: &mut String, v: f64) {
    // Shortest round-trip formatting keeps files compact and deterministic.
    write!(buf, "{v}").expect("string write");
}

fn write_artifacts(
    dir: &Path,
    report: &ScenarioReport,
    wave: &SolitaryWave,
    field: &FlowField,
    runs: &[FrameRun],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_json(&dir.join("summary.json"), report)?;
    save_wave(&dir.join("wave.json"), wave)?;

    for (k, run) in runs.iter().enumerate() {
        let fdir = dir.join(format!("frame-{k}"));
        let pdir = fdir.join("paths");
        fs::create_dir_all(&pdir)?;
        write_json(&fdir.join("report.json"), &run.report)?;
        write_json(&fdir.join("verification.json"), &run.report.verification)?;

        for (i, path) in run.paths.iter().enumerate() {
            let mut csv = String::with_capacity(path.samples.len() * 64);
            csv.push_str("t,x,y,u,v,psi\n");
            for s in &path.samples {
                float(&mut csv, s.t);
                csv.push(',');
                float(&mut csv, s.x_still);
                csv.push(',');
                float(&mut csv, s.y);
                csv.push(',');
                float(&mut csv, s.u);
                csv.push(',');
                float(&mut csv, s.v);
                csv.push(',');
                float(&mut csv, s.psi);
                csv.push('\n');
            }
            fs::write(pdir.join(format!("path-{i:03}.csv")), csv)?;
        }

        if let Some(pts) = &run.zero_speed {
            let mut csv = String::new();
            csv.push_str("y,x_right,x_left,u_residual\n");
            for p in pts {
                float(&mut csv, p.y);
                csv.push(',');
                float(&mut csv, p.x);
                csv.push(',');
                float(&mut csv, -p.x);
                csv.push(',');
                float(&mut csv, p.residual);
                csv.push('\n');
            }
            fs::write(fdir.join("zero_speed.csv"), csv)?;
        }

        // Asymptote levels of the particles, for plotting against the paths.
        let mut csv = String::new();
        csv.push_str("index,y0,asymptote\n");
        for p in &run.report.particles {
            write!(csv, "{},", p.index).expect("string write");
            float(&mut csv, p.y0);
            csv.push(',');
            float(&mut csv, p.asymptote);
            csv.push('\n');
        }
        fs::write(fdir.join("asymptotes.csv"), csv)?;
    }

    // Streamline chart of the wave itself (plot aid, mirrored).
    let mut csv = String::new();
    csv.push_str("x,p,y\n");
    let m = wave.grid.m;
    for lvl in 0..=8 {
        let p = field.p_bed() * lvl as f64 / 8.0;
        for i in (1..m).rev() {
            let x = -(i as f64) * wave.grid.dq;
            emit_streamline_row(&mut csv, field, x, p);
        }
        for i in 0..m {
            let x = i as f64 * wave.grid.dq;
            emit_streamline_row(&mut csv, field, x, p);
        }
    }
    fs::write(dir.join("streamlines.csv"), csv)?;
    Ok(())
}

fn emit_streamline_row(csv: &mut String, field: &FlowField, x: f64, p: f64) {
    float(csv, x);
    csv.push(',');
    float(csv, p);
    csv.push(',');
    float(csv, field.height_at_p(x, p));
    csv.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ScenarioConfig {
        ScenarioConfig {
            vorticity: VorticityFunction::Constant { omega0: -1.0 },
            p0: -1.0,
            g: 9.8,
            epsilon: 0.02,
            grid: SolverGrid {
                nq: 201,
                np: 21,
                half_length_depths: 20.0,
            },
            frames: None,
            sweep_count: 6,
            settle_count: 3,
            loop_count: 4,
            seed: 7,
            lattice: LatticeSpec {
                nx: 61,
                ny: 13,
                ..Default::default()
            },
            trace: TraceOptions {
                n_samples: 300,
                ..Default::default()
            },
        }
    }

    #[test]
    fn config_defaults_fill_in() {
        let cfg: ScenarioConfig =
            serde_json::from_str(r#"{"vorticity": {"kind": "constant", "omega0": -1.0}}"#)
                .unwrap();
        assert_eq!(cfg.p0, -1.0);
        assert_eq!(cfg.grid.nq, 601);
        assert_eq!(cfg.sweep_count, 50);
        assert!(cfg.frames.is_none());
    }

    #[test]
    fn scenario_runs_three_regimes_consistently() {
        let report = run_scenario(&small_config(), None).unwrap();
        assert_eq!(report.frames.len(), 3);
        assert_eq!(report.frames[0].regime, Regime::Favorable);
        assert_eq!(report.frames[1].regime, Regime::Mixed);
        assert_eq!(report.frames[2].regime, Regime::Adverse);
        for frame in &report.frames {
            assert_eq!(
                frame.consistent, frame.traced,
                "frame c = {} had {} / {} consistent",
                frame.c, frame.consistent, frame.traced
            );
        }
        // The mixed frame must have found loops.
        assert!(report.frames[1]
            .particles
            .iter()
            .any(|p| p.group == "loop" && p.loop_size.is_some()));
        assert!(report.all_pass(), "failures: {:#?}", report
            .frames
            .iter()
            .flat_map(|f| f.verification.failures())
            .collect::<Vec<_>>());
    }

    #[test]
    fn artifacts_are_deterministic() {
        let cfg = ScenarioConfig {
            sweep_count: 4,
            settle_count: 2,
            loop_count: 2,
            trace: TraceOptions {
                n_samples: 120,
                ..Default::default()
            },
            ..small_config()
        };
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        run_scenario(&cfg, Some(dir_a.path())).unwrap();
        run_scenario(&cfg, Some(dir_b.path())).unwrap();
        for name in ["summary.json", "wave.json", "streamlines.csv"] {
            let a = fs::read(dir_a.path().join(name)).unwrap();
            let b = fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
        let a = fs::read(dir_a.path().join("frame-1/paths/path-000.csv")).unwrap();
        let b = fs::read(dir_b.path().join("frame-1/paths/path-000.csv")).unwrap();
        assert_eq!(a, b);
    }
}
