//! Command-line harness for the solitary-wave drift simulator.
//!
//! Subcommands cover the pipeline stages individually (`lambda-c`, `laminar`,
//! `solve-wave`, `trace`, `classify`, `verify`) and end to end (`run`,
//! `plot-data`). Configuration is a single JSON document; every command is
//! deterministic given the config and seed.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver error,
//! 4 verification failure under `--strict`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use solwave::classify::{check_particle, thresholds};
use solwave::field::FlowField;
use solwave::kinematics::{trace_particle, ParticlePath, TraceOptions};
use solwave::laminar::{critical_lambda, depth as laminar_depth, LaminarFlow};
use solwave::scenario::{
    default_frames, load_wave, mirrored_surface, run_frame, run_scenario, save_wave, FrameReport,
    ScenarioConfig,
};
use solwave::verify::LatticeSpec;
use solwave::wave::{build_wave, SolitaryWave, SolverGrid, WaveConfig};

#[derive(Parser)]
#[command(
    name = "solwave",
    version,
    about = "Solitary water waves over sheared currents: wave construction, \
             particle drift classification, and invariant verification."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the critical Bernoulli level and regime speed thresholds as JSON.
    LambdaC(LambdaCArgs),
    /// Emit the far-field shear profile as CSV (columns y, psi, u_rel).
    Laminar(LaminarArgs),
    /// Solve the wave and write it as JSON plus a surface-profile CSV.
    SolveWave(SolveWaveArgs),
    /// Trace one particle under a solved wave; write its path CSV and events.
    Trace(TraceArgs),
    /// Predict and observe drift patterns over a depth sweep of particles.
    Classify(ClassifyArgs),
    /// Run the invariant verification suite against a solved wave.
    Verify(VerifyArgs),
    /// Full pipeline: solve, sweep frames, trace, verify, write artifacts.
    Run(RunArgs),
    /// Collect plot-ready trajectory and curve files from a finished run.
    PlotData(PlotDataArgs),
}

/// Overrides applied on top of the JSON config.
#[derive(Args, Debug, Clone)]
struct Overrides {
    /// Horizontal stations across the full wave (odd).
    #[arg(long, value_name = "N")]
    grid_nq: Option<usize>,
    /// Streamline rows from bed to surface.
    #[arg(long, value_name = "N")]
    grid_np: Option<usize>,
    /// Half length of the domain, in multiples of the far-field depth.
    #[arg(long, value_name = "DEPTHS")]
    half_length: Option<f64>,
    /// Relative amplitude parameter (lambda = lambda_c * (1 + epsilon)).
    #[arg(long, value_name = "EPS")]
    epsilon: Option<f64>,
    /// Seed for the random settling-particle draws.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Unit-free preset: gravity 1, bed streamline value -1.
    #[arg(long)]
    dimensionless: bool,
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        if self.dimensionless {
            cfg.g = 1.0;
            cfg.p0 = -1.0;
        }
        if let Some(nq) = self.grid_nq {
            cfg.grid.nq = nq;
        }
        if let Some(np) = self.grid_np {
            cfg.grid.np = np;
        }
        if let Some(l) = self.half_length {
            cfg.grid.half_length_depths = l;
        }
        if let Some(eps) = self.epsilon {
            cfg.epsilon = eps;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ConfigArgs {
    /// Scenario configuration file (JSON).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

impl ConfigArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let text = fs::read_to_string(&self.config)
            .with_context(|| format!("reading config {}", self.config.display()))?;
        let mut cfg: ScenarioConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", self.config.display()))?;
        self.overrides.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct LambdaCArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LaminarArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Rows in the emitted profile.
    #[arg(long, default_value_t = 201)]
    samples: usize,
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveWaveArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Wave output file; a surface CSV is written next to it.
    #[arg(long, default_value = "wave.json")]
    out: PathBuf,
}

#[derive(Args)]
struct TraceArgs {
    /// Wave file produced by solve-wave or run.
    #[arg(long, default_value = "wave.json")]
    wave: PathBuf,
    /// Frame speed of the observation.
    #[arg(long)]
    c: f64,
    /// Height of the particle on the crest line x = 0.
    #[arg(long, allow_negative_numbers = true)]
    y0: f64,
    /// Integration time budget (sized automatically when omitted).
    #[arg(long)]
    tspan: Option<f64>,
    /// Stored samples along the path.
    #[arg(long, default_value_t = 1200)]
    samples: usize,
    /// Path CSV output; an events JSON is written next to it.
    #[arg(long, default_value = "path.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Wave file produced by solve-wave or run.
    #[arg(long, default_value = "wave.json")]
    wave: PathBuf,
    /// Frame speed of the observation.
    #[arg(long)]
    c: f64,
    /// Number of particles in the uniform depth sweep.
    #[arg(long = "y0-sweep", default_value_t = 50)]
    y0_sweep: usize,
    /// Report output file.
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Wave file produced by solve-wave or run.
    #[arg(long, default_value = "wave.json")]
    wave: PathBuf,
    /// Frame speed; all three default regime frames when omitted.
    #[arg(long)]
    c: Option<f64>,
    /// Seed for the settling-particle draws.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the frame reports here as JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Exit with code 4 when any check fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Artifact directory.
    #[arg(long, default_value = "solwave-out")]
    out: PathBuf,
    /// Exit with code 4 when any check fails or a prediction misses.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct PlotDataArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Artifact directory (reused if it already holds a finished run).
    #[arg(long, default_value = "solwave-out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("solwave: {err:#}");
            ExitCode::from(classify_exit(&err))
        }
    }
}

/// Maps an error chain onto the documented exit codes: configuration and file
/// plumbing problems are 2, everything numerical is 3.
fn classify_exit(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<solwave::Error>() {
            return match e {
                solwave::Error::Config(_)
                | solwave::Error::InvalidArgument(_)
                | solwave::Error::Io(_)
                | solwave::Error::Serde(_) => 2,
                _ => 3,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some()
            || cause.downcast_ref::<serde_json::Error>().is_some()
        {
            return 2;
        }
    }
    3
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::LambdaC(args) => cmd_lambda_c(args),
        Command::Laminar(args) => cmd_laminar(args),
        Command::SolveWave(args) => cmd_solve_wave(args),
        Command::Trace(args) => cmd_trace(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Run(args) => cmd_run(args),
        Command::PlotData(args) => cmd_plot_data(args),
    }
}

fn emit_json(out: &Option<PathBuf>, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_text(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Sibling path `<stem>-<suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    path.with_file_name(format!("{stem}-{suffix}"))
}

fn cmd_lambda_c(args: LambdaCArgs) -> Result<ExitCode> {
    let cfg = args.config.load()?;
    let lambda_c = critical_lambda(&cfg.vorticity, cfg.p0, cfg.g)?;
    let lambda = lambda_c * (1.0 + cfg.epsilon);
    let depth = laminar_depth(&cfg.vorticity, cfg.p0, lambda)?;
    let gamma_bed = cfg.vorticity.big_gamma(cfg.p0)?;
    emit_json(
        &args.out,
        &json!({
            "lambda_c": lambda_c,
            "epsilon": cfg.epsilon,
            "lambda": lambda,
            "depth": depth,
            "w_far_surface": lambda.sqrt(),
            "w_far_bed": (lambda + 2.0 * gamma_bed).sqrt(),
            // Drift classification assumes weakly negative vorticity; the
            // dispersion root itself exists regardless.
            "vorticity_sign": cfg.vorticity.hypothesis_report(cfg.p0)?,
        }),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_laminar(args: LaminarArgs) -> Result<ExitCode> {
    if args.samples < 2 {
        return Err(solwave::Error::Config("laminar profile needs at least 2 samples".into()).into());
    }
    let cfg = args.config.load()?;
    let lambda_c = critical_lambda(&cfg.vorticity, cfg.p0, cfg.g)?;
    let lambda = lambda_c * (1.0 + cfg.epsilon);
    let flow = LaminarFlow::build(&cfg.vorticity, cfg.p0, cfg.g, lambda)?;
    let mut csv = String::from("y,psi,u_rel\n");
    for k in 0..args.samples {
        let t = k as f64 / (args.samples - 1) as f64;
        let p = cfg.p0 * (1.0 - t);
        let y = flow.height_above_bed(p)? - flow.depth;
        let u_rel = (lambda + 2.0 * cfg.vorticity.big_gamma(p)?).sqrt();
        push_row(&mut csv, &[y, -p, u_rel]);
    }
    emit_text(&args.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve_wave(args: SolveWaveArgs) -> Result<ExitCode> {
    let cfg = args.config.load()?;
    let wave = build_wave(&WaveConfig {
        vorticity: cfg.vorticity.clone(),
        p0: cfg.p0,
        g: cfg.g,
        epsilon: cfg.epsilon,
        grid: cfg.grid,
    })?;
    save_wave(&args.out, &wave)?;

    let csv_path = sibling(&args.out, "surface.csv");
    let mut csv = String::from("x,eta\n");
    for (x, eta) in mirrored_surface(&wave) {
        push_row(&mut csv, &[x, eta]);
    }
    fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;

    println!(
        "solved: lambda_c={:.12} lambda={:.12} depth={:.6} crest={:.6e} residual={:.3e}",
        wave.lambda_c,
        wave.lambda,
        wave.depth,
        wave.amplitude(),
        wave.residual_inf
    );
    println!("wrote {} and {}", args.out.display(), csv_path.display());
    Ok(ExitCode::SUCCESS)
}

fn load_field(path: &Path) -> Result<(SolitaryWave, FlowField)> {
    let wave = load_wave(path).with_context(|| format!("loading wave {}", path.display()))?;
    let field = FlowField::new(&wave);
    Ok((wave, field))
}

fn cmd_trace(args: TraceArgs) -> Result<ExitCode> {
    let (_wave, field) = load_field(&args.wave)?;
    let opts = TraceOptions {
        n_samples: args.samples,
        horizon: args.tspan,
        ..TraceOptions::default()
    };
    let path = trace_particle(&field, args.c, args.y0, &opts)?;

    let mut csv = String::from("t,x,y,X,Y,u,v,psi\n");
    for s in &path.samples {
        push_row(&mut csv, &[s.t, s.x_wave, s.y, s.x_still, s.y, s.u, s.v, s.psi]);
    }
    fs::write(&args.out, csv).with_context(|| format!("writing {}", args.out.display()))?;

    let events_path = sibling(&args.out, "events.json");
    emit_json(&Some(events_path.clone()), &events_value(&path))?;

    println!(
        "traced y0={} asymptote={:.6} t_end={:.3} u_zeros={} drift={:.6}",
        args.y0,
        path.asymptote,
        path.t_end,
        path.u_zeros.len(),
        path.drift
    );
    println!("wrote {} and {}", args.out.display(), events_path.display());
    Ok(ExitCode::SUCCESS)
}

fn events_value(path: &ParticlePath) -> Value {
    json!({
        "t0": path.t0.t,
        "t_plus": path.u_zeros.first().map(|e| e.t),
        "t_minus": path.u_zeros.last().map(|e| e.t),
        "loop_size": path.loop_size(),
        "t_end": path.t_end,
        "drift": path.drift,
        "asymptote": path.asymptote,
        "psi_drift_max": path.psi_drift_max,
    })
}

fn cmd_classify(args: ClassifyArgs) -> Result<ExitCode> {
    if args.y0_sweep == 0 {
        return Err(solwave::Error::Config("y0 sweep must be non-empty".into()).into());
    }
    let (_wave, field) = load_field(&args.wave)?;
    let th = thresholds(&field, args.c)?;
    let sweep = solwave::classify::depth_sweep(&field, &th, args.y0_sweep)?;
    let opts = TraceOptions::default();
    let checks = solwave::par::map_indexed(sweep.len(), |i| {
        check_particle(&field, &th, sweep[i], &opts)
    });

    let mut particles = Vec::with_capacity(sweep.len());
    let mut consistent = 0usize;
    for result in checks {
        let chk = result?;
        if chk.consistent {
            consistent += 1;
        }
        particles.push(json!({
            "y0": chk.y0,
            "asymptote": chk.asymptote,
            "predicted": chk.predicted,
            "observed": chk.observed,
            "consistent": chk.consistent,
            "drift": chk.drift,
            "loop_size": chk.loop_size,
        }));
    }

    let report = json!({
        "c": args.c,
        "thresholds": serde_json::to_value(&th)?,
        "traced": particles.len(),
        "consistent": consistent,
        "particles": particles,
    });
    emit_json(&Some(args.out.clone()), &report)?;
    println!(
        "classified {} particles at c={}: regime {} consistent {}/{} -> {}",
        sweep.len(),
        args.c,
        th.regime,
        consistent,
        sweep.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

/// Scenario config equivalent to the wave a file was solved from, for the
/// frame runner (sweep sizes and lattice at their defaults).
fn config_for(wave: &SolitaryWave, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        vorticity: wave.vorticity.clone(),
        p0: wave.p0,
        g: wave.g,
        epsilon: wave.epsilon,
        grid: SolverGrid {
            nq: 2 * wave.grid.m - 1,
            np: wave.grid.np,
            half_length_depths: wave.grid.half_length / wave.depth,
        },
        frames: None,
        sweep_count: 50,
        settle_count: 20,
        loop_count: 10,
        seed,
        lattice: LatticeSpec::default(),
        trace: TraceOptions::default(),
    }
}

fn print_frame_report(report: &FrameReport) {
    println!(
        "frame c={:.6}: regime {} particles {} consistent {}",
        report.c, report.regime, report.traced, report.consistent
    );
    for check in &report.verification.checks {
        let tag = if check.pass { "PASS" } else { "FAIL" };
        println!(
            "  [{tag}] {:<38} worst={:<+12.4e} tol={:.1e}",
            check.name, check.worst, check.tolerance
        );
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let (wave, field) = load_field(&args.wave)?;
    let frames = match args.c {
        Some(c) => vec![c],
        None => default_frames(&wave)?,
    };
    let cfg = config_for(&wave, args.seed);

    let mut reports = Vec::with_capacity(frames.len());
    for (k, &c) in frames.iter().enumerate() {
        let run = run_frame(&cfg, &wave, &field, c, k)?;
        print_frame_report(&run.report);
        reports.push(run.report);
    }

    if let Some(out) = &args.out {
        let value = serde_json::to_value(&reports)?;
        emit_json(&Some(out.clone()), &value)?;
    }

    let all_pass = reports
        .iter()
        .all(|r| r.verification.all_pass() && r.consistent == r.traced);
    println!("verification: {}", if all_pass { "all checks passed" } else { "FAILURES present" });
    if args.strict && !all_pass {
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let cfg = args.config.load()?;
    let report = run_scenario(&cfg, Some(&args.out))?;
    println!(
        "wave: lambda_c={:.12} lambda={:.12} depth={:.6} crest={:.6e} residual={:.3e}",
        report.lambda_c, report.lambda, report.depth, report.crest_height, report.residual_inf
    );
    for frame in &report.frames {
        print_frame_report(frame);
    }
    println!("artifacts under {}", args.out.display());
    if args.strict && !report.all_pass() {
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_plot_data(args: PlotDataArgs) -> Result<ExitCode> {
    let summary_path = args.out.join("summary.json");
    if !summary_path.exists() {
        println!("no finished run under {}; running the scenario", args.out.display());
        let cfg = args.config.load()?;
        run_scenario(&cfg, Some(&args.out))?;
    }

    let summary: Value = serde_json::from_str(
        &fs::read_to_string(&summary_path)
            .with_context(|| format!("reading {}", summary_path.display()))?,
    )?;
    let frames = summary["frames"]
        .as_array()
        .ok_or_else(|| anyhow!("summary.json has no frames array"))?;

    let plot_dir = args.out.join("plot");
    fs::create_dir_all(&plot_dir)?;
    let mut index = Vec::new();
    let mut emitted = 0usize;

    for (k, frame) in frames.iter().enumerate() {
        let frame_dir = args.out.join(format!("frame-{k}"));
        let dest_dir = plot_dir.join(format!("frame-{k}"));
        fs::create_dir_all(&dest_dir)?;

        for (pattern, particle) in representative_particles(frame)? {
            let idx = particle["index"]
                .as_u64()
                .ok_or_else(|| anyhow!("particle without index in frame {k}"))?;
            let src = frame_dir.join("paths").join(format!("path-{idx:03}.csv"));
            let dest = dest_dir.join(format!("trajectory-{pattern}.csv"));
            write_trajectory(&src, &dest)?;
            emitted += 1;
            index.push(json!({
                "frame": k,
                "c": frame["c"],
                "pattern": pattern,
                "y0": particle["y0"],
                "asymptote": particle["asymptote"],
                "file": dest.strip_prefix(&args.out).unwrap_or(&dest).to_string_lossy(),
            }));
        }

        for name in ["zero_speed.csv", "asymptotes.csv"] {
            let src = frame_dir.join(name);
            if src.exists() {
                fs::copy(&src, dest_dir.join(name))?;
                emitted += 1;
            }
        }
    }

    let streamlines = args.out.join("streamlines.csv");
    if streamlines.exists() {
        fs::copy(&streamlines, plot_dir.join("streamlines.csv"))?;
        emitted += 1;
    }
    emit_json(&Some(plot_dir.join("index.json")), &Value::Array(index))?;

    println!("emitted {emitted} plot files under {}", plot_dir.display());
    Ok(ExitCode::SUCCESS)
}

/// One representative particle per observed pattern, preferring the uniform
/// sweep group; ordered by pattern name for stable output.
fn representative_particles(frame: &Value) -> Result<Vec<(String, &Value)>> {
    let particles = frame["particles"]
        .as_array()
        .ok_or_else(|| anyhow!("frame report without particles array"))?;
    let mut chosen: std::collections::BTreeMap<String, &Value> = Default::default();
    for pass in ["sweep", ""] {
        for p in particles {
            let group = p["group"].as_str().unwrap_or("");
            if !pass.is_empty() && group != pass {
                continue;
            }
            if let Some(pattern) = p["observed"].as_str() {
                chosen.entry(pattern.to_string()).or_insert(p);
            }
        }
    }
    Ok(chosen.into_iter().collect())
}

/// Extracts still-frame (X, Y) columns from a stored path CSV.
fn write_trajectory(src: &Path, dest: &Path) -> Result<()> {
    let text =
        fs::read_to_string(src).with_context(|| format!("reading {}", src.display()))?;
    let mut out = String::from("X,Y\n");
    for line in text.lines().skip(1) {
        let mut cols = line.split(',');
        let x = cols.nth(1).ok_or_else(|| anyhow!("malformed path row in {}", src.display()))?;
        let y = cols.next().ok_or_else(|| anyhow!("malformed path row in {}", src.display()))?;
        out.push_str(x);
        out.push(',');
        out.push_str(y);
        out.push('\n');
    }
    fs::write(dest, out).with_context(|| format!("writing {}", dest.display()))?;
    Ok(())
}

/// Appends one CSV row of shortest-round-trip floats.
fn push_row(csv: &mut String, values: &[f64]) {
    use std::fmt::Write as _;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            csv.push(',');
        }
        write!(csv, "{v}").expect("string write");
    }
    csv.push('\n');
}
