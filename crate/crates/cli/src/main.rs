//! Command-line pipeline: structural checks, barrier constants, flow runs and
//! bound verification, driven by an INI config with deterministic seeds.
//!
//! Exit codes: 0 success (and, for `verify`/`pipeline`, bound not violated);
//! 1 generic failure or violated bound; 2 config error; 3 theorem hypothesis
//! not met; 4 solution blow-up.

use std::collections::BTreeMap;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use anisoflow::config::{RunConfig, SnapshotFormat};
use anisoflow::constants::{
    compute_a_p, compute_c2, compute_s_eps, compute_trace_bounds, estimate_c1, theorem_params,
    BarrierParams, InteriorGeometry, SearchBudget, Theorem,
};
use anisoflow::estimates::{verify, EstimateReport};
use anisoflow::integrand::Integrand;
use anisoflow::solver::{run as run_flow, GraphState, GridSpec, Snapshot, Trajectory};
use anisoflow::structure::{check_structure, StructureReport};
use anisoflow::Error;

const SNAPSHOT_MAGIC: &[u8; 8] = b"ANISNAP1";
const STRUCTURE_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "anisoflow", version, about = "Anisotropic mean curvature flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the INI configuration.
    #[arg(long, global = true, default_value = "flow.ini")]
    config: PathBuf,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Format of the verification rows artifact.
    #[arg(long, global = true, value_enum, default_value_t = RowFormat::Csv)]
    format: RowFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RowFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the structural checks and write a report; exits 0 iff all pass.
    Check,
    /// Compute the barrier constants and write them as JSON.
    Constants,
    /// Evolve the configured initial data and write snapshots + diagnostics.
    Run,
    /// Verify a previously written trajectory against the configured theorem.
    Verify,
    /// check + constants + run + verify, stopping at the first hypothesis failure.
    Pipeline,
}

/// Run manifest: the reproducibility record of one invocation. Wall-clock
/// times live only here, so every other artifact is byte-deterministic.
#[derive(Serialize)]
struct RunManifest<'a> {
    config_path: String,
    seed: u64,
    resolved_config: &'a RunConfig,
    artifact_version: &'static str,
    outputs: Vec<String>,
    wall_clock_ms: BTreeMap<String, u128>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } => 2,
        Error::HypothesisNotMet { .. } => 3,
        Error::BlowUp { .. } => 4,
        _ => 1,
    }
}

struct Ctx {
    config: RunConfig,
    config_path: String,
    out: PathBuf,
    row_format: RowFormat,
    outputs: Vec<String>,
    phases: BTreeMap<String, u128>,
}

impl Ctx {
    fn artifact(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn timed<T>(&mut self, phase: &str, f: impl FnOnce(&mut Self) -> anisoflow::error::Result<T>)
        -> anisoflow::error::Result<T> {
        let start = Instant::now();
        let value = f(self)?;
        self.phases.insert(phase.to_string(), start.elapsed().as_millis());
        Ok(value)
    }
}

fn execute(cli: &Cli) -> anisoflow::error::Result<ExitCode> {
    let text = std::fs::read_to_string(&cli.config).map_err(|e| Error::Config {
        line: 0,
        message: format!("cannot read {}: {e}", cli.config.display()),
    })?;
    let mut config = RunConfig::parse(&text)?;
    if let Some(seed) = cli.seed {
        config.budget.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)?;

    let mut ctx = Ctx {
        config,
        config_path: cli.config.display().to_string(),
        out: cli.out.clone(),
        row_format: cli.format,
        outputs: Vec::new(),
        phases: BTreeMap::new(),
    };

    let code = match cli.command {
        Command::Check => cmd_check(&mut ctx)?,
        Command::Constants => cmd_constants(&mut ctx)?,
        Command::Run => cmd_run(&mut ctx)?,
        Command::Verify => cmd_verify(&mut ctx)?,
        Command::Pipeline => cmd_pipeline(&mut ctx)?,
    };

    write_manifest(&ctx)?;
    Ok(code)
}

// ---------------------------------------------------------------------------
// subcommands

fn cmd_check(ctx: &mut Ctx) -> anisoflow::error::Result<ExitCode> {
    let report = ctx.timed("check", run_check)?;
    Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn run_check(ctx: &mut Ctx) -> anisoflow::error::Result<StructureReport<f64>> {
    let f = ctx.config.build_integrand()?;
    let samples = ctx.config.budget.direction_samples.max(1000);
    let report = check_structure(&f, samples, ctx.config.budget.seed, STRUCTURE_TOL)?;
    let path = ctx.artifact("check.json");
    write_json(&path, &report)?;
    println!(
        "structure: {} ({} samples, seed {}) -> {}",
        f.family_name(),
        samples,
        ctx.config.budget.seed,
        if report.all_pass() { "all checks pass" } else { "checks FAILED" }
    );
    Ok(report)
}

#[derive(Serialize)]
struct ConstantsDoc {
    family: String,
    n: usize,
    #[serde(rename = "C1")]
    c1: f64,
    #[serde(rename = "A_P")]
    a_p: BTreeMap<String, f64>,
    k_lo: Option<f64>,
    k_hi: Option<f64>,
    #[serde(rename = "C2")]
    c2: Option<f64>,
    #[serde(rename = "S_eps")]
    s_eps: BTreeMap<String, f64>,
    budget: SearchBudget,
    seed: u64,
}

fn cmd_constants(ctx: &mut Ctx) -> anisoflow::error::Result<ExitCode> {
    ctx.timed("constants", |ctx| run_constants(ctx).map(|_| ()))?;
    Ok(ExitCode::SUCCESS)
}

fn run_constants(ctx: &mut Ctx) -> anisoflow::error::Result<ConstantsDoc> {
    let f = ctx.config.build_integrand()?;
    let budget = ctx.config.budget.clone();
    let n = f.dim();

    let c1 = estimate_c1(&f, &budget)?;
    let f_down = f.eval(&anisoflow::covector::Covector::downward(n))?;
    let p_default = 2.0 * f_down;
    let mut a_p = BTreeMap::new();
    a_p.insert(format!("{p_default}"), compute_a_p(&f, p_default, &budget)?);

    let (k_lo, k_hi) = if n > 1 {
        let (lo, hi) = compute_trace_bounds(&f, &budget)?;
        (Some(lo), Some(hi))
    } else {
        (None, None)
    };

    let symmetric = anisoflow::structure::symmetry_residual(&f, 128, budget.seed)? <= 1e-8;
    let mut s_eps = BTreeMap::new();
    let c2 = if symmetric {
        let eps = (2.0 / n as f64).sqrt();
        s_eps.insert(format!("{eps}"), compute_s_eps(&f, eps, &budget)?);
        Some(compute_c2(&f, &budget)?)
    } else {
        None
    };

    let doc = ConstantsDoc {
        family: f.family_name().to_string(),
        n,
        c1,
        a_p,
        k_lo,
        k_hi,
        c2,
        s_eps,
        budget: budget.clone(),
        seed: budget.seed,
    };
    let path = ctx.artifact("constants.json");
    write_json(&path, &doc)?;
    println!("constants: {} n={} C1={:.6e}", doc.family, doc.n, doc.c1);
    Ok(doc)
}

fn cmd_run(ctx: &mut Ctx) -> anisoflow::error::Result<ExitCode> {
    ctx.timed("run", |ctx| run_simulation(ctx).map(|_| ()))?;
    Ok(ExitCode::SUCCESS)
}

fn run_simulation(ctx: &mut Ctx) -> anisoflow::error::Result<Trajectory<f64>> {
    let f = ctx.config.build_integrand()?;
    let grid = ctx.config.build_grid()?;
    let data = ctx.config.build_initial()?;
    let settings = ctx.config.build_flow_settings()?;
    let u0 = data.sample(&grid);
    let initial = GraphState::new(u0, 0.0, &grid)?;
    let traj = run_flow(&f, &grid, initial, &settings)?;

    let format = ctx
        .config
        .time
        .as_ref()
        .map(|t| t.output)
        .unwrap_or(SnapshotFormat::Csv);
    match format {
        SnapshotFormat::Csv => {
            let path = ctx.artifact("snapshots.csv");
            write_snapshots_csv(&path, &traj)?;
        }
        SnapshotFormat::Bin => {
            let path = ctx.artifact("snapshots.bin");
            write_snapshots_bin(&path, &grid, &traj)?;
        }
        SnapshotFormat::None => {}
    }
    let path = ctx.artifact("diagnostics.csv");
    write_diagnostics_csv(&path, &traj)?;
    let last = traj.snapshots.last().expect("run always yields a snapshot");
    println!(
        "run: {} snapshots to t = {} (dt0 = {:.3e}, max F = {:.6})",
        traj.snapshots.len(),
        last.state.t,
        traj.dt0,
        last.diagnostics.max_f
    );
    Ok(traj)
}

fn cmd_verify(ctx: &mut Ctx) -> anisoflow::error::Result<ExitCode> {
    let report = ctx.timed("verify", |ctx| {
        let f = ctx.config.build_integrand()?;
        let grid = ctx.config.build_grid()?;
        let traj = read_trajectory(ctx, &f, &grid)?;
        verify_trajectory(ctx, &f, &grid, &traj)
    })?;
    Ok(if report.violated { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn theorem_of(ctx: &Ctx) -> anisoflow::error::Result<(Theorem, Option<f64>, Option<f64>)> {
    let cfg = ctx
        .config
        .theorem
        .as_ref()
        .ok_or_else(|| Error::precondition("this command needs a [theorem] section"))?;
    Ok((Theorem::from_id(cfg.id)?, cfg.radius, cfg.height))
}

fn verify_trajectory(
    ctx: &mut Ctx,
    f: &Integrand<f64>,
    grid: &GridSpec<f64>,
    traj: &Trajectory<f64>,
) -> anisoflow::error::Result<EstimateReport<f64>> {
    let (theorem, radius, height) = theorem_of(ctx)?;
    let m = height.unwrap_or_else(|| traj.sup_abs_u());
    let geometry = radius.map(|r| InteriorGeometry { radius: r });
    let params: BarrierParams<f64> =
        theorem_params(f, m, theorem, geometry, &ctx.config.budget)?;
    let report = verify(traj, f, theorem, &params, grid)?;

    match ctx.row_format {
        RowFormat::Csv => {
            let path = ctx.artifact("verify.csv");
            write_verify_csv(&path, &report)?;
        }
        RowFormat::Json => {
            let path = ctx.artifact("verify_rows.json");
            write_json(&path, &report.rows)?;
        }
    }
    let summary = VerifySummary {
        theorem: report.theorem,
        min_margin: report.min_margin,
        violated: report.violated,
        params: &report.params,
    };
    let path = ctx.artifact("verify.json");
    write_json(&path, &summary)?;
    match report.min_margin {
        Some(m) => println!(
            "verify: theorem {} min margin {:.6} over {} snapshots -> {}",
            report.theorem,
            m,
            report.rows.len(),
            if report.violated { "VIOLATED" } else { "holds" }
        ),
        None => println!(
            "verify: theorem {} had no snapshots inside the verification window",
            report.theorem
        ),
    }
    Ok(report)
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    theorem: u8,
    min_margin: Option<f64>,
    violated: bool,
    params: &'a BarrierParams<f64>,
}

fn cmd_pipeline(ctx: &mut Ctx) -> anisoflow::error::Result<ExitCode> {
    let (theorem, _, _) = theorem_of(ctx)?;

    let report = ctx.timed("check", run_check)?;
    if !report.core_pass() {
        return Err(Error::hypothesis(
            "structural checks failed (homogeneity / radial identities / convexity)",
        ));
    }
    let needs_symmetry = matches!(theorem, Theorem::PeriodicSymmetric | Theorem::Interior);
    if needs_symmetry && !report.symmetry_pass {
        return Err(Error::hypothesis(format!(
            "symmetry condition (F even in the vertical coordinate) fails with residual {:e}",
            report.symmetry_err
        )));
    }

    ctx.timed("constants", |ctx| run_constants(ctx).map(|_| ()))?;
    let traj = ctx.timed("run", run_simulation)?;
    let report = ctx.timed("verify", |ctx| {
        let f = ctx.config.build_integrand()?;
        let grid = ctx.config.build_grid()?;
        verify_trajectory(ctx, &f, &grid, &traj)
    })?;
    Ok(if report.violated { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

// ---------------------------------------------------------------------------
// artifact I/O

fn write_json<T: Serialize>(path: &Path, value: &T) -> anisoflow::error::Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| Error::precondition(format!("serialization failed: {e}")))?;
    out.write_all(b"\n")?;
    Ok(())
}

fn write_snapshots_csv(path: &Path, traj: &Trajectory<f64>) -> anisoflow::error::Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(b"t,cell,u\n")?;
    for snap in &traj.snapshots {
        for (cell, u) in snap.state.u.iter().enumerate() {
            writeln!(out, "{},{},{}", snap.state.t, cell, u)?;
        }
    }
    Ok(())
}

fn write_snapshots_bin(
    path: &Path,
    grid: &GridSpec<f64>,
    traj: &Trajectory<f64>,
) -> anisoflow::error::Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&(grid.n as u32).to_le_bytes())?;
    out.write_all(&(grid.cells as u32).to_le_bytes())?;
    for snap in &traj.snapshots {
        out.write_all(&snap.state.t.to_le_bytes())?;
        for u in &snap.state.u {
            out.write_all(&u.to_le_bytes())?;
        }
    }
    Ok(())
}

fn write_diagnostics_csv(path: &Path, traj: &Trajectory<f64>) -> anisoflow::error::Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(b"t,max_u,min_u,max_F,dt\n")?;
    for snap in &traj.snapshots {
        let d = &snap.diagnostics;
        writeln!(out, "{},{},{},{},{}", snap.state.t, d.max_u, d.min_u, d.max_f, d.dt)?;
    }
    Ok(())
}

fn write_verify_csv(path: &Path, report: &EstimateReport<f64>) -> anisoflow::error::Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(b"t,value,bound,margin,cell\n")?;
    for row in &report.rows {
        writeln!(out, "{},{},{},{},{}", row.t, row.value, row.bound, row.margin, row.cell)?;
    }
    Ok(())
}

/// Rebuild the trajectory a previous `run` wrote into the output directory.
fn read_trajectory(
    ctx: &Ctx,
    f: &Integrand<f64>,
    grid: &GridSpec<f64>,
) -> anisoflow::error::Result<Trajectory<f64>> {
    let dt0 = read_dt0(&ctx.out.join("diagnostics.csv"))?;
    let bin = ctx.out.join("snapshots.bin");
    let csv = ctx.out.join("snapshots.csv");
    let states: Vec<GraphState<f64>> = if bin.exists() {
        read_snapshots_bin(&bin, grid)?
    } else if csv.exists() {
        read_snapshots_csv(&csv, grid)?
    } else {
        return Err(Error::precondition(format!(
            "no snapshots found in {} (run the `run` command first, with output = csv or bin)",
            ctx.out.display()
        )));
    };
    let snapshots = states
        .into_iter()
        .map(|state| rebuild_snapshot(f, grid, state))
        .collect::<anisoflow::error::Result<Vec<_>>>()?;
    Ok(Trajectory { snapshots, dt0 })
}

fn rebuild_snapshot(
    f: &Integrand<f64>,
    grid: &GridSpec<f64>,
    state: GraphState<f64>,
) -> anisoflow::error::Result<Snapshot<f64>> {
    let diffs = anisoflow::solver::differentials(&state, grid);
    let mut max_u = f64::NEG_INFINITY;
    let mut min_u = f64::INFINITY;
    let mut max_f = f64::NEG_INFINITY;
    for (cell, &u) in state.u.iter().enumerate() {
        max_u = max_u.max(u);
        min_u = min_u.min(u);
        max_f = max_f.max(f.eval_graph_normal(diffs.du_at(cell)));
    }
    Ok(Snapshot {
        state,
        diagnostics: anisoflow::solver::Diagnostics { max_u, min_u, max_f, dt: 0.0 },
    })
}

fn read_dt0(path: &Path) -> anisoflow::error::Result<f64> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::precondition(format!("cannot read {} (run `run` first): {e}", path.display()))
    })?;
    let line = text
        .lines()
        .nth(1)
        .ok_or_else(|| Error::precondition("diagnostics file has no data rows"))?;
    let dt = line
        .split(',')
        .nth(4)
        .and_then(|v| v.parse::<f64>().ok())
        .ok_or_else(|| Error::precondition("malformed diagnostics row"))?;
    Ok(dt)
}

fn read_snapshots_csv(
    path: &Path,
    grid: &GridSpec<f64>,
) -> anisoflow::error::Result<Vec<GraphState<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let cells = grid.cell_count();
    let mut states: Vec<GraphState<f64>> = Vec::new();
    let mut current_t = f64::NAN;
    let mut current: Vec<f64> = Vec::new();
    for line in text.lines().skip(1) {
        let mut parts = line.split(',');
        let (Some(t), Some(_cell), Some(u)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::precondition("malformed snapshot row"));
        };
        let t: f64 = t.parse().map_err(|_| Error::precondition("malformed snapshot time"))?;
        let u: f64 = u.parse().map_err(|_| Error::precondition("malformed snapshot value"))?;
        if t != current_t {
            if !current.is_empty() {
                states.push(GraphState::new(std::mem::take(&mut current), current_t, grid)?);
            }
            current_t = t;
        }
        current.push(u);
    }
    if !current.is_empty() {
        states.push(GraphState::new(current, current_t, grid)?);
    }
    if states.iter().any(|s| s.u.len() != cells) {
        return Err(Error::precondition("snapshot length does not match the grid"));
    }
    Ok(states)
}

fn read_snapshots_bin(
    path: &Path,
    grid: &GridSpec<f64>,
) -> anisoflow::error::Result<Vec<GraphState<f64>>> {
    let mut file = std::fs::File::open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    if bytes.len() < 16 || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(Error::precondition("snapshot file has an unknown header"));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cells_per_axis = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if n != grid.n || cells_per_axis != grid.cells {
        return Err(Error::precondition("snapshot file does not match the configured grid"));
    }
    let cells = grid.cell_count();
    let block = 8 * (cells + 1);
    let body = &bytes[16..];
    if body.len() % block != 0 {
        return Err(Error::precondition("snapshot file is truncated"));
    }
    let mut states = Vec::with_capacity(body.len() / block);
    for chunk in body.chunks_exact(block) {
        let t = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let u: Vec<f64> = chunk[8..]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        states.push(GraphState::new(u, t, grid)?);
    }
    Ok(states)
}

fn write_manifest(ctx: &Ctx) -> anisoflow::error::Result<()> {
    let manifest = RunManifest {
        config_path: ctx.config_path.clone(),
        seed: ctx.config.budget.seed,
        resolved_config: &ctx.config,
        artifact_version: env!("CARGO_PKG_VERSION"),
        outputs: ctx.outputs.clone(),
        wall_clock_ms: ctx.phases.clone(),
    };
    write_json(&ctx.out.join("manifest.json"), &manifest)
}
