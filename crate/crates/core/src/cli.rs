//! Command-line front end: `run`, `sweep` and `list`.
//!
//! Exit codes: 0 when the simulation completed (whatever the verdicts),
//! 2 for usage, parse and schema errors, 3 for solver failures and 4 for
//! I/O errors.

use crate::scenarios::{build_builtin, builtin_names, cct_sweep, load_scenario, Scenario, ScenarioError, SweepTable};
use crate::sim::{run_simulation, SimConfig, SimResult, SolverStats};
use crate::synccheck::{analyze, CrossCheck, SyncAnalysis, SyncSettings, SyncVerdict};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "synchrolens",
    version,
    about = "Complex-frequency synchronization analysis of power system transients"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write trajectories, chi series and a report.
    Run(RunArgs),
    /// Sweep the fault clearing time and locate the ALS boundary.
    Sweep(SweepArgs),
    /// List the built-in scenarios.
    List(ListArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Name of a built-in scenario (see `list`).
    #[arg(long)]
    pub builtin: Option<String>,
    /// Scenario file (TOML).
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Output directory.
    #[arg(long, env = "SYNCHROLENS_OUT", default_value = ".")]
    pub out: PathBuf,
    /// Integration step, s.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulated horizon, s.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// BLS tolerance, pu.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// ALS tail tolerance, pu.
    #[arg(long)]
    pub tail_tol: Option<f64>,
    /// Print the machine-readable result to standard output.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Move the fault clearing (and the events at the old clearing time) to this time, s.
    #[arg(long)]
    pub clear_time: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub overrides: Overrides,
    /// First clearing time, s.
    #[arg(long)]
    pub from: f64,
    /// Last clearing time, s.
    #[arg(long)]
    pub to: f64,
    /// Clearing-time step, s.
    #[arg(long)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    /// Print the catalogue as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Scenario(ScenarioError),
    Solver(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Scenario(_) => EXIT_USAGE,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Scenario(e) => write!(f, "scenario error: {e}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Scenario(e)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub source: String,
    pub dt: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub record_decimation: usize,
    pub clear_time: Option<f64>,
    pub sync: SyncSettings,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviceSummary {
    pub id: String,
    pub kind: String,
    pub bus: String,
    pub disconnected_at: Option<f64>,
    /// Largest |Im χ| after the last event, pu.
    pub max_abs_im_chi: Option<f64>,
    /// `max_abs_im_chi` exceeds 1 pu.
    pub im_chi_divergent: bool,
    pub masked_samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheckRow {
    pub device: String,
    /// `None` when the model has no closed form.
    pub error: Option<CrossCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFiles {
    pub trajectory: String,
    pub chi: String,
    pub report: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub description: String,
    pub config: ConfigEcho,
    pub last_event: f64,
    pub max_angle_spread_deg: f64,
    pub unstable: bool,
    pub devices: Vec<DeviceSummary>,
    pub verdicts: Vec<SyncVerdict>,
    pub crosscheck: Vec<CrossCheckRow>,
    pub solver: SolverStats,
    pub files: OutputFiles,
    pub exit_status: i32,
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a, &mut out).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(&a, &mut out).map(|_| ()),
        Command::List(a) => cmd_list(&a, &mut out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("synchrolens: {e}");
            e.exit_code()
        }
    }
}

fn load(source: &Source) -> Result<(Scenario, String), CliError> {
    match (&source.builtin, &source.file) {
        (Some(name), None) => Ok((build_builtin(name)?, format!("builtin:{name}"))),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Ok((load_scenario(&text)?, format!("file:{}", path.display())))
        }
        _ => Err(CliError::Usage("give exactly one of --builtin and --file".into())),
    }
}

fn apply_overrides(scenario: &mut Scenario, o: &Overrides) -> Result<(), CliError> {
    let check = |name: &str, v: Option<f64>| match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::Usage(format!("--{name} must be positive, got {x}"))),
        _ => Ok(v),
    };
    if let Some(x) = check("dt", o.dt)? {
        scenario.sim.dt = x;
    }
    if let Some(x) = check("t-end", o.t_end)? {
        scenario.sim.t_end = x;
    }
    if let Some(x) = check("epsilon", o.epsilon)? {
        scenario.sim.epsilon = x;
    }
    if let Some(x) = check("tail-tol", o.tail_tol)? {
        scenario.sim.tail_tol = x;
    }
    scenario.validate()?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}

fn num(x: f64) -> String {
    // Folds −0 into 0 so equal values print identically.
    format!("{:e}", x + 0.0)
}

/// Header of `<name>_traj.csv`.
pub fn trajectory_header(result: &SimResult) -> Vec<String> {
    let mut h = vec!["time".to_string()];
    for b in &result.bus_ids {
        h.push(format!("v_d:{b}"));
        h.push(format!("v_q:{b}"));
    }
    for d in &result.devices {
        h.push(format!("i_d:{}", d.id));
        h.push(format!("i_q:{}", d.id));
        for s in &d.state_names {
            h.push(format!("x:{}:{s}", d.id));
        }
    }
    h
}

pub fn trajectory_csv(result: &SimResult) -> String {
    let mut s = trajectory_header(result).join(",");
    s.push('\n');
    for (k, t) in result.times.iter().enumerate() {
        s.push_str(&num(*t));
        for v in &result.bus_voltages {
            let z = v.samples[k];
            let _ = write!(s, ",{},{}", num(z.re), num(z.im));
        }
        for d in &result.devices {
            let i = d.current.samples[k];
            let _ = write!(s, ",{},{}", num(i.re), num(i.im));
            for x in &d.states[k] {
                let _ = write!(s, ",{}", num(*x));
            }
        }
        s.push('\n');
    }
    s
}

/// Header of `<name>_chi.csv`.
pub fn chi_header(analysis: &SyncAnalysis) -> Vec<String> {
    let mut h = vec!["time".to_string()];
    for d in &analysis.devices {
        for c in [
            "rho_analytic",
            "omega_analytic",
            "rho_numeric",
            "omega_numeric",
            "masked",
        ] {
            h.push(format!("{c}:{}", d.id));
        }
    }
    h
}

pub fn chi_csv(analysis: &SyncAnalysis) -> String {
    let mut s = chi_header(analysis).join(",");
    s.push('\n');
    let Some(first) = analysis.devices.first() else {
        return s;
    };
    for k in 0..first.numeric.len() {
        s.push_str(&num(first.numeric.time(k)));
        for d in &analysis.devices {
            match d.analytic.as_ref().and_then(|a| a.values[k]) {
                Some(c) => {
                    let _ = write!(s, ",{},{}", num(c.rho), num(c.omega));
                }
                None => s.push_str(",,"),
            }
            match d.numeric.values[k] {
                Some(c) => {
                    let _ = write!(s, ",{},{},0", num(c.rho), num(c.omega));
                }
                None => s.push_str(",,,1"),
            }
        }
        s.push('\n');
    }
    s
}

fn device_summaries(result: &SimResult, analysis: &SyncAnalysis) -> Vec<DeviceSummary> {
    analysis
        .devices
        .iter()
        .zip(&result.devices)
        .map(|(d, rec)| {
            let max_im = (0..d.numeric.len())
                .filter(|&k| d.numeric.time(k) > analysis.last_event)
                .filter_map(|k| d.numeric.values[k].map(|c| c.omega.abs()))
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
            DeviceSummary {
                id: d.id.clone(),
                kind: rec.kind.as_str().to_string(),
                bus: rec.bus.clone(),
                disconnected_at: rec.disconnected_at,
                max_abs_im_chi: max_im,
                im_chi_divergent: max_im.is_some_and(|m| m > 1.0),
                masked_samples: d.numeric.masked_count(),
            }
        })
        .collect()
}

/// Runs the simulation and the synchronization analysis and writes the
/// three output files.
pub fn cmd_run(args: &RunArgs, out: &mut impl Write) -> Result<RunReport, CliError> {
    let (mut scenario, source) = load(&args.source)?;
    if let Some(t) = args.clear_time {
        scenario = scenario.with_clear_time(t)?;
    }
    apply_overrides(&mut scenario, &args.overrides)?;
    let system = scenario.build_system()?;
    let config: SimConfig = scenario.sim_config();
    let result = run_simulation(&system, &config).map_err(|e| CliError::Solver(e.to_string()))?;
    let settings = scenario.sync_settings();
    let analysis = analyze(&result, &settings).map_err(|e| CliError::Usage(format!("analysis: {e}")))?;

    let dir = &args.overrides.out;
    ensure_dir(dir)?;
    let name = scenario.name().to_string();
    let traj_path = dir.join(format!("{name}_traj.csv"));
    let chi_path = dir.join(format!("{name}_chi.csv"));
    let report_path = dir.join(format!("{name}_report.json"));
    write_atomic(&traj_path, trajectory_csv(&result).as_bytes())?;
    write_atomic(&chi_path, chi_csv(&analysis).as_bytes())?;

    let report = RunReport {
        scenario: name,
        description: scenario.system.description.clone(),
        config: ConfigEcho {
            source,
            dt: config.dt,
            t_end: config.t_end,
            newton_tol: config.newton_tol,
            newton_max_iter: config.newton_max_iter,
            record_decimation: config.record_decimation,
            clear_time: args.clear_time,
            sync: settings,
        },
        last_event: analysis.last_event,
        max_angle_spread_deg: analysis.max_angle_spread.to_degrees(),
        unstable: analysis.unstable,
        devices: device_summaries(&result, &analysis),
        verdicts: analysis.verdicts(),
        crosscheck: analysis
            .devices
            .iter()
            .map(|d| CrossCheckRow {
                device: d.id.clone(),
                error: d.crosscheck.clone(),
            })
            .collect(),
        solver: result.stats,
        files: OutputFiles {
            trajectory: traj_path.display().to_string(),
            chi: chi_path.display().to_string(),
            report: report_path.display().to_string(),
        },
        exit_status: EXIT_OK,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    write_atomic(&report_path, json.as_bytes())?;

    let io = |e: std::io::Error| CliError::Io(format!("stdout: {e}"));
    if args.overrides.json {
        writeln!(out, "{json}").map_err(io)?;
    } else {
        writeln!(
            out,
            "{}: max angle spread {:.1} deg{}",
            report.scenario,
            report.max_angle_spread_deg,
            if report.unstable { " (unstable)" } else { "" }
        )
        .map_err(io)?;
        for v in &report.verdicts {
            let fmt = |p: Option<bool>| match p {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "n/a",
            };
            writeln!(
                out,
                "  {:<12} {:<16} BLS {:<4} ALS {:<4} {}",
                v.device,
                v.kind.as_str(),
                fmt(v.bls.as_ref().map(|b| b.pass)),
                fmt(v.als.as_ref().map(|a| a.pass)),
                v.notes.join("; ")
            )
            .map_err(io)?;
        }
        writeln!(
            out,
            "wrote {}, {}, {}",
            report.files.trajectory, report.files.chi, report.files.report
        )
        .map_err(io)?;
    }
    Ok(report)
}

pub fn sweep_csv(table: &SweepTable) -> String {
    let mut s = String::from("t_cl,max_delta_swing,als_pass\n");
    for r in &table.rows {
        let swing = r.max_delta_swing.map(num).unwrap_or_default();
        let als = r.als_pass.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{swing},{als}", num(r.t_cl));
    }
    s
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut impl Write) -> Result<SweepTable, CliError> {
    let (mut scenario, _) = load(&args.source)?;
    apply_overrides(&mut scenario, &args.overrides)?;
    if !(args.step > 0.0) || !(args.to >= args.from) {
        return Err(CliError::Usage(format!(
            "empty sweep range: need --step > 0 and --to >= --from (got from {}, to {}, step {})",
            args.from, args.to, args.step
        )));
    }
    let table = cct_sweep(&scenario, args.from, args.to, args.step)?;
    let dir = &args.overrides.out;
    ensure_dir(dir)?;
    let path = dir.join(format!("{}_sweep.csv", scenario.name()));
    write_atomic(&path, sweep_csv(&table).as_bytes())?;

    let io = |e: std::io::Error| CliError::Io(format!("stdout: {e}"));
    if args.overrides.json {
        let json = serde_json::to_string_pretty(&table).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(out, "{json}").map_err(io)?;
    } else {
        for r in &table.rows {
            match (&r.error, r.als_pass) {
                (Some(e), _) => writeln!(out, "t_cl {:.4} s  error: {e}", r.t_cl),
                (None, als) => writeln!(
                    out,
                    "t_cl {:.4} s  max swing {:8.1} deg  ALS {}",
                    r.t_cl,
                    r.max_delta_swing.unwrap_or(f64::NAN),
                    if als == Some(true) { "pass" } else { "fail" }
                ),
            }
            .map_err(io)?;
        }
        match table.boundary {
            Some((pass, fail)) => writeln!(out, "boundary between {pass:.4} s (pass) and {fail:.4} s (fail)"),
            None if table.monotone => writeln!(out, "no boundary in range"),
            None => writeln!(out, "no monotone boundary: verdicts switch more than once"),
        }
        .map_err(io)?;
        writeln!(out, "wrote {}", path.display()).map_err(io)?;
    }
    Ok(table)
}

#[derive(Debug, Clone, Serialize)]
struct CatalogueEntry {
    name: &'static str,
    description: String,
}

pub fn cmd_list(args: &ListArgs, out: &mut impl Write) -> Result<(), CliError> {
    let mut entries = Vec::new();
    for name in builtin_names() {
        let s = build_builtin(name)?;
        entries.push(CatalogueEntry {
            name,
            description: s.system.description.clone(),
        });
    }
    let io = |e: std::io::Error| CliError::Io(format!("stdout: {e}"));
    if args.json {
        let json = serde_json::to_string_pretty(&entries).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(out, "{json}").map_err(io)?;
    } else {
        let width = entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
        for e in &entries {
            writeln!(out, "{:<width$}  {}", e.name, e.description).map_err(io)?;
        }
    }
    Ok(())
}
