//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration or
//! validation error, 3 numerical or convergence error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, RunConfig, SWEEP_PARAMS};
use crate::error::{Error, Result};
use crate::model::validate_scenario;
use crate::output::{trajectory_rows, write_csv, write_json, TRAJECTORY_HEADER};
use crate::qshift::{spectral_density, AmplitudeKernel, Window};
use crate::report::ShiftReport;
use crate::trajectory::Trajectory;
use crate::verify::{cos_grid, geometric, run_suite, VerifyReport};

#[derive(Debug, Parser)]
#[command(name = "radshift", version, about = "Radiation-reaction position shift of a charge crossing a potential step")]
pub struct Cli {
    /// TOML configuration file; defaults to the canonical scenario.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (overrides output.workers; 0 = all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output formats (overrides output.formats).
    #[arg(long, global = true, value_delimiter = ',')]
    pub format: Vec<FormatArg>,
    /// Seed for probe-point selection (overrides output.seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Config override, `section.key=value`; repeatable.
    #[arg(long = "set", global = true)]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the unperturbed trajectory with the LD force.
    Trajectory,
    /// Compute every shift route and compare them.
    Shift,
    /// Tabulate the emission amplitude on a (k, cosθ) grid.
    Amplitude(AmplitudeArgs),
    /// Run the invariant suite.
    Verify,
    /// Repeat `shift` over values of one parameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct AmplitudeArgs {
    #[arg(long, default_value_t = 0.1)]
    pub k_min: f64,
    #[arg(long, default_value_t = 30.0)]
    pub k_max: f64,
    /// Number of geometrically spaced wave numbers.
    #[arg(long, default_value_t = 10)]
    pub nk: usize,
    /// Number of uniformly spaced direction cosines in [-0.95, 0.95].
    #[arg(long, default_value_t = 10)]
    pub ncos: usize,
    /// Explicit direction cosines; replaces --ncos.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub cos: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// One of p, V0, Z1, Z2, alpha_c.
    #[arg(long)]
    pub param: String,
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub values: Vec<f64>,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                3
            }
        }
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.set)?;
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    if let Some(w) = cli.workers {
        cfg.output.workers = w;
    }
    if let Some(s) = cli.seed {
        cfg.output.seed = s;
    }
    if !cli.format.is_empty() {
        cfg.output.formats = cli
            .format
            .iter()
            .map(|f| match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            })
            .collect();
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<bool> {
    let cfg = effective_config(cli)?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.output.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Trajectory => cmd_trajectory(&cfg),
        Command::Shift => cmd_shift(&cfg),
        Command::Amplitude(a) => cmd_amplitude(&cfg, a),
        Command::Verify => cmd_verify(&cfg),
        Command::Sweep(s) => cmd_sweep(&cfg, s),
    })
}

fn wants(cfg: &RunConfig, f: Format) -> bool {
    cfg.output.formats.contains(&f)
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output.dir.join(name)
}

/// Builds the trajectory after the turning-point scan.
pub fn build_trajectory(cfg: &RunConfig) -> Result<Trajectory> {
    let (profile, particle) = cfg.scenario()?;
    validate_scenario(&profile, &particle, cfg.simulation.delta_min)?;
    Trajectory::build(&profile, &particle, None, &cfg.simulation)
}

#[derive(Serialize)]
struct WithConfig<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn write_report<T: Serialize>(cfg: &RunConfig, name: &str, body: T) -> Result<()> {
    write_json(&out_path(cfg, name), &WithConfig { config: cfg, body })
}

#[derive(Serialize)]
pub struct TrajectorySummary {
    pub t_entry: f64,
    pub t_exit: f64,
    pub t_min: f64,
    pub zdot_0: f64,
    pub energy: f64,
    pub n_samples: usize,
}

pub fn cmd_trajectory(cfg: &RunConfig) -> Result<bool> {
    let traj = build_trajectory(cfg)?;
    if wants(cfg, Format::Csv) {
        write_csv(&out_path(cfg, "trajectory.csv"), &TRAJECTORY_HEADER, trajectory_rows(&traj))?;
    }
    let summary = TrajectorySummary {
        t_entry: traj.t_entry,
        t_exit: traj.t_exit,
        t_min: traj.t_min,
        zdot_0: traj.v_out,
        energy: traj.energy,
        n_samples: traj.samples().len(),
    };
    println!(
        "trajectory: {} samples, t_entry = {:.10e}, t_exit = {:.10e}",
        summary.n_samples, summary.t_entry, summary.t_exit
    );
    if wants(cfg, Format::Json) {
        write_report(cfg, "trajectory.json", summary)?;
    }
    Ok(true)
}

pub fn cmd_shift(cfg: &RunConfig) -> Result<bool> {
    let traj = build_trajectory(cfg)?;
    let report = ShiftReport::compute(&traj, &cfg.simulation)?;
    for (name, v) in report.values() {
        println!("{name:>28} = {v:.12e}");
    }
    println!("max rel diff {:.3e} (fd {:.3e}): {}", report.max_rel_diff, report.max_rel_diff_fd, verdict(report.pass));
    if wants(cfg, Format::Json) {
        write_report(cfg, "shift.json", &report)?;
    }
    if wants(cfg, Format::Csv) {
        let (header, row) = shift_row(&report);
        write_csv(&out_path(cfg, "shift.csv"), &header, [row])?;
    }
    Ok(report.pass)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn shift_row(r: &ShiftReport) -> (Vec<&'static str>, Vec<f64>) {
    let mut header: Vec<&'static str> = r.values().iter().map(|v| v.0).collect();
    let mut row: Vec<f64> = r.values().iter().map(|v| v.1).collect();
    header.extend(["max_rel_diff", "max_rel_diff_fd", "pass"]);
    row.extend([r.max_rel_diff, r.max_rel_diff_fd, if r.pass { 1.0 } else { 0.0 }]);
    (header, row)
}

pub const SPECTRUM_HEADER: [&str; 8] =
    ["k", "cos_theta", "re_A_t", "im_A_t", "re_A_z", "im_A_z", "spectral_density", "form_rel_diff"];

#[derive(Serialize)]
struct SpectrumSummary {
    n_points: usize,
    max_form_rel_diff: f64,
    windows: Vec<Window>,
}

pub fn cmd_amplitude(cfg: &RunConfig, args: &AmplitudeArgs) -> Result<bool> {
    if !(args.k_min > 0.0 && args.k_max >= args.k_min && args.nk >= 1) {
        return Err(Error::param("k grid", "need 0 < k_min <= k_max and nk >= 1"));
    }
    let traj = build_trajectory(cfg)?;
    let ks = geometric(args.k_min, args.k_max, args.nk);
    let cs = if args.cos.is_empty() { cos_grid(args.ncos) } else { args.cos.clone() };
    if let Some(c) = cs.iter().find(|c| !(c.abs() <= 1.0)) {
        return Err(Error::param("cos", format!("{c} outside [-1, 1]")));
    }
    let sim = &cfg.simulation;
    let per_dir: Vec<Result<(Window, Vec<Vec<f64>>)>> = cs
        .par_iter()
        .map(|&c| {
            let window = Window::from_config(&traj, c, sim)?;
            let kernel = AmplitudeKernel::new(&traj, c);
            let mut rows = Vec::with_capacity(ks.len());
            for &k in &ks {
                let b = kernel.ibp(k, &window, sim.max_panels)?;
                let d = kernel.direct(k, &window, sim.max_panels)?;
                rows.push(vec![k, c, b.a_t.re, b.a_t.im, b.a_z.re, b.a_z.im, spectral_density(&b), d.rel_diff(&b)]);
            }
            Ok((window, rows))
        })
        .collect();
    let mut rows = Vec::new();
    let mut windows = Vec::new();
    for r in per_dir {
        let (w, mut rs) = r?;
        windows.push(w);
        rows.append(&mut rs);
    }
    let max_diff = rows.iter().map(|r| r[7]).fold(0.0, f64::max);
    println!("amplitude: {} points, max direct/ibp rel diff {:.3e}", rows.len(), max_diff);
    if wants(cfg, Format::Csv) {
        write_csv(&out_path(cfg, "spectrum.csv"), &SPECTRUM_HEADER, rows.iter().cloned())?;
    }
    if wants(cfg, Format::Json) {
        write_report(cfg, "spectrum.json", SpectrumSummary { n_points: rows.len(), max_form_rel_diff: max_diff, windows })?;
    }
    Ok(true)
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<bool> {
    let traj = build_trajectory(cfg)?;
    let report: VerifyReport = run_suite(&traj, cfg.output.seed, &cfg.simulation);
    for c in &report.checks {
        println!("{} {:<40} measured {:.3e} tolerance {:.1e}", verdict(c.pass), c.name, c.measured, c.tolerance);
        if let Some(e) = &c.error {
            println!("     {e}");
        }
    }
    write_report(cfg, "verify.json", &report)?;
    Ok(report.pass)
}

#[derive(Serialize)]
struct SweepEntry {
    value: f64,
    report: ShiftReport,
}

#[derive(Serialize)]
struct SweepBody {
    param: String,
    entries: Vec<SweepEntry>,
}

pub fn cmd_sweep(cfg: &RunConfig, args: &SweepArgs) -> Result<bool> {
    if !SWEEP_PARAMS.contains(&args.param.as_str()) {
        return Err(Error::param(
            "param",
            format!("unknown sweep parameter `{}`; expected one of {}", args.param, SWEEP_PARAMS.join(", ")),
        ));
    }
    let configs: Vec<RunConfig> =
        args.values.iter().map(|&v| cfg.with_param(&args.param, v)).collect::<Result<_>>()?;
    for c in &configs {
        c.validate()?;
    }
    let reports: Vec<Result<ShiftReport>> = configs
        .par_iter()
        .map(|c| build_trajectory(c).and_then(|t| ShiftReport::compute(&t, &c.simulation)))
        .collect();
    let reports: Vec<ShiftReport> = reports.into_iter().collect::<Result<_>>()?;
    let mut pass = true;
    let mut rows = Vec::new();
    let mut header = vec!["value"];
    for (v, r) in args.values.iter().zip(&reports) {
        let (h, row) = shift_row(r);
        if rows.is_empty() {
            header.extend(h);
        }
        let mut full = vec![*v];
        full.extend(row);
        rows.push(full);
        pass &= r.pass;
        println!("{} = {v:.6e}: dz = {:.12e}, max rel diff {:.3e}", args.param, r.dz_classical_closed, r.max_rel_diff);
    }
    if wants(cfg, Format::Csv) {
        write_csv(&out_path(cfg, "sweep.csv"), &header, rows)?;
    }
    if wants(cfg, Format::Json) {
        let entries: Vec<SweepEntry> = args
            .values
            .iter()
            .zip(reports)
            .map(|(&value, report)| SweepEntry { value, report })
            .collect();
        write_report(cfg, "sweep.json", SweepBody { param: args.param.clone(), entries })?;
    }
    Ok(pass)
}
