//! The `srbm-traj` command line. Exit codes: 0 ok, 1 usage or input error,
//! 2 solve or verification failure, 3 sweep finished with gaps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::ConfigFile;
use crate::error::{Error, Result};
use crate::library::{
    sha256_hex, sweep, LibraryEntry, Provenance, SweepParameter, Trajectory, TrajectoryLibrary,
    FORMAT_HEADER,
};
use crate::maneuvers::{ManeuverKind, ManeuverRequest, ManeuverSpec};
use crate::reward::{clock_value, evaluate, FootSummary, RewardBreakdown, RewardConfig, RobotSummary};
use crate::solver::{self, check_feasibility, cold_start, SolveOptions};
use crate::srbm::{Quaternion, Vec3};
use crate::transcription::{assemble, ConstraintSets};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_GAPS: i32 = 3;

/// Replay step used by `verify`, s.
pub const VERIFY_DT: f64 = 1e-3;
/// Largest accepted normalized replay error.
pub const ROLLOUT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "srbm-traj", version, about = "Single rigid-body maneuver optimization and trajectory libraries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Forbid randomness. Always on: no command draws random numbers.
    #[arg(long, global = true, default_value_t = true)]
    pub seedless: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the maneuver described by a config file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Library file to write; `<out>.csv` and `<out>.feasibility.txt` go alongside.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        backend: Option<String>,
        /// Overrides both solver tolerances.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Run the configured parameter sweep into a directory.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Check constraints and replay consistency of a library or trajectory CSV.
    Verify {
        path: PathBuf,
        /// Needed for CSV input or libraries without an embedded config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Write plot-ready time series with mode boundaries.
    Plotdata {
        path: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score a robot log against the nearest library entry.
    Score {
        library: PathBuf,
        log: PathBuf,
        #[arg(long)]
        parameter: f64,
        #[arg(long)]
        out: PathBuf,
        /// Reward settings; otherwise the library's embedded config, else defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Treat times past the reference duration as errors instead of looping.
        #[arg(long)]
        no_loop: bool,
    },
    /// Write a config file with every section at its default.
    Template {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Sweep(_) | Error::NumericalFailure(_) | Error::Divergence { .. } => EXIT_FAILURE,
        _ => EXIT_USAGE,
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Solve {
            config,
            out,
            backend,
            tolerance,
        } => cmd_solve(config, out, backend.as_deref(), *tolerance),
        Command::Sweep {
            config,
            out,
            backend,
            tolerance,
        } => cmd_sweep(config, out, backend.as_deref(), *tolerance),
        Command::Verify {
            path,
            config,
            tolerance,
        } => cmd_verify(path, config.as_deref(), *tolerance),
        Command::Plotdata { path, out, config } => cmd_plotdata(path, out, config.as_deref()),
        Command::Score {
            library,
            log,
            parameter,
            out,
            config,
            no_loop,
        } => cmd_score(library, log, *parameter, out, config.as_deref(), !*no_loop),
        Command::Template { out } => {
            let text = ConfigFile::template().to_toml();
            match out {
                Some(p) => write_file(p, &text)?,
                None => print!("{text}"),
            }
            Ok(EXIT_OK)
        }
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn options_with(cfg: &ConfigFile, tolerance: Option<f64>) -> Result<SolveOptions> {
    let mut o = cfg.solve_options()?;
    if let Some(t) = tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Usage(format!("--tolerance must be positive, got {t}")));
        }
        o.feasibility_tol = t;
        o.optimality_tol = t;
    }
    Ok(o)
}

/// The request field a single solve is labelled by.
fn primary_parameter(kind: ManeuverKind) -> SweepParameter {
    match kind {
        ManeuverKind::Turning => SweepParameter::HeadingChange,
        ManeuverKind::SpinJump => SweepParameter::ApexHeight,
        _ => SweepParameter::Speed,
    }
}

fn provenance(text: &str, backend: &str, options: &SolveOptions) -> Provenance {
    Provenance {
        config_hash: sha256_hex(text),
        backend: backend.to_string(),
        solver: options.clone(),
        config: Some(text.to_string()),
    }
}

/// Feasibility and replay summary for one trajectory.
fn verification_text(spec: &ManeuverSpec, tr: &Trajectory, tolerance: f64, length: f64) -> Result<(String, bool)> {
    let problem = assemble(spec, &ConstraintSets::full())?;
    let report = check_feasibility(&problem, tr.z(), tolerance);
    let mut s = report.to_string();
    let (rollout_ok, line) = match tr.rollout_error(VERIFY_DT, length) {
        Ok(e) => (e <= ROLLOUT_TOLERANCE, format!("rollout_error {e:e} (limit {ROLLOUT_TOLERANCE:e})")),
        Err(e) => (false, format!("rollout_error failed: {e}")),
    };
    s.push_str(&line);
    s.push('\n');
    if !rollout_ok {
        s.push_str("violated rollout_consistency\n");
    }
    Ok((s, report.is_feasible() && rollout_ok))
}

/// Solved maneuver wrapped as a one-entry library, with the spec it came from.
pub struct SolvedConfig {
    pub spec: ManeuverSpec,
    pub library: TrajectoryLibrary,
    pub converged: bool,
}

/// Solve the maneuver described by a parsed config. `text` is the raw
/// config, embedded in the library for later verification.
pub fn solve_config(cfg: &ConfigFile, text: &str, backend: Option<&str>, tolerance: Option<f64>) -> Result<SolvedConfig> {
    let request = cfg.request()?;
    let options = options_with(cfg, tolerance)?;
    let backend_name = backend.map(str::to_string).unwrap_or(cfg.backend_name()?);
    let solver = solver::backend(&backend_name)?;
    let spec = request.build()?;
    let problem = assemble(&spec, &ConstraintSets::full())?;
    let result = solver.solve(&problem, &cold_start(&spec)?, &options)?;
    eprintln!(
        "solve: {} after {} outer / {} inner iterations, objective {:e}",
        result.status, result.outer_iterations, result.inner_iterations, result.objective
    );
    if let Some(m) = &result.message {
        eprintln!("solve: {m}");
    }

    let parameter = primary_parameter(request.kind);
    let trajectory = Trajectory::from_spec(&spec, result.solution.clone())?;
    let library = TrajectoryLibrary {
        parameter: parameter.name().to_string(),
        length_scale: request.configs.transfer.l_max,
        entries: vec![LibraryEntry {
            value: parameter.get(&request),
            trajectory,
            status: result.status,
            objective: result.objective,
            max_eq_violation: result.max_eq_violation,
            max_ineq_violation: result.max_ineq_violation,
            outer_iterations: result.outer_iterations,
            inner_iterations: result.inner_iterations,
            warm_started: false,
        }],
        gaps: Vec::new(),
        provenance: provenance(text, solver.name(), &options),
    };
    Ok(SolvedConfig { spec, library, converged: result.converged() })
}

pub fn cmd_solve(config: &Path, out: &Path, backend: Option<&str>, tolerance: Option<f64>) -> Result<i32> {
    let (cfg, text) = ConfigFile::load(config)?;
    let solved = solve_config(&cfg, &text, backend, tolerance)?;
    let library = &solved.library;
    let entry = &library.entries[0];
    write_file(out, &library.to_text())?;
    write_file(&with_suffix(out, ".csv"), &entry.trajectory.to_csv())?;
    let (mut report, _) = verification_text(
        &solved.spec,
        &entry.trajectory,
        library.provenance.solver.feasibility_tol,
        library.length_scale,
    )?;
    report.insert_str(0, &format!("status {}\n", entry.status));
    write_file(&with_suffix(out, ".feasibility.txt"), &report)?;
    Ok(if solved.converged { EXIT_OK } else { EXIT_FAILURE })
}

pub fn cmd_sweep(config: &Path, out: &Path, backend: Option<&str>, tolerance: Option<f64>) -> Result<i32> {
    let (cfg, text) = ConfigFile::load(config)?;
    let plan = cfg.sweep_plan()?;
    let options = options_with(&cfg, tolerance)?;
    let backend_name = backend.map(str::to_string).unwrap_or(cfg.backend_name()?);
    let solver = solver::backend(&backend_name)?;
    std::fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;

    let mut library = sweep(&plan, solver.as_ref(), &options)?;
    library.provenance = provenance(&text, solver.name(), &options);
    for e in &library.entries {
        eprintln!(
            "sweep: {}={} {} ({} inner iterations, {})",
            library.parameter,
            e.value,
            e.status,
            e.inner_iterations,
            if e.warm_started { "warm" } else { "cold" }
        );
    }
    for g in &library.gaps {
        eprintln!("sweep: gap at {}={g}", library.parameter);
    }
    write_file(&out.join("library.txt"), &library.to_text())?;
    for (i, e) in library.entries.iter().enumerate() {
        write_file(&out.join(format!("entry_{i}.csv")), &e.trajectory.to_csv())?;
    }
    let mut smooth = String::new();
    match library.smoothness_report() {
        Ok(r) => {
            let _ = writeln!(smooth, "max {:e}", r.max);
            for (a, b, d) in r.pairs {
                let _ = writeln!(smooth, "pair {a:e} {b:e} {d:e}");
            }
        }
        Err(e) => {
            let _ = writeln!(smooth, "unavailable: {e}");
        }
    }
    write_file(&out.join("smoothness.txt"), &smooth)?;
    Ok(if library.gaps.is_empty() { EXIT_OK } else { EXIT_GAPS })
}

/// A trajectory read from disk plus the spec it was built for, when known.
struct Loaded {
    label: String,
    value: f64,
    trajectory: Trajectory,
    spec: Option<ManeuverSpec>,
    tolerance: f64,
    length_scale: f64,
}

fn is_library(text: &str) -> bool {
    text.trim_start().starts_with(FORMAT_HEADER)
}

fn load(path: &Path, config: Option<&Path>) -> Result<Vec<Loaded>> {
    let text = read_file(path)?;
    let override_cfg = config.map(ConfigFile::load).transpose()?.map(|(c, _)| c);
    if is_library(&text) {
        let lib = TrajectoryLibrary::from_text(&text)?;
        if lib.entries.is_empty() {
            return Err(Error::Usage(format!("{} holds no trajectories", path.display())));
        }
        let cfg = match (&override_cfg, &lib.provenance.config) {
            (Some(c), _) => Some(c.clone()),
            (None, Some(t)) => Some(ConfigFile::parse(t)?),
            (None, None) => None,
        };
        let parameter = SweepParameter::parse(&lib.parameter);
        let request: Option<ManeuverRequest> = match &cfg {
            Some(c) if c.maneuver.is_some() => Some(c.request()?),
            _ => None,
        };
        lib.entries
            .into_iter()
            .map(|e| {
                let spec = match (&request, parameter) {
                    (Some(r), Some(p)) => {
                        let mut r = r.clone();
                        p.apply(&mut r, e.value);
                        Some(r.build()?)
                    }
                    _ => None,
                };
                Ok(Loaded {
                    label: format!("{}={}", lib.parameter, e.value),
                    value: e.value,
                    trajectory: e.trajectory,
                    spec,
                    tolerance: lib.provenance.solver.feasibility_tol,
                    length_scale: lib.length_scale,
                })
            })
            .collect()
    } else {
        let cfg = override_cfg.ok_or_else(|| {
            Error::Usage(format!("{} is a trajectory table; pass --config to describe its maneuver", path.display()))
        })?;
        let request = cfg.request()?;
        let spec = request.build()?;
        let trajectory = Trajectory::from_csv(&spec, &text)?;
        let tolerance = cfg.solve_options().map(|o| o.feasibility_tol).unwrap_or(1e-6);
        let p = primary_parameter(request.kind);
        Ok(vec![Loaded {
            label: format!("{}={}", p.name(), p.get(&request)),
            value: p.get(&request),
            trajectory,
            spec: Some(spec),
            tolerance,
            length_scale: request.configs.transfer.l_max,
        }])
    }
}

pub fn cmd_verify(path: &Path, config: Option<&Path>, tolerance: Option<f64>) -> Result<i32> {
    let entries = load(path, config)?;
    let mut all_ok = true;
    for e in &entries {
        let spec = e.spec.as_ref().ok_or_else(|| {
            Error::Usage("library has no embedded maneuver config; pass --config".into())
        })?;
        if !(spec.modes.len() == e.trajectory.modes().len()
            && spec.modes.iter().zip(e.trajectory.modes()).all(|(a, b)| a.kind == b.kind && a.knots == b.knots))
        {
            return Err(Error::InvalidSpec(format!("{}: mode structure differs from the config", e.label)));
        }
        let tol = tolerance.unwrap_or(e.tolerance);
        let (text, ok) = verification_text(spec, &e.trajectory, tol, e.length_scale)?;
        println!("entry {} {}", e.label, if ok { "ok" } else { "FAILED" });
        for line in text.lines() {
            println!("  {line}");
        }
        all_ok &= ok;
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_FAILURE })
}

/// Columns of the `plotdata` table.
pub const PLOT_COLUMNS: [&str; 16] = [
    "parameter", "time", "mode", "p_x", "p_y", "p_z", "yaw", "v_x", "v_y", "v_z", "grf_left_x",
    "grf_left_y", "grf_left_z", "grf_right_x", "grf_right_y", "grf_right_z",
];

pub fn plot_table(entries: &[(f64, &Trajectory)]) -> String {
    let mut o = String::from("# srbm-traj plotdata\n");
    for (i, (v, tr)) in entries.iter().enumerate() {
        let stamps: Vec<String> = tr.mode_starts().iter().map(|t| format!("{t:.16e}")).collect();
        let _ = writeln!(o, "# entry {i} parameter {v:.16e} mode_boundaries_s {}", stamps.join(","));
    }
    o.push_str(&PLOT_COLUMNS.join(","));
    o.push('\n');
    for (v, tr) in entries {
        for (m, mode) in tr.modes().iter().enumerate() {
            let sides = tr.contact_sides(m);
            for k in 0..mode.knots {
                let s = tr.state(m, k);
                let mut grf = [Vec3::zeros(); 2];
                for (c, side) in sides.iter().enumerate() {
                    grf[(side.sign() < 0.0) as usize] = tr.layout().grf(tr.z(), m, k, c);
                }
                let vals = [
                    tr.knot_time(m, k), s.p.x, s.p.y, s.p.z, s.q.yaw(), s.v.x, s.v.y, s.v.z,
                    grf[0].x, grf[0].y, grf[0].z, grf[1].x, grf[1].y, grf[1].z,
                ];
                let _ = write!(o, "{v:.16e}");
                for (j, x) in vals.iter().enumerate() {
                    if j == 1 {
                        let _ = write!(o, ",{m}");
                    }
                    let _ = write!(o, ",{x:.16e}");
                }
                o.push('\n');
            }
        }
    }
    o
}

pub fn cmd_plotdata(path: &Path, out: &Path, config: Option<&Path>) -> Result<i32> {
    let entries = load(path, config)?;
    let refs: Vec<(f64, &Trajectory)> = entries.iter().map(|e| (e.value, &e.trajectory)).collect();
    write_file(out, &plot_table(&refs))?;
    Ok(EXIT_OK)
}

/// Columns of a robot log for `score`. Contacts are 0 or 1.
pub const LOG_COLUMNS: [&str; 30] = [
    "time", "q_w", "q_x", "q_y", "q_z", "v_x", "v_y", "v_z", "l_x", "l_y", "l_z", "left_p_x",
    "left_p_y", "left_z", "left_q_w", "left_q_x", "left_q_y", "left_q_z", "right_p_x",
    "right_p_y", "right_z", "right_q_w", "right_q_x", "right_q_y", "right_q_z", "p_y",
    "hip_roll_velocity", "hip_yaw_velocity", "left_contact", "right_contact",
];

/// One parsed log row.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub time: f64,
    /// `f_clock` is left at zero; `score` fills it from the contacts.
    pub summary: RobotSummary,
    pub contacts: [bool; 2],
}

pub fn parse_log(text: &str) -> Result<Vec<LogRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?
        .clone();
    let mut index = [0usize; 30];
    for (i, name) in LOG_COLUMNS.iter().enumerate() {
        index[i] = header.iter().position(|h| h == *name).ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("log is missing column `{name}`"),
        })?;
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut v = [0.0; 30];
        for (i, &col) in index.iter().enumerate() {
            let cell = record.get(col).unwrap_or("");
            v[i] = cell.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad value `{cell}` in column `{}`", LOG_COLUMNS[i]),
            })?;
        }
        let foot = |o: usize| FootSummary {
            p_rel: [v[o], v[o + 1]],
            z: v[o + 2],
            q: Quaternion::new(v[o + 3], v[o + 4], v[o + 5], v[o + 6]),
        };
        rows.push(LogRow {
            time: v[0],
            summary: RobotSummary {
                q: Quaternion::new(v[1], v[2], v[3], v[4]),
                v: Vec3::new(v[5], v[6], v[7]),
                angular_momentum: Vec3::new(v[8], v[9], v[10]),
                feet: [foot(11), foot(18)],
                p_y: v[25],
                hip_roll_velocity: v[26],
                hip_yaw_velocity: v[27],
                f_clock: 0.0,
            },
            contacts: [v[28] > 0.5, v[29] > 0.5],
        });
    }
    if rows.is_empty() {
        return Err(Error::Usage("log has no rows".into()));
    }
    Ok(rows)
}

/// A log of a robot tracking `trajectory` perfectly at the given times.
pub fn reference_log(trajectory: &Trajectory, times: &[f64], reward: &RewardConfig, looping: bool) -> Result<String> {
    let mut o = LOG_COLUMNS.join(",");
    o.push('\n');
    for &t in times {
        let r = trajectory.sample(t, looping)?;
        let s = RobotSummary::from_reference(&r, reward);
        let mut vals = vec![t];
        vals.extend(s.q.to_array());
        vals.extend(s.v.iter());
        vals.extend(s.angular_momentum.iter());
        for f in &s.feet {
            vals.extend(f.p_rel);
            vals.push(f.z);
            vals.extend(f.q.to_array());
        }
        vals.extend([s.p_y, s.hip_roll_velocity, s.hip_yaw_velocity]);
        vals.extend(r.in_contact.map(|c| if c { 1.0 } else { 0.0 }));
        let cells: Vec<String> = vals.iter().map(|v| format!("{v:e}")).collect();
        o.push_str(&cells.join(","));
        o.push('\n');
    }
    Ok(o)
}

/// Reward breakdown for each log row against `trajectory`.
pub fn score_rows(trajectory: &Trajectory, rows: &[LogRow], reward: &RewardConfig, looping: bool) -> Result<Vec<(f64, RewardBreakdown)>> {
    let schedule = trajectory.stance_schedule();
    rows.iter()
        .map(|row| {
            let reference = trajectory.sample(row.time, looping)?;
            let mut summary = row.summary;
            summary.f_clock = clock_value(row.time, &schedule, row.contacts, reward.clock_gain);
            Ok((row.time, evaluate(&summary, &reference, reward)?))
        })
        .collect()
}

pub fn cmd_score(
    library: &Path,
    log: &Path,
    parameter: f64,
    out: &Path,
    config: Option<&Path>,
    looping: bool,
) -> Result<i32> {
    if !parameter.is_finite() {
        return Err(Error::Usage("--parameter must be finite".into()));
    }
    let text = read_file(library)?;
    let lib = TrajectoryLibrary::from_text(&text)?;
    let (i, inside) = lib
        .nearest(parameter)
        .ok_or_else(|| Error::Usage(format!("{} holds no trajectories", library.display())))?;
    let entry = &lib.entries[i];
    if !inside {
        eprintln!(
            "warning: {}={parameter} is outside the library range; using nearest entry {}",
            lib.parameter, entry.value
        );
    }
    let reward = match (config, &lib.provenance.config) {
        (Some(p), _) => ConfigFile::load(p)?.0.reward()?,
        (None, Some(t)) => ConfigFile::parse(t)?.reward()?,
        (None, None) => RewardConfig::default(),
    };
    let rows = parse_log(&read_file(log)?)?;
    let scores = score_rows(&entry.trajectory, &rows, &reward, looping)?;
    let mut o = String::from("time,");
    o.push_str(&RewardBreakdown::COLUMNS.join(","));
    o.push('\n');
    for (t, b) in scores {
        let _ = write!(o, "{t:.16e}");
        for v in b.values() {
            let _ = write!(o, ",{v:.16e}");
        }
        o.push('\n');
    }
    write_file(out, &o)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Range("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Sweep("x".into())), EXIT_FAILURE);
    }

    #[test]
    fn arguments_parse() {
        let cli = Cli::try_parse_from(["srbm-traj", "solve", "--config", "c.toml", "--out", "o.lib", "--tolerance", "1e-5"]).unwrap();
        assert!(matches!(cli.command, Command::Solve { tolerance: Some(t), .. } if t == 1e-5));
        assert!(Cli::try_parse_from(["srbm-traj", "solve", "--config", "c.toml"]).is_err());
        assert_eq!(main_with_args(["srbm-traj", "frobnicate"]), EXIT_USAGE);
    }

    #[test]
    fn log_requires_columns_and_rows() {
        assert!(matches!(parse_log("time,q_w\n"), Err(Error::Parse { msg, .. }) if msg.contains("q_x")));
        let header = LOG_COLUMNS.join(",") + "\n";
        assert!(matches!(parse_log(&header), Err(Error::Usage(_))));
    }
}
