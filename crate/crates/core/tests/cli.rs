use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use srbm_traj::cli::reference_log;
use srbm_traj::config::ConfigFile;
use srbm_traj::library::TrajectoryLibrary;
use srbm_traj::reward::RewardConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_srbm-traj"))
}

fn run(args: &[&str], paths: &[&Path]) -> Output {
    let mut c = bin();
    c.args(args);
    for p in paths {
        c.arg(p);
    }
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// One solved running trajectory shared by the tests.
fn solved() -> &'static (tempfile::TempDir, PathBuf, PathBuf) {
    static SOLVED: OnceLock<(tempfile::TempDir, PathBuf, PathBuf)> = OnceLock::new();
    SOLVED.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("run.toml");
        std::fs::write(&config, ConfigFile::template().to_toml()).unwrap();
        let out = dir.path().join("run.lib");
        let o = bin().args(["solve", "--config"]).arg(&config).arg("--out").arg(&out).output().unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (dir, config, out)
    })
}

fn sibling(p: &Path, suffix: &str) -> PathBuf {
    p.with_file_name(format!("{}{suffix}", p.file_name().unwrap().to_str().unwrap()))
}

#[test]
fn solve_writes_library_csv_and_report() {
    let (_, _, lib) = solved();
    let report = std::fs::read_to_string(sibling(lib, ".feasibility.txt")).unwrap();
    assert!(report.starts_with("status Converged"), "{report}");
    assert!(report.contains("feasible"));
    let csv = std::fs::read_to_string(sibling(lib, ".csv")).unwrap();
    assert!(csv.starts_with("time,mode,n_contacts,"));
    assert_eq!(csv.lines().count(), 1 + 2 * 15);
}

#[test]
fn verify_library_and_csv() {
    let (_, config, lib) = solved();
    let o = run(&["verify"], &[lib]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    let csv = sibling(lib, ".csv");
    let o = run(&["verify"], &[&csv]);
    assert_eq!(code(&o), 1, "CSV without a config must be a usage error");
    let mut c = bin();
    let o = c.arg("verify").arg(&csv).arg("--config").arg(config).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn verify_flags_corrupted_forces() {
    let (dir, config, lib) = solved();
    let text = std::fs::read_to_string(sibling(lib, ".csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = header.iter().position(|h| *h == "grf_left_z").unwrap();
    let mut row: Vec<String> = lines[5].split(',').map(str::to_string).collect();
    row[col] = "2000.0".into();
    lines[5] = row.join(",");
    let bad = dir.path().join("corrupt.csv");
    std::fs::write(&bad, lines.join("\n") + "\n").unwrap();

    let o = bin().arg("verify").arg(&bad).arg("--config").arg(config).output().unwrap();
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 2, "{stdout}");
    assert!(stdout.contains("dynamics_defects"), "{stdout}");
}

#[test]
fn plotdata_has_preamble_and_columns() {
    let (dir, _, lib) = solved();
    let out = dir.path().join("plot.csv");
    let o = bin().arg("plotdata").arg(lib).arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# srbm-traj plotdata"));
    let entry = lines.next().unwrap();
    assert!(entry.starts_with("# entry 0 parameter"), "{entry}");
    let stamps = entry.rsplit(' ').next().unwrap().split(',').count();
    assert_eq!(stamps, 2);
    assert!(lines.next().unwrap().starts_with("parameter,time,mode,"));
    assert_eq!(lines.count(), 2 * 15);
}

fn write_reference_log(dir: &Path, lib: &Path) -> PathBuf {
    let library = TrajectoryLibrary::from_text(&std::fs::read_to_string(lib).unwrap()).unwrap();
    let tr = &library.entries[0].trajectory;
    let period = tr.total_duration();
    // Includes times past one period, exercising the loop.
    let times: Vec<f64> = (0..50).map(|i| 0.037 * i as f64 * period).collect();
    let log = reference_log(tr, &times, &RewardConfig::default(), true).unwrap();
    let path = dir.join("robot.csv");
    std::fs::write(&path, log).unwrap();
    path
}

fn totals(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "total").unwrap();
    lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn reference_log_scores_one() {
    let (dir, _, lib) = solved();
    let log = write_reference_log(dir.path(), lib);
    let out = dir.path().join("scores.csv");
    let o = bin()
        .arg("score")
        .arg(lib)
        .arg(&log)
        .args(["--parameter", "1.0", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!String::from_utf8_lossy(&o.stderr).contains("warning"));
    let t = totals(&out);
    assert_eq!(t.len(), 50);
    for v in t {
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }
}

#[test]
fn score_outside_range_warns() {
    let (dir, _, lib) = solved();
    let log = write_reference_log(dir.path(), lib);
    let out = dir.path().join("far.csv");
    let o = bin()
        .arg("score")
        .arg(lib)
        .arg(&log)
        .args(["--parameter", "3.0", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(totals(&out).len(), 50);
}

#[test]
fn sweep_writes_entries_and_smoothness() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ConfigFile::template();
    let s = cfg.sweep.as_mut().unwrap();
    s.lo = 1.0;
    s.hi = 1.25;
    s.step = 0.25;
    let config = dir.path().join("sweep.toml");
    std::fs::write(&config, cfg.to_toml()).unwrap();
    let out = dir.path().join("lib");
    let o = bin().args(["sweep", "--config"]).arg(&config).arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["library.txt", "entry_0.csv", "entry_1.csv", "smoothness.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let lib = TrajectoryLibrary::from_text(&std::fs::read_to_string(out.join("library.txt")).unwrap()).unwrap();
    assert_eq!(lib.values(), vec![1.0, 1.25]);
    assert!(lib.entries[1].warm_started);
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    let out = dir.path().join("x.lib");
    let o = bin().args(["solve", "--config"]).arg(&missing).arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&o), 1);

    let mut cfg = ConfigFile::template();
    cfg.maneuver.as_mut().unwrap().v_des_m_per_s = 10.0;
    let fast = dir.path().join("fast.toml");
    std::fs::write(&fast, cfg.to_toml()).unwrap();
    let o = bin().args(["solve", "--config"]).arg(&fast).arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("10"));

    let o = bin().arg("template").output().unwrap();
    assert_eq!(code(&o), 0);
    assert!(ConfigFile::parse(&String::from_utf8_lossy(&o.stdout)).is_ok());
}
