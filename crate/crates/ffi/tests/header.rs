//! Compiles a small C program against the generated header and the static
//! library. Skipped when no C compiler is on PATH.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "srbm_traj.h"

int main(int argc, char **argv) {
    SrbmLibrary *lib = NULL;
    if (srbm_library_load("/nonexistent", &lib) != SRBM_STATUS_IO) return 10;
    if (strlen(srbm_last_error()) == 0) return 11;

    SrbmRewardConfig cfg;
    if (srbm_reward_config_default(&cfg) != SRBM_STATUS_OK) return 12;
    SrbmSample ref;
    memset(&ref, 0, sizeof ref);
    ref.state[2] = 0.8;
    ref.state[3] = 1.0;
    ref.in_contact[0] = 1;
    SrbmRobotSummary robot;
    if (srbm_robot_from_reference(&ref, &cfg, &robot) != SRBM_STATUS_OK) return 13;
    SrbmRewardBreakdown out;
    if (srbm_reward_evaluate(&robot, &ref, &cfg, &out) != SRBM_STATUS_OK) return 14;
    printf("%s %.17g\n", srbm_version(), out.total);
    return out.total == 1.0 ? 0 : 15;
}
"#;

fn artifact_dir() -> PathBuf {
    // target/<profile>/deps/<test> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler, skipping");
        return;
    }
    let archive = artifact_dir().join("libsrbm_traj_ffi.a");
    if !archive.exists() {
        eprintln!("{} not built, skipping", archive.display());
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();

    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C build failed");

    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "exit {:?}: {stdout}", out.status.code());
    assert!(stdout.starts_with(env!("CARGO_PKG_VERSION")), "{stdout}");
}
