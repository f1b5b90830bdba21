use std::ffi::{CStr, CString};
use std::ptr;

use srbm_traj::config::ConfigFile;
use srbm_traj_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(srbm_last_error()) }.to_string_lossy().into_owned()
}

fn solved() -> *mut SrbmLibrary {
    let text = CString::new(ConfigFile::template().to_toml()).unwrap();
    let mut lib = ptr::null_mut();
    let mut converged = 0u8;
    let s = unsafe { srbm_solve_config(text.as_ptr(), &mut lib, &mut converged) };
    assert_eq!(s, SrbmStatus::Ok, "{}", last_error());
    assert_eq!(converged, 1);
    lib
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(srbm_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_arguments_are_reported() {
    let mut n = 0usize;
    assert_eq!(unsafe { srbm_library_len(ptr::null(), &mut n) }, SrbmStatus::NullPointer);
    assert!(last_error().contains("library"));
    let mut lib = ptr::null_mut();
    assert_eq!(unsafe { srbm_library_load(ptr::null(), &mut lib) }, SrbmStatus::NullPointer);
    unsafe { srbm_library_free(ptr::null_mut()) };
}

#[test]
fn load_errors_map_to_status() {
    let mut lib = ptr::null_mut();
    let missing = CString::new("/nonexistent/library.txt").unwrap();
    assert_eq!(unsafe { srbm_library_load(missing.as_ptr(), &mut lib) }, SrbmStatus::Io);
    assert!(lib.is_null());

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "srbm-library v9\n").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { srbm_library_load(bad.as_ptr(), &mut lib) }, SrbmStatus::Parse);
    assert!(last_error().contains("v9"), "{}", last_error());
}

#[test]
fn bad_config_is_rejected() {
    let text = CString::new("[model]\nmass_kg = -1.0\n").unwrap();
    let mut lib = ptr::null_mut();
    let mut converged = 0u8;
    let s = unsafe { srbm_solve_config(text.as_ptr(), &mut lib, &mut converged) };
    assert_ne!(s, SrbmStatus::Ok);
    assert!(lib.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn solve_sample_score_and_round_trip() {
    let lib = solved();
    unsafe {
        let mut n = 0usize;
        assert_eq!(srbm_library_len(lib, &mut n), SrbmStatus::Ok);
        assert_eq!(n, 1);
        let mut value = 0.0;
        assert_eq!(srbm_library_value(lib, 0, &mut value), SrbmStatus::Ok);
        assert_eq!(value, 1.0);
        let mut duration = 0.0;
        assert_eq!(srbm_library_duration(lib, 0, &mut duration), SrbmStatus::Ok);
        assert!(duration > 0.0);

        let (mut idx, mut inside) = (9usize, 9u8);
        assert_eq!(srbm_library_nearest(lib, 3.0, &mut idx, &mut inside), SrbmStatus::Ok);
        assert_eq!((idx, inside), (0, 0));

        let mut sample = SrbmSample::default();
        assert_eq!(srbm_library_sample(lib, 1, 0.0, 0, &mut sample), SrbmStatus::Range);
        assert_eq!(srbm_library_sample(lib, 0, 0.37 * duration, 1, &mut sample), SrbmStatus::Ok);
        let q = &sample.state[3..7];
        assert!((q.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);

        let mut cfg = SrbmRewardConfig::default();
        assert_eq!(srbm_reward_config_default(&mut cfg), SrbmStatus::Ok);
        assert!((cfg.coefficients.iter().sum::<f64>() - 2.45).abs() < 1e-12);
        let mut robot = SrbmRobotSummary::default();
        assert_eq!(srbm_robot_from_reference(&sample, &cfg, &mut robot), SrbmStatus::Ok);
        let mut out = SrbmRewardBreakdown::default();
        assert_eq!(srbm_reward_evaluate(&robot, &sample, &cfg, &mut out), SrbmStatus::Ok);
        assert!((out.total - 1.0).abs() < 1e-12, "{}", out.total);

        robot.v[0] += 0.5;
        assert_eq!(srbm_reward_evaluate(&robot, &sample, &cfg, &mut out), SrbmStatus::Ok);
        assert!(out.total < 1.0);
        robot.v[0] = f64::NAN;
        assert_eq!(srbm_reward_evaluate(&robot, &sample, &cfg, &mut out), SrbmStatus::Evaluation);

        let contact = sample.in_contact;
        let mut clock = -1.0;
        let s = srbm_library_clock(lib, 0, sample.time, contact[0], contact[1], 1.0, &mut clock);
        assert_eq!(s, SrbmStatus::Ok);
        assert_eq!(clock, 0.0);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("lib.txt").to_str().unwrap()).unwrap();
        assert_eq!(srbm_library_save(lib, path.as_ptr()), SrbmStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(srbm_library_load(path.as_ptr(), &mut back), SrbmStatus::Ok);
        let mut again = SrbmSample::default();
        assert_eq!(srbm_library_sample(back, 0, 0.37 * duration, 1, &mut again), SrbmStatus::Ok);
        assert_eq!(again.state, sample.state);
        assert_eq!(again.grf, sample.grf);
        srbm_library_free(back);
        srbm_library_free(lib);
    }
}
