//! C ABI over `srbm_traj`: load or solve trajectory libraries, sample
//! references and evaluate the tracking reward.
//!
//! Every function returns an [`SrbmStatus`]. On failure the message is kept
//! per thread and can be read with [`srbm_last_error`]. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use srbm_traj::cli::solve_config;
use srbm_traj::config::ConfigFile;
use srbm_traj::library::{LibraryEntry, ReferenceSample, TrajectoryLibrary};
use srbm_traj::reward::{self, FootSummary, FootTerms, RewardCoefficients, RewardConfig, RobotSummary};
use srbm_traj::srbm::{Quaternion, SrbmState, Vec3};
use srbm_traj::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrbmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Config = 5,
    Range = 6,
    Invalid = 7,
    SolveFailed = 8,
    Evaluation = 9,
    Panic = 10,
}

/// Opaque trajectory library.
pub struct SrbmLibrary {
    inner: TrajectoryLibrary,
}

/// A reference sample. Arrays are left then right for feet.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SrbmSample {
    pub time: f64,
    pub phase: f64,
    pub cycle: u64,
    pub mode: u64,
    /// `p, q (w x y z), v, omega`.
    pub state: [f64; 13],
    pub angular_momentum: [f64; 3],
    pub in_contact: [u8; 2],
    pub grf: [[f64; 3]; 2],
    pub foot: [[f64; 3]; 2],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SrbmFoot {
    pub p_rel: [f64; 2],
    pub z: f64,
    /// `w x y z`.
    pub q: [f64; 4],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SrbmRobotSummary {
    pub q: [f64; 4],
    pub v: [f64; 3],
    pub angular_momentum: [f64; 3],
    pub feet: [SrbmFoot; 2],
    pub p_y: f64,
    pub hip_roll_velocity: f64,
    pub hip_yaw_velocity: f64,
    pub f_clock: f64,
}

/// Coefficients in the order orientation, velocity x/y/z, angular momentum,
/// foot position x/y, clock, foot orientation, foot height, drift, hip roll,
/// hip yaw.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SrbmRewardConfig {
    pub coefficients: [f64; 13],
    pub foot_position_scale: f64,
    pub drift_threshold: f64,
    pub drift_scale: f64,
    pub z_foot_des: f64,
    /// 0 averages foot terms over both feet, 1 over swing feet.
    pub swing_only: u8,
    pub clock_gain: f64,
}

/// Terms followed by the normalized total.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SrbmRewardBreakdown {
    pub r_q: f64,
    pub r_v: f64,
    pub r_l: f64,
    pub r_pf: f64,
    pub r_clock: f64,
    pub r_qfoot: f64,
    pub r_zfoot: f64,
    pub r_drift: f64,
    pub r_hiproll: f64,
    pub r_hipyaw: f64,
    pub total: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SrbmStatus {
    match e {
        Error::Io(_) => SrbmStatus::Io,
        Error::Parse { .. } | Error::Version { .. } => SrbmStatus::Parse,
        Error::Config(_) | Error::Usage(_) => SrbmStatus::Config,
        Error::Range(_) => SrbmStatus::Range,
        Error::Evaluation(_) => SrbmStatus::Evaluation,
        Error::Sweep(_) | Error::NumericalFailure(_) | Error::Divergence { .. } => SrbmStatus::SolveFailed,
        _ => SrbmStatus::Invalid,
    }
}

/// Run `f`, translating errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), (SrbmStatus, String)>) -> SrbmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SrbmStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            SrbmStatus::Panic
        }
    }
}

fn lift<T>(r: srbm_traj::Result<T>) -> Result<T, (SrbmStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (SrbmStatus, String) {
    (SrbmStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, (SrbmStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (SrbmStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn library_ref<'a>(lib: *const SrbmLibrary) -> Result<&'a TrajectoryLibrary, (SrbmStatus, String)> {
    lib.as_ref().map(|l| &l.inner).ok_or_else(|| null("library"))
}

fn entry(lib: &TrajectoryLibrary, index: usize) -> Result<&LibraryEntry, (SrbmStatus, String)> {
    lib.entries.get(index).ok_or_else(|| {
        (
            SrbmStatus::Range,
            format!("entry {index} out of range (library has {})", lib.entries.len()),
        )
    })
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn srbm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn srbm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Read a library file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srbm_library_load(path: *const c_char, out: *mut *mut SrbmLibrary) -> SrbmStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = std::fs::read_to_string(path).map_err(|e| (SrbmStatus::Io, format!("{path}: {e}")))?;
        let inner = lift(TrajectoryLibrary::from_text(&text))?;
        *out = Box::into_raw(Box::new(SrbmLibrary { inner }));
        Ok(())
    })
}

/// Solve the maneuver described by a TOML config and wrap the result in a
/// one-entry library. `converged` receives 1 on convergence, else 0; the
/// library is produced either way.
///
/// # Safety
/// `config_toml` must be NUL-terminated; `out` and `converged` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn srbm_solve_config(
    config_toml: *const c_char,
    out: *mut *mut SrbmLibrary,
    converged: *mut u8,
) -> SrbmStatus {
    guard(|| {
        let text = str_arg(config_toml, "config_toml")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if converged.is_null() {
            return Err(null("converged"));
        }
        let cfg = lift(ConfigFile::parse(text))?;
        let solved = lift(solve_config(&cfg, text, None, None))?;
        *converged = solved.converged as u8;
        *out = Box::into_raw(Box::new(SrbmLibrary { inner: solved.library }));
        Ok(())
    })
}
/// Release a library. Null is ignored.
///
/// # Safety
/// `lib` must come from this API and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn srbm_library_free(lib: *mut SrbmLibrary) {
    if !lib.is_null() {
        drop(Box::from_raw(lib));
    }
}

/// Write a library in the text format.
///
/// # Safety
/// `lib` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn srbm_library_save(lib: *const SrbmLibrary, path: *const c_char) -> SrbmStatus {
    guard(|| {
        let lib = library_ref(lib)?;
        let path = str_arg(path, "path")?;
        std::fs::write(path, lib.to_text()).map_err(|e| (SrbmStatus::Io, format!("{path}: {e}")))
    })
}

/// Number of entries.
///
/// # Safety
/// `lib` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srbm_library_len(lib: *const SrbmLibrary, out: *mut usize) -> SrbmStatus {
    guard(|| {
        let lib = library_ref(lib)?;
        *out.as_mut().ok_or_else(|| null("out"))? = lib.entries.len();
        Ok(())
    })
}

/// Parameter value of entry `index`.
///
/// # Safety
/// `lib` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srbm_library_value(lib: *const SrbmLibrary, index: usize, out: *mut f64) -> SrbmStatus {
    guard(|| {
        let e = entry(library_ref(lib)?, index)?;
        *out.as_mut().ok_or_else(|| null("out"))? = e.value;
        Ok(())
    })
}

/// Duration of entry `index`, s.
///
/// # Safety
/// `lib` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srbm_library_duration(lib: *const SrbmLibrary, index: usize, out: *mut f64) -> SrbmStatus {
    guard(|| {
        let e = entry(library_ref(lib)?, index)?;
        *out.as_mut().ok_or_else(|| null("out"))? = e.trajectory.total_duration();
        Ok(())
    })
}

/// Entry closest to `value`; `inside` is 1 when `value` lies within the
/// library's range.
///
/// # Safety
/// `lib` must be a live handle; `index` and `inside` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn srbm_library_nearest(
    lib: *const SrbmLibrary,
    value: f64,
    index: *mut usize,
    inside: *mut u8,
) -> SrbmStatus {
    guard(|| {
        let lib = library_ref(lib)?;
        let (i, within) = lib
            .nearest(value)
            .ok_or_else(|| (SrbmStatus::Range, "library is empty".to_string()))?;
        *index.as_mut().ok_or_else(|| null("index"))? = i;
        *inside.as_mut().ok_or_else(|| null("inside"))? = within as u8;
        Ok(())
    })
}

fn to_c_sample(s: &ReferenceSample) -> SrbmSample {
    SrbmSample {
        time: s.time,
        phase: s.phase,
        cycle: s.cycle as u64,
        mode: s.mode as u64,
        state: s.state.to_array(),
        angular_momentum: s.angular_momentum.into(),
        in_contact: s.in_contact.map(u8::from),
        grf: s.grf.map(|v| v.into()),
        foot: s.foot.map(|v| v.into()),
    }
}

fn from_c_sample(s: &SrbmSample) -> ReferenceSample {
    ReferenceSample {
        time: s.time,
        phase: s.phase,
        cycle: s.cycle as usize,
        mode: s.mode as usize,
        state: SrbmState::from_slice(&s.state),
        angular_momentum: Vec3::from(s.angular_momentum),
        in_contact: s.in_contact.map(|c| c != 0),
        grf: s.grf.map(Vec3::from),
        foot: s.foot.map(Vec3::from),
    }
}

/// Sample entry `index` at time `t`. With `looping` nonzero the cycle repeats.
///
/// # Safety
/// `lib` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srbm_library_sample(
    lib: *const SrbmLibrary,
    index: usize,
    t: f64,
    looping: u8,
    out: *mut SrbmSample,
) -> SrbmStatus {
    guard(|| {
        let e = entry(library_ref(lib)?, index)?;
        let s = lift(e.trajectory.sample(t, looping != 0))?;
        *out.as_mut().ok_or_else(|| null("out"))? = to_c_sample(&s);
        Ok(())
    })
}

/// Clock penalty for measured contacts (`left`, `right` nonzero when in
/// contact) against entry `index`.
///
/// # Safety
/// `lib` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srbm_library_clock(
    lib: *const SrbmLibrary,
    index: usize,
    t: f64,
    left: u8,
    right: u8,
    gain: f64,
    out: *mut f64,
) -> SrbmStatus {
    guard(|| {
        let e = entry(library_ref(lib)?, index)?;
        let schedule = e.trajectory.stance_schedule();
        *out.as_mut().ok_or_else(|| null("out"))? = reward::clock_value(t, &schedule, [left != 0, right != 0], gain);
        Ok(())
    })
}

fn to_c_config(c: &RewardConfig) -> SrbmRewardConfig {
    let k = &c.coefficients;
    SrbmRewardConfig {
        coefficients: [
            k.orientation, k.velocity_x, k.velocity_y, k.velocity_z, k.angular_momentum,
            k.foot_position_x, k.foot_position_y, k.clock, k.foot_orientation, k.foot_height,
            k.drift, k.hip_roll, k.hip_yaw,
        ],
        foot_position_scale: c.foot_position_scale,
        drift_threshold: c.drift_threshold,
        drift_scale: c.drift_scale,
        z_foot_des: c.z_foot_des,
        swing_only: (c.foot_terms == FootTerms::Swing) as u8,
        clock_gain: c.clock_gain,
    }
}

fn from_c_config(c: &SrbmRewardConfig) -> RewardConfig {
    let k = c.coefficients;
    RewardConfig {
        coefficients: RewardCoefficients {
            orientation: k[0],
            velocity_x: k[1],
            velocity_y: k[2],
            velocity_z: k[3],
            angular_momentum: k[4],
            foot_position_x: k[5],
            foot_position_y: k[6],
            clock: k[7],
            foot_orientation: k[8],
            foot_height: k[9],
            drift: k[10],
            hip_roll: k[11],
            hip_yaw: k[12],
        },
        foot_position_scale: c.foot_position_scale,
        drift_threshold: c.drift_threshold,
        drift_scale: c.drift_scale,
        z_foot_des: c.z_foot_des,
        foot_terms: if c.swing_only != 0 { FootTerms::Swing } else { FootTerms::Average },
        clock_gain: c.clock_gain,
    }
}

/// Fill `out` with the default reward settings.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srbm_reward_config_default(out: *mut SrbmRewardConfig) -> SrbmStatus {
    guard(|| {
        *out.as_mut().ok_or_else(|| null("out"))? = to_c_config(&RewardConfig::default());
        Ok(())
    })
}

fn quat(q: [f64; 4]) -> Quaternion {
    Quaternion::new(q[0], q[1], q[2], q[3])
}

/// Evaluate the reward of `robot` against `reference`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn srbm_reward_evaluate(
    robot: *const SrbmRobotSummary,
    reference: *const SrbmSample,
    config: *const SrbmRewardConfig,
    out: *mut SrbmRewardBreakdown,
) -> SrbmStatus {
    guard(|| {
        let r = robot.as_ref().ok_or_else(|| null("robot"))?;
        let s = reference.as_ref().ok_or_else(|| null("reference"))?;
        let c = from_c_config(config.as_ref().ok_or_else(|| null("config"))?);
        lift(c.validate())?;
        let foot = |f: &SrbmFoot| FootSummary {
            p_rel: f.p_rel,
            z: f.z,
            q: quat(f.q),
        };
        let summary = RobotSummary {
            q: quat(r.q),
            v: Vec3::from(r.v),
            angular_momentum: Vec3::from(r.angular_momentum),
            feet: [foot(&r.feet[0]), foot(&r.feet[1])],
            p_y: r.p_y,
            hip_roll_velocity: r.hip_roll_velocity,
            hip_yaw_velocity: r.hip_yaw_velocity,
            f_clock: r.f_clock,
        };
        let b = lift(reward::evaluate(&summary, &from_c_sample(s), &c))?;
        *out.as_mut().ok_or_else(|| null("out"))? = SrbmRewardBreakdown {
            r_q: b.r_q,
            r_v: b.r_v,
            r_l: b.r_l,
            r_pf: b.r_pf,
            r_clock: b.r_clock,
            r_qfoot: b.r_qfoot,
            r_zfoot: b.r_zfoot,
            r_drift: b.r_drift,
            r_hiproll: b.r_hiproll,
            r_hipyaw: b.r_hipyaw,
            total: b.total,
        };
        Ok(())
    })
}

/// Summary of a robot tracking `reference` perfectly, for testing callers.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn srbm_robot_from_reference(
    reference: *const SrbmSample,
    config: *const SrbmRewardConfig,
    out: *mut SrbmRobotSummary,
) -> SrbmStatus {
    guard(|| {
        let s = from_c_sample(reference.as_ref().ok_or_else(|| null("reference"))?);
        let c = from_c_config(config.as_ref().ok_or_else(|| null("config"))?);
        let r = RobotSummary::from_reference(&s, &c);
        let foot = |f: &FootSummary| SrbmFoot {
            p_rel: f.p_rel,
            z: f.z,
            q: f.q.to_array(),
        };
        *out.as_mut().ok_or_else(|| null("out"))? = SrbmRobotSummary {
            q: r.q.to_array(),
            v: r.v.into(),
            angular_momentum: r.angular_momentum.into(),
            feet: [foot(&r.feet[0]), foot(&r.feet[1])],
            p_y: r.p_y,
            hip_roll_velocity: r.hip_roll_velocity,
            hip_yaw_velocity: r.hip_yaw_velocity,
            f_clock: r.f_clock,
        };
        Ok(())
    })
}
