//! Reference-tracking reward for policies that imitate library trajectories.
//! Every term is `coefficient * exp(-deviation)` except the drift term; the
//! total is normalized by the coefficient sum so perfect tracking scores 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::{ReferenceSample, StanceSchedule};
use crate::srbm::{quat_distance, Quaternion, Vec3, UNIT_NORM_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootSummary {
    /// Foot minus CoM, world x and y, m.
    pub p_rel: [f64; 2],
    /// World height, m.
    pub z: f64,
    pub q: Quaternion,
}

/// What the reward needs to know about the robot at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotSummary {
    /// Pelvis orientation.
    pub q: Quaternion,
    /// CoM velocity, world frame.
    pub v: Vec3,
    /// `J omega`, body frame.
    pub angular_momentum: Vec3,
    /// Left, right.
    pub feet: [FootSummary; 2],
    /// Lateral position, m.
    pub p_y: f64,
    pub hip_roll_velocity: f64,
    pub hip_yaw_velocity: f64,
    pub f_clock: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FootTerms {
    /// Average the foot terms over both feet.
    Average,
    /// Average over feet the reference has in swing; both feet when none is.
    Swing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardCoefficients {
    pub orientation: f64,
    pub velocity_x: f64,
    pub velocity_y: f64,
    pub velocity_z: f64,
    pub angular_momentum: f64,
    pub foot_position_x: f64,
    pub foot_position_y: f64,
    pub clock: f64,
    pub foot_orientation: f64,
    pub foot_height: f64,
    pub drift: f64,
    pub hip_roll: f64,
    pub hip_yaw: f64,
}

impl Default for RewardCoefficients {
    fn default() -> Self {
        Self {
            orientation: 0.05,
            velocity_x: 0.35,
            velocity_y: 0.1,
            velocity_z: 0.1,
            angular_momentum: 0.15,
            foot_position_x: 0.15,
            foot_position_y: 0.15,
            clock: 0.3,
            foot_orientation: 0.3,
            foot_height: 0.3,
            drift: 0.3,
            hip_roll: 0.1,
            hip_yaw: 0.1,
        }
    }
}

impl RewardCoefficients {
    fn named(&self) -> [(&'static str, f64); 13] {
        [
            ("orientation", self.orientation),
            ("velocity_x", self.velocity_x),
            ("velocity_y", self.velocity_y),
            ("velocity_z", self.velocity_z),
            ("angular_momentum", self.angular_momentum),
            ("foot_position_x", self.foot_position_x),
            ("foot_position_y", self.foot_position_y),
            ("clock", self.clock),
            ("foot_orientation", self.foot_orientation),
            ("foot_height", self.foot_height),
            ("drift", self.drift),
            ("hip_roll", self.hip_roll),
            ("hip_yaw", self.hip_yaw),
        ]
    }

    pub fn sum(&self) -> f64 {
        self.named().iter().map(|(_, c)| c).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub coefficients: RewardCoefficients,
    pub foot_position_scale: f64,
    /// Lateral band with full drift reward, m.
    pub drift_threshold: f64,
    /// Decay of the drift term outside the band, 1/m.
    pub drift_scale: f64,
    /// Swing foot height target, m.
    pub z_foot_des: f64,
    pub foot_terms: FootTerms,
    /// Multiplier on the clock penalty.
    pub clock_gain: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            coefficients: RewardCoefficients::default(),
            foot_position_scale: 20.0,
            drift_threshold: 0.2,
            drift_scale: 15.0,
            z_foot_des: 0.1,
            foot_terms: FootTerms::Average,
            clock_gain: 1.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in self.coefficients.named() {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("reward coefficient `{name}` must be positive, got {c}")));
            }
        }
        let positive = [
            ("foot_position_scale", self.foot_position_scale),
            ("drift_threshold", self.drift_threshold),
            ("drift_scale", self.drift_scale),
            ("clock_gain", self.clock_gain),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("reward `{name}` must be positive, got {v}")));
            }
        }
        if !self.z_foot_des.is_finite() {
            return Err(Error::Config("reward `z_foot_des` must be finite".into()));
        }
        Ok(())
    }

    /// Normalization divisor: the coefficient sum.
    pub fn divisor(&self) -> f64 {
        self.coefficients.sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
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

impl RewardBreakdown {
    pub const COLUMNS: [&'static str; 11] = [
        "r_q", "r_v", "r_l", "r_pf", "r_clock", "r_qfoot", "r_zfoot", "r_drift", "r_hiproll",
        "r_hipyaw", "total",
    ];

    pub fn values(&self) -> [f64; 11] {
        [
            self.r_q, self.r_v, self.r_l, self.r_pf, self.r_clock, self.r_qfoot, self.r_zfoot,
            self.r_drift, self.r_hiproll, self.r_hipyaw, self.total,
        ]
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Evaluation(name.to_string()))
    }
}

fn unit(name: &str, q: &Quaternion) -> Result<()> {
    for (c, v) in ["w", "x", "y", "z"].iter().zip(q.to_array()) {
        finite(&format!("{name}.{c}"), v)?;
    }
    if !q.is_unit(UNIT_NORM_TOL) {
        return Err(Error::InvalidState(format!("`{name}` is not a unit quaternion")));
    }
    Ok(())
}

impl RobotSummary {
    pub fn check(&self) -> Result<()> {
        unit("q", &self.q)?;
        for (axis, i) in [("x", 0), ("y", 1), ("z", 2)] {
            finite(&format!("v.{axis}"), self.v[i])?;
            finite(&format!("angular_momentum.{axis}"), self.angular_momentum[i])?;
        }
        for (f, side) in self.feet.iter().zip(["left", "right"]) {
            finite(&format!("feet.{side}.p_rel.x"), f.p_rel[0])?;
            finite(&format!("feet.{side}.p_rel.y"), f.p_rel[1])?;
            finite(&format!("feet.{side}.z"), f.z)?;
            unit(&format!("feet.{side}.q"), &f.q)?;
        }
        finite("p_y", self.p_y)?;
        finite("hip_roll_velocity", self.hip_roll_velocity)?;
        finite("hip_yaw_velocity", self.hip_yaw_velocity)?;
        finite("f_clock", self.f_clock)
    }

    /// The summary of a robot tracking `reference` perfectly.
    pub fn from_reference(reference: &ReferenceSample, config: &RewardConfig) -> Self {
        let targets = FootTargets::new(reference, config);
        Self {
            q: reference.state.q,
            v: reference.state.v,
            angular_momentum: reference.angular_momentum,
            feet: [0, 1].map(|i| FootSummary {
                p_rel: targets.p_rel[i],
                z: targets.z[i],
                q: targets.q,
            }),
            p_y: reference.state.p.y,
            hip_roll_velocity: 0.0,
            hip_yaw_velocity: 0.0,
            f_clock: 0.0,
        }
    }
}

/// Per-foot targets derived from a reference sample.
struct FootTargets {
    p_rel: [[f64; 2]; 2],
    z: [f64; 2],
    /// Yaw-only body attitude.
    q: Quaternion,
    swing: [bool; 2],
}

impl FootTargets {
    fn new(r: &ReferenceSample, config: &RewardConfig) -> Self {
        let c = r.state.p;
        Self {
            p_rel: r.foot.map(|f| [f.x - c.x, f.y - c.y]),
            z: [0, 1].map(|i| if r.in_contact[i] { r.foot[i].z } else { config.z_foot_des }),
            q: Quaternion::from_yaw(r.state.q.yaw()),
            swing: r.in_contact.map(|c| !c),
        }
    }
}

/// Evaluate every reward term for `robot` against `reference`.
pub fn evaluate(robot: &RobotSummary, reference: &ReferenceSample, config: &RewardConfig) -> Result<RewardBreakdown> {
    robot.check()?;
    let c = &config.coefficients;
    let e = |x: f64| (-x.abs()).exp();
    let rs = &reference.state;

    let r_q = c.orientation * (-quat_distance(&robot.q, &rs.q)).exp();
    let r_v = c.velocity_x * e(robot.v.x - rs.v.x)
        + c.velocity_y * e(robot.v.y - rs.v.y)
        + c.velocity_z * e(robot.v.z - rs.v.z);
    let r_l = c.angular_momentum * (-(robot.angular_momentum - reference.angular_momentum).norm()).exp();

    let t = FootTargets::new(reference, config);
    let feet: Vec<usize> = match config.foot_terms {
        FootTerms::Swing if t.swing.iter().any(|s| *s) => (0..2).filter(|&i| t.swing[i]).collect(),
        _ => vec![0, 1],
    };
    let n = feet.len() as f64;
    let k = config.foot_position_scale;
    let (mut r_pf, mut r_qfoot, mut r_zfoot) = (0.0, 0.0, 0.0);
    for &i in &feet {
        let f = &robot.feet[i];
        r_pf += c.foot_position_x * e(k * (f.p_rel[0] - t.p_rel[i][0]))
            + c.foot_position_y * e(k * (f.p_rel[1] - t.p_rel[i][1]));
        r_qfoot += c.foot_orientation * (-quat_distance(&f.q, &t.q)).exp();
        r_zfoot += c.foot_height * e(f.z - t.z[i]);
    }
    r_pf /= n;
    r_qfoot /= n;
    r_zfoot /= n;

    let r_clock = c.clock * e(robot.f_clock);
    let r_drift = if robot.p_y.abs() < config.drift_threshold {
        c.drift
    } else {
        c.drift * e(config.drift_scale * robot.p_y)
    };
    let r_hiproll = c.hip_roll * e(robot.hip_roll_velocity);
    let r_hipyaw = c.hip_yaw * e(robot.hip_yaw_velocity);
    let sum = r_q + r_v + r_l + r_pf + r_clock + r_qfoot + r_zfoot + r_drift + r_hiproll + r_hipyaw;
    Ok(RewardBreakdown {
        r_q,
        r_v,
        r_l,
        r_pf,
        r_clock,
        r_qfoot,
        r_zfoot,
        r_drift,
        r_hiproll,
        r_hipyaw,
        total: sum / config.divisor(),
    })
}

/// Contact-truth changes of one foot over a cycle, as sorted cycle times.
fn transitions(schedule: &StanceSchedule, foot: usize) -> Vec<f64> {
    let p = schedule.period;
    let state_after = |x: f64| schedule.windows[foot].iter().any(|&(a, b)| x >= a && x < b);
    let state_before = |x: f64| {
        let x = if x <= 0.0 { p } else { x };
        schedule.windows[foot].iter().any(|&(a, b)| x > a && x <= b)
    };
    let mut out: Vec<f64> = schedule.windows[foot]
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .map(|x| if x >= p { x - p } else { x })
        .filter(|&x| state_before(x) != state_after(x))
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Phase-offset penalty in `[0, gain]`. For each foot whose measured
/// contact disagrees with the reference at `t`, the penalty is the distance
/// to the nearest reference transition, divided by half the length of the
/// current reference window and capped at 1. The two feet are averaged.
pub fn clock_value(t: f64, schedule: &StanceSchedule, measured: [bool; 2], gain: f64) -> f64 {
    let p = schedule.period;
    let tau = t.rem_euclid(p);
    let mut total = 0.0;
    for foot in 0..2 {
        if schedule.in_contact(foot, tau) == measured[foot] {
            continue;
        }
        let tr = transitions(schedule, foot);
        if tr.is_empty() {
            total += 1.0;
            continue;
        }
        let next = tr.iter().copied().find(|&x| x > tau).unwrap_or(tr[0] + p);
        let prev = tr.iter().copied().rev().find(|&x| x <= tau).unwrap_or(tr[tr.len() - 1] - p);
        let d = (tau - prev).min(next - tau);
        total += (d / (0.5 * (next - prev))).min(1.0);
    }
    gain * total / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::srbm::SrbmState;
    use std::f64::consts::E;

    fn reference() -> ReferenceSample {
        ReferenceSample {
            time: 0.1,
            phase: 0.25,
            cycle: 0,
            mode: 0,
            state: SrbmState {
                p: Vec3::new(0.3, 0.05, 0.8),
                q: Quaternion::from_yaw(0.2),
                v: Vec3::new(1.0, 0.0, -0.2),
                omega: Vec3::new(0.0, 0.1, 0.3),
            },
            angular_momentum: Vec3::new(0.0, 0.1, 0.18),
            in_contact: [true, false],
            grf: [Vec3::new(0.0, 0.0, 300.0), Vec3::zeros()],
            foot: [Vec3::new(0.35, 0.15, 0.0), Vec3::new(0.1, -0.1, 0.0)],
        }
    }

    fn cfg() -> RewardConfig {
        RewardConfig::default()
    }

    #[test]
    fn coefficients_sum_to_divisor() {
        assert!((cfg().divisor() - 2.45).abs() < 1e-15);
    }

    #[test]
    fn perfect_tracking_scores_one() {
        let r = reference();
        let s = RobotSummary::from_reference(&r, &cfg());
        let b = evaluate(&s, &r, &cfg()).unwrap();
        assert!((b.total - 1.0).abs() < 1e-12);
        assert_eq!(b.r_q, 0.05);
        assert_eq!(b.r_drift, 0.3);
    }

    #[test]
    fn velocity_error_of_one() {
        let r = reference();
        let mut s = RobotSummary::from_reference(&r, &cfg());
        s.v.x += 1.0;
        let b = evaluate(&s, &r, &cfg()).unwrap();
        assert!((b.r_v - (0.35 / E + 0.2)).abs() < 1e-12);
        let expected = (2.45 - 0.35 * (1.0 - 1.0 / E)) / 2.45;
        assert!((b.total - expected).abs() < 1e-12);
    }

    #[test]
    fn drift_branch_and_jump() {
        let r = reference();
        let mut s = RobotSummary::from_reference(&r, &cfg());
        s.p_y = 0.3;
        let b = evaluate(&s, &r, &cfg()).unwrap();
        assert!((b.r_drift - 0.3 * (-4.5f64).exp()).abs() < 1e-15);
        s.p_y = 0.2 - 1e-12;
        assert_eq!(evaluate(&s, &r, &cfg()).unwrap().r_drift, 0.3);
        s.p_y = 0.2;
        assert!((evaluate(&s, &r, &cfg()).unwrap().r_drift - 0.3 * (-3.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn double_cover_leaves_orientation_term() {
        let r = reference();
        let mut s = RobotSummary::from_reference(&r, &cfg());
        s.q = Quaternion::from_yaw(0.5);
        let a = evaluate(&s, &r, &cfg()).unwrap().r_q;
        s.q = -s.q;
        assert!((evaluate(&s, &r, &cfg()).unwrap().r_q - a).abs() < 1e-15);
    }

    #[test]
    fn non_finite_input_names_field() {
        let r = reference();
        let mut s = RobotSummary::from_reference(&r, &cfg());
        s.feet[1].z = f64::NAN;
        assert_eq!(evaluate(&s, &r, &cfg()), Err(Error::Evaluation("feet.right.z".into())));
        let mut s = RobotSummary::from_reference(&r, &cfg());
        s.hip_yaw_velocity = f64::INFINITY;
        assert_eq!(evaluate(&s, &r, &cfg()), Err(Error::Evaluation("hip_yaw_velocity".into())));
    }

    #[test]
    fn swing_only_foot_terms() {
        let r = reference();
        let mut c = cfg();
        c.foot_terms = FootTerms::Swing;
        let mut s = RobotSummary::from_reference(&r, &c);
        // Stance foot error is ignored in swing-only mode.
        s.feet[0].z += 0.5;
        let b = evaluate(&s, &r, &c).unwrap();
        assert_eq!(b.r_zfoot, 0.3);
        c.foot_terms = FootTerms::Average;
        let b = evaluate(&s, &r, &c).unwrap();
        assert!((b.r_zfoot - 0.5 * (0.3 + 0.3 * (-0.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn config_rejects_non_positive_coefficient() {
        let mut c = cfg();
        c.coefficients.clock = 0.0;
        assert!(matches!(c.validate(), Err(Error::Config(m)) if m.contains("clock")));
    }

    fn running_schedule() -> StanceSchedule {
        StanceSchedule {
            period: 0.8,
            windows: [vec![(0.0, 0.4)], vec![(0.4, 0.8)]],
        }
    }

    #[test]
    fn clock_zero_when_in_phase() {
        let s = running_schedule();
        assert_eq!(clock_value(0.1, &s, [true, false], 1.0), 0.0);
        assert_eq!(clock_value(0.5, &s, [false, true], 1.0), 0.0);
    }

    #[test]
    fn clock_anti_phase_peaks_at_one() {
        let s = running_schedule();
        assert!((clock_value(0.2, &s, [false, true], 1.0) - 1.0).abs() < 1e-12);
        assert!((clock_value(0.6, &s, [true, false], 1.0) - 1.0).abs() < 1e-12);
        // Linear in the offset from the nearest transition.
        assert!((clock_value(0.1, &s, [false, true], 1.0) - 0.5).abs() < 1e-12);
        // One foot wrong: half.
        assert!((clock_value(0.2, &s, [false, false], 1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn clock_is_periodic() {
        let s = running_schedule();
        for k in 0..40 {
            let t = 0.013 * k as f64;
            for m in [[true, true], [false, true], [true, false], [false, false]] {
                let a = clock_value(t, &s, m, 1.0);
                let b = clock_value(t + s.period, &s, m, 1.0);
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wrapping_window_has_no_transition_at_zero() {
        // Double stance at both ends of a jump cycle.
        let s = StanceSchedule {
            period: 1.0,
            windows: [vec![(0.0, 0.3), (0.8, 1.0)], vec![(0.0, 0.3), (0.8, 1.0)]],
        };
        assert_eq!(transitions(&s, 0), vec![0.3, 0.8]);
        // Airborne at t = 0.9: window (0.8, 1.3) centred at 1.05.
        let v = clock_value(0.9, &s, [false, false], 1.0);
        assert!((v - 0.1 / 0.25).abs() < 1e-12);
    }
}
