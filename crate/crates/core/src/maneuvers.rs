//! Maneuver composition: hybrid mode sequences plus the constraint sets that
//! shape forward running, turning and spin jumps.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constraints::TransferabilityConfig;
use crate::error::{Error, Result};
use crate::srbm::{mirror_sagittal, quat_distance, Mat3, Quaternion, SrbmParams, SrbmState, Vec3};
use crate::transcription::{DecisionLayout, HybridMode, KnotRef, ModeKind};

/// Upper guard on commanded speeds, m/s (exclusive).
pub const MAX_SPEED: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    /// +1 for left, -1 for right.
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManeuverKind {
    Running,
    Turning,
    SpinJump,
    Custom,
}

/// A state component at the first or last knot of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateRef {
    pub mode: usize,
    pub knot: KnotRef,
    pub component: usize,
}

impl StateRef {
    pub fn new(mode: usize, knot: KnotRef, component: usize) -> Self {
        Self {
            mode,
            knot,
            component,
        }
    }

    fn value(&self, z: &[f64], layout: &DecisionLayout) -> f64 {
        let k = layout.knot_index(self.mode, self.knot);
        z[layout.state_index(self.mode, k, self.component)]
    }
}

/// State component indices in the packed state.
pub mod component {
    pub const P_X: usize = 0;
    pub const P_Y: usize = 1;
    pub const P_Z: usize = 2;
    pub const V_X: usize = 7;
    pub const V_Y: usize = 8;
    pub const V_Z: usize = 9;
    pub const OMEGA_X: usize = 10;
    pub const OMEGA_Y: usize = 11;
    pub const OMEGA_Z: usize = 12;
}

/// Maneuver-specific constraint. Equalities evaluate to `0` when satisfied;
/// inequalities to `<= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ManeuverConstraint {
    /// `d(q(mode, knot), target) - tolerance <= 0`.
    Orientation {
        mode: usize,
        knot: KnotRef,
        target: Quaternion,
        tolerance: f64,
    },
    /// `d(mirror(q(mode, last)), q(mode, first)) - tolerance <= 0`.
    MirrorOrientation { mode: usize, tolerance: f64 },
    /// `x[at] - value = 0`.
    StateEquals { at: StateRef, value: f64 },
    /// `x[a] - sign * x[b] = 0`.
    StateMatch { a: StateRef, b: StateRef, sign: f64 },
    /// `dir . (p(last mode, last) - p(0, first)) / T - value = 0` with `T` the
    /// total duration and `dir` a horizontal unit direction.
    AverageVelocity { direction: [f64; 2], value: f64 },
}

impl ManeuverConstraint {
    pub fn is_equality(&self) -> bool {
        !matches!(
            self,
            ManeuverConstraint::Orientation { .. } | ManeuverConstraint::MirrorOrientation { .. }
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            ManeuverConstraint::Orientation { .. } => "orientation",
            ManeuverConstraint::MirrorOrientation { .. } => "mirror_orientation",
            ManeuverConstraint::StateEquals { .. } => "state_equals",
            ManeuverConstraint::StateMatch { .. } => "state_match",
            ManeuverConstraint::AverageVelocity { .. } => "average_velocity",
        }
    }

    pub fn residual(&self, z: &[f64], layout: &DecisionLayout) -> f64 {
        match self {
            ManeuverConstraint::Orientation {
                mode,
                knot,
                target,
                tolerance,
            } => {
                let q = layout.quaternion(z, *mode, layout.knot_index(*mode, *knot));
                quat_distance(&q, target) - tolerance
            }
            ManeuverConstraint::MirrorOrientation { mode, tolerance } => {
                let first = layout.quaternion(z, *mode, 0);
                let last = layout.quaternion(z, *mode, layout.knots(*mode) - 1);
                quat_distance(&mirror_sagittal(&last), &first) - tolerance
            }
            ManeuverConstraint::StateEquals { at, value } => at.value(z, layout) - value,
            ManeuverConstraint::StateMatch { a, b, sign } => {
                a.value(z, layout) - sign * b.value(z, layout)
            }
            ManeuverConstraint::AverageVelocity { direction, value } => {
                let last = layout.modes() - 1;
                let a = layout.state(z, 0, 0).p;
                let b = layout.state(z, last, layout.knots(last) - 1).p;
                let disp = direction[0] * (b.x - a.x) + direction[1] * (b.y - a.y);
                disp / layout.total_duration(z) - value
            }
        }
    }

    fn modes_referenced(&self) -> Vec<usize> {
        match self {
            ManeuverConstraint::Orientation { mode, .. }
            | ManeuverConstraint::MirrorOrientation { mode, .. } => vec![*mode],
            ManeuverConstraint::StateEquals { at, .. } => vec![at.mode],
            ManeuverConstraint::StateMatch { a, b, .. } => vec![a.mode, b.mode],
            ManeuverConstraint::AverageVelocity { .. } => vec![0],
        }
    }
}

/// Attitude targets and tolerances for the built-in maneuvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManeuverTargets {
    /// Desired running attitude; its yaw is the start heading of grounded maneuvers.
    pub q_run: Quaternion,
    /// Desired attitude at the end of liftoff; its yaw is the jump's start heading.
    pub q_liftoff: Quaternion,
    pub theta_tol: f64,
    pub theta_mirror: f64,
    pub theta_turn: f64,
    pub theta_liftoff: f64,
    pub theta_touchdown_initial: f64,
    pub theta_touchdown_final: f64,
    /// Standing CoM height used for cold-start keyframes, m.
    pub nominal_height: f64,
}

impl Default for ManeuverTargets {
    fn default() -> Self {
        Self {
            q_run: Quaternion::identity(),
            q_liftoff: Quaternion::identity(),
            theta_tol: 0.1,
            theta_mirror: 0.15,
            theta_turn: 0.1,
            theta_liftoff: 0.1,
            theta_touchdown_initial: 0.6,
            theta_touchdown_final: 0.1,
            nominal_height: 0.8,
        }
    }
}

impl ManeuverTargets {
    pub fn validate(&self) -> Result<()> {
        let tols = [
            ("theta_tol", self.theta_tol),
            ("theta_mirror", self.theta_mirror),
            ("theta_turn", self.theta_turn),
            ("theta_liftoff", self.theta_liftoff),
            ("theta_touchdown_initial", self.theta_touchdown_initial),
            ("theta_touchdown_final", self.theta_touchdown_final),
        ];
        for (name, v) in tols {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Range(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.theta_touchdown_initial < self.theta_touchdown_final {
            return Err(Error::Range(
                "theta_touchdown_initial must not be tighter than theta_touchdown_final".into(),
            ));
        }
        if !(self.nominal_height > 0.0) {
            return Err(Error::Range("nominal_height must be positive".into()));
        }
        for (name, q) in [("q_run", self.q_run), ("q_liftoff", self.q_liftoff)] {
            if !q.is_unit(1e-9) {
                return Err(Error::Range(format!("{name} must be a unit quaternion")));
            }
        }
        Ok(())
    }
}

/// Model, limits and timing shared by every builder.
#[derive(Debug, Clone, PartialEq)]
pub struct ManeuverConfigs {
    pub params: SrbmParams,
    pub transfer: TransferabilityConfig,
    pub stance_duration: (f64, f64),
    pub flight_duration: (f64, f64),
    pub first_side: Side,
}

impl Default for ManeuverConfigs {
    fn default() -> Self {
        Self {
            params: desk_params(),
            transfer: TransferabilityConfig::default(),
            stance_duration: (0.2, 0.6),
            flight_duration: (0.05, 0.5),
            first_side: Side::Left,
        }
    }
}

/// Desk-scale body used by the defaults: 30 kg with a humanoid-ish inertia.
pub fn desk_params() -> SrbmParams {
    SrbmParams {
        mass: 30.0,
        inertia: Mat3::from_diagonal(&Vec3::new(1.2, 1.0, 0.6)),
        gravity: 9.81,
    }
}

/// A fully specified maneuver ready for transcription.
#[derive(Debug, Clone, PartialEq)]
pub struct ManeuverSpec {
    pub kind: ManeuverKind,
    pub modes: Vec<HybridMode>,
    /// Stance side per mode for single stance; `None` otherwise.
    pub sides: Vec<Option<Side>>,
    /// Nominal heading per mode, rad.
    pub headings: Vec<f64>,
    pub constraints: Vec<ManeuverConstraint>,
    pub transfer: TransferabilityConfig,
    pub params: SrbmParams,
    /// Nominal states at the `modes.len() + 1` mode boundaries, used for cold starts.
    pub keyframes: Vec<SrbmState>,
}

impl ManeuverSpec {
    /// Spec with default limits, no maneuver constraints and resting keyframes.
    pub fn bare(modes: Vec<HybridMode>, params: SrbmParams) -> Self {
        let mut side = Side::Left;
        let sides = modes
            .iter()
            .map(|m| {
                (m.kind == ModeKind::SingleStance).then(|| {
                    let s = side;
                    side = side.other();
                    s
                })
            })
            .collect();
        let rest = SrbmState {
            p: Vec3::new(0.0, 0.0, 0.8),
            ..Default::default()
        };
        Self {
            kind: ManeuverKind::Custom,
            headings: vec![0.0; modes.len()],
            keyframes: vec![rest; modes.len() + 1],
            modes,
            sides,
            constraints: Vec::new(),
            transfer: TransferabilityConfig::default(),
            params,
        }
    }

    /// Side labels of each mode's contacts, in contact order.
    pub fn contact_sides(&self) -> Vec<Vec<Side>> {
        self.modes
            .iter()
            .zip(&self.sides)
            .map(|(m, s)| match m.kind {
                ModeKind::Flight => Vec::new(),
                ModeKind::SingleStance => vec![s.unwrap_or(Side::Left)],
                ModeKind::DoubleStance => vec![Side::Left, Side::Right],
            })
            .collect()
    }

    pub fn layout(&self) -> Result<DecisionLayout> {
        DecisionLayout::from_modes(&self.modes)
    }

    /// Midpoint of each mode's duration bounds.
    pub fn nominal_durations(&self) -> Vec<f64> {
        self.modes.iter().map(|m| 0.5 * (m.t_min + m.t_max)).collect()
    }

    /// Structural checks: legal mode sequence, alternating sides, consistent
    /// per-mode metadata and constraint references.
    pub fn validate(&self) -> Result<()> {
        let m = self.modes.len();
        if m == 0 {
            return Err(Error::InvalidSpec("maneuver has no modes".into()));
        }
        for mode in &self.modes {
            mode.validate()?;
        }
        self.params.validate()?;
        self.transfer.validate()?;
        if self.sides.len() != m || self.headings.len() != m {
            return Err(Error::InvalidSpec(
                "sides and headings must have one entry per mode".into(),
            ));
        }
        if self.keyframes.len() != m + 1 {
            return Err(Error::InvalidSpec(format!(
                "expected {} keyframes, got {}",
                m + 1,
                self.keyframes.len()
            )));
        }
        if self.headings.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidSpec("non-finite heading".into()));
        }
        for (mode, side) in self.modes.iter().zip(&self.sides) {
            if (mode.kind == ModeKind::SingleStance) != side.is_some() {
                return Err(Error::InvalidSpec(
                    "single-stance modes need a side, other modes must not have one".into(),
                ));
            }
        }
        match self.kind {
            ManeuverKind::Running | ManeuverKind::Turning => {
                if self.modes.iter().any(|x| x.kind != ModeKind::SingleStance) {
                    return Err(Error::InvalidSpec(
                        "grounded maneuvers use single-stance modes only".into(),
                    ));
                }
                if self.sides.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidSpec("stance sides must alternate".into()));
                }
            }
            ManeuverKind::SpinJump => {
                let kinds: Vec<_> = self.modes.iter().map(|x| x.kind).collect();
                let expected = [
                    ModeKind::DoubleStance,
                    ModeKind::Flight,
                    ModeKind::Flight,
                    ModeKind::DoubleStance,
                ];
                if kinds != expected {
                    return Err(Error::InvalidSpec(
                        "spin jumps are double stance, flight, flight, double stance".into(),
                    ));
                }
            }
            ManeuverKind::Custom => {}
        }
        for c in &self.constraints {
            if c.modes_referenced().iter().any(|&i| i >= m) {
                return Err(Error::InvalidSpec(format!(
                    "{} constraint references a missing mode",
                    c.name()
                )));
            }
            if let ManeuverConstraint::Orientation { tolerance, .. }
            | ManeuverConstraint::MirrorOrientation { tolerance, .. } = c
            {
                if !(*tolerance >= 0.0) {
                    return Err(Error::InvalidSpec("negative orientation tolerance".into()));
                }
            }
        }
        Ok(())
    }
}

fn check_speed(v_des: f64) -> Result<()> {
    if !(0.0..MAX_SPEED).contains(&v_des) {
        return Err(Error::Range(format!(
            "v_des must lie in [0, {MAX_SPEED}) m/s, got {v_des}"
        )));
    }
    Ok(())
}

fn stance_modes(n: usize, knots: usize, cfg: &ManeuverConfigs) -> Vec<HybridMode> {
    let (lo, hi) = cfg.stance_duration;
    vec![HybridMode::new(ModeKind::SingleStance, knots, lo, hi); n]
}

fn alternating_sides(n: usize, first: Side) -> Vec<Option<Side>> {
    let mut s = first;
    (0..n)
        .map(|_| {
            let out = s;
            s = s.other();
            Some(out)
        })
        .collect()
}

fn planar(heading: f64) -> Vec3 {
    Vec3::new(heading.cos(), heading.sin(), 0.0)
}

/// Apply a world-frame yaw rotation to an attitude.
fn yawed(q: &Quaternion, yaw: f64) -> Quaternion {
    Quaternion::from_yaw(yaw) * *q
}

/// Forward running: `n_steps` alternating single-stance modes.
pub fn build_running(
    v_des: f64,
    n_steps: usize,
    knots: usize,
    targets: &ManeuverTargets,
    cfg: &ManeuverConfigs,
) -> Result<ManeuverSpec> {
    use component::*;
    check_speed(v_des)?;
    if n_steps < 1 {
        return Err(Error::InvalidSpec("running needs at least one step".into()));
    }
    targets.validate()?;
    let modes = stance_modes(n_steps, knots, cfg);
    let heading = targets.q_run.yaw();
    let last = n_steps - 1;

    let mut constraints = vec![
        ManeuverConstraint::Orientation {
            mode: 0,
            knot: KnotRef::First,
            target: targets.q_run,
            tolerance: targets.theta_tol,
        },
        ManeuverConstraint::Orientation {
            mode: last,
            knot: KnotRef::Last,
            target: targets.q_run,
            tolerance: targets.theta_tol,
        },
        ManeuverConstraint::AverageVelocity {
            direction: [heading.cos(), heading.sin()],
            value: v_des,
        },
        ManeuverConstraint::AverageVelocity {
            direction: [-heading.sin(), heading.cos()],
            value: 0.0,
        },
    ];
    for m in 0..n_steps {
        let first = |c| StateRef::new(m, KnotRef::First, c);
        let end = |c| StateRef::new(m, KnotRef::Last, c);
        for c in [P_Z, V_Z, OMEGA_Y] {
            constraints.push(ManeuverConstraint::StateMatch {
                a: first(c),
                b: end(c),
                sign: 1.0,
            });
        }
        for c in [OMEGA_X, OMEGA_Z] {
            constraints.push(ManeuverConstraint::StateMatch {
                a: end(c),
                b: first(c),
                sign: -1.0,
            });
        }
        constraints.push(ManeuverConstraint::MirrorOrientation {
            mode: m,
            tolerance: targets.theta_mirror,
        });
    }

    let t_mid = 0.5 * (cfg.stance_duration.0 + cfg.stance_duration.1);
    let dir = planar(heading);
    let keyframes = (0..=n_steps)
        .map(|m| SrbmState {
            p: dir * (v_des * t_mid * m as f64) + Vec3::new(0.0, 0.0, targets.nominal_height),
            q: targets.q_run,
            v: dir * v_des,
            omega: Vec3::zeros(),
        })
        .collect();

    let spec = ManeuverSpec {
        kind: ManeuverKind::Running,
        modes,
        sides: alternating_sides(n_steps, cfg.first_side),
        headings: vec![heading; n_steps],
        constraints,
        transfer: cfg.transfer,
        params: cfg.params.clone(),
        keyframes,
    };
    spec.validate()?;
    Ok(spec)
}

/// Turning: the nominal heading advances by `heading_change / n_steps` per step.
pub fn build_turning(
    heading_change: f64,
    n_steps: usize,
    v_des: f64,
    knots: usize,
    targets: &ManeuverTargets,
    cfg: &ManeuverConfigs,
) -> Result<ManeuverSpec> {
    use component::*;
    check_speed(v_des)?;
    if n_steps < 2 {
        return Err(Error::InvalidSpec("turning needs at least two steps".into()));
    }
    if !(heading_change.abs() <= 2.0 * PI) {
        return Err(Error::Range(format!(
            "heading change must be within [-2pi, 2pi], got {heading_change}"
        )));
    }
    targets.validate()?;
    let modes = stance_modes(n_steps, knots, cfg);
    let h0 = targets.q_run.yaw();
    let step = heading_change / n_steps as f64;
    let headings: Vec<f64> = (1..=n_steps).map(|m| h0 + step * m as f64).collect();
    let q_turn = yawed(&targets.q_run, heading_change);
    let last = n_steps - 1;

    let mut constraints = vec![ManeuverConstraint::Orientation {
        mode: last,
        knot: KnotRef::Last,
        target: q_turn,
        tolerance: targets.theta_turn,
    }];
    let v0 = planar(h0) * v_des;
    let vf = planar(h0 + heading_change) * v_des;
    for (i, c) in [V_X, V_Y, V_Z].into_iter().enumerate() {
        constraints.push(ManeuverConstraint::StateEquals {
            at: StateRef::new(0, KnotRef::First, c),
            value: v0[i],
        });
        constraints.push(ManeuverConstraint::StateEquals {
            at: StateRef::new(last, KnotRef::Last, c),
            value: vf[i],
        });
    }
    constraints.push(ManeuverConstraint::StateMatch {
        a: StateRef::new(0, KnotRef::First, P_Z),
        b: StateRef::new(last, KnotRef::Last, P_Z),
        sign: 1.0,
    });

    let t_mid = 0.5 * (cfg.stance_duration.0 + cfg.stance_duration.1);
    let mut keyframes = Vec::with_capacity(n_steps + 1);
    let mut p = Vec3::new(0.0, 0.0, targets.nominal_height);
    for m in 0..=n_steps {
        let yaw = h0 + step * m as f64;
        keyframes.push(SrbmState {
            p,
            q: yawed(&targets.q_run, step * m as f64),
            v: planar(yaw) * v_des,
            omega: Vec3::new(0.0, 0.0, step / t_mid),
        });
        if m < n_steps {
            p += planar(headings[m] - 0.5 * step) * (v_des * t_mid);
        }
    }

    let spec = ManeuverSpec {
        kind: ManeuverKind::Turning,
        modes,
        sides: alternating_sides(n_steps, cfg.first_side),
        headings,
        constraints,
        transfer: cfg.transfer,
        params: cfg.params.clone(),
        keyframes,
    };
    spec.validate()?;
    Ok(spec)
}

/// Spin jump: double-stance liftoff, two flight phases split at the apex, and
/// a double-stance touchdown.
pub fn build_spin_jump(
    yaw_change: f64,
    apex_height: f64,
    knots: usize,
    targets: &ManeuverTargets,
    cfg: &ManeuverConfigs,
) -> Result<ManeuverSpec> {
    use component::*;
    if !(apex_height > 0.0) {
        return Err(Error::Range(format!(
            "apex height must be positive, got {apex_height}"
        )));
    }
    if apex_height <= targets.nominal_height {
        return Err(Error::Range(format!(
            "apex height {apex_height} must exceed the standing height {}",
            targets.nominal_height
        )));
    }
    if !(yaw_change.abs() <= 2.0 * PI) {
        return Err(Error::Range(format!(
            "yaw change must be within [-2pi, 2pi], got {yaw_change}"
        )));
    }
    targets.validate()?;
    let (slo, shi) = cfg.stance_duration;
    let (flo, fhi) = cfg.flight_duration;
    let modes = vec![
        HybridMode::new(ModeKind::DoubleStance, knots, slo, shi),
        HybridMode::new(ModeKind::Flight, knots, flo, fhi),
        HybridMode::new(ModeKind::Flight, knots, flo, fhi),
        HybridMode::new(ModeKind::DoubleStance, knots, slo, shi),
    ];
    let q_touchdown = yawed(&targets.q_liftoff, yaw_change);
    let h0 = targets.q_liftoff.yaw();
    let headings: Vec<f64> = (0..4).map(|m| h0 + yaw_change * m as f64 / 3.0).collect();

    let mut constraints = vec![
        ManeuverConstraint::Orientation {
            mode: 0,
            knot: KnotRef::Last,
            target: targets.q_liftoff,
            tolerance: targets.theta_liftoff,
        },
        ManeuverConstraint::Orientation {
            mode: 3,
            knot: KnotRef::First,
            target: q_touchdown,
            tolerance: targets.theta_touchdown_initial,
        },
        ManeuverConstraint::Orientation {
            mode: 3,
            knot: KnotRef::Last,
            target: q_touchdown,
            tolerance: targets.theta_touchdown_final,
        },
    ];
    for (mode, knot) in [(0, KnotRef::First), (3, KnotRef::Last)] {
        for c in [V_X, V_Y, V_Z, OMEGA_X, OMEGA_Y, OMEGA_Z] {
            constraints.push(ManeuverConstraint::StateEquals {
                at: StateRef::new(mode, knot, c),
                value: 0.0,
            });
        }
    }
    constraints.push(ManeuverConstraint::StateEquals {
        at: StateRef::new(1, KnotRef::Last, P_Z),
        value: apex_height,
    });
    constraints.push(ManeuverConstraint::StateEquals {
        at: StateRef::new(1, KnotRef::Last, V_Z),
        value: 0.0,
    });

    // Ballistic keyframes consistent with midpoint flight durations.
    let g = cfg.params.gravity;
    let tf = 0.5 * (flo + fhi);
    let rise = (0.5 * g * tf * tf).min(apex_height - targets.nominal_height);
    let takeoff_height = apex_height - rise;
    let vz = (2.0 * g * rise).sqrt();
    let spin = yaw_change / (2.0 * tf);
    let base = Vec3::new(0.0, 0.0, 0.0);
    let keyframes = vec![
        SrbmState {
            p: base + Vec3::new(0.0, 0.0, targets.nominal_height),
            q: targets.q_liftoff,
            ..Default::default()
        },
        SrbmState {
            p: base + Vec3::new(0.0, 0.0, takeoff_height),
            q: targets.q_liftoff,
            v: Vec3::new(0.0, 0.0, vz),
            omega: Vec3::new(0.0, 0.0, spin),
        },
        SrbmState {
            p: base + Vec3::new(0.0, 0.0, apex_height),
            q: yawed(&targets.q_liftoff, 0.5 * yaw_change),
            v: Vec3::zeros(),
            omega: Vec3::new(0.0, 0.0, spin),
        },
        SrbmState {
            p: base + Vec3::new(0.0, 0.0, takeoff_height),
            q: q_touchdown,
            v: Vec3::new(0.0, 0.0, -vz),
            omega: Vec3::new(0.0, 0.0, spin),
        },
        SrbmState {
            p: base + Vec3::new(0.0, 0.0, targets.nominal_height),
            q: q_touchdown,
            ..Default::default()
        },
    ];

    let spec = ManeuverSpec {
        kind: ManeuverKind::SpinJump,
        modes,
        sides: vec![None; 4],
        headings,
        constraints,
        transfer: cfg.transfer,
        params: cfg.params.clone(),
        keyframes,
    };
    spec.validate()?;
    Ok(spec)
}

/// Everything needed to rebuild one of the built-in maneuvers. Sweeps vary a
/// single field and rebuild.
#[derive(Debug, Clone, PartialEq)]
pub struct ManeuverRequest {
    pub kind: ManeuverKind,
    /// Commanded speed, m/s. Unused by the spin jump.
    pub v_des: f64,
    /// Step count for running and turning.
    pub steps: usize,
    pub knots: usize,
    /// Total heading change for turning, yaw change for the spin jump, rad.
    pub heading_change: f64,
    /// Spin jump apex height, m.
    pub apex_height: f64,
    pub targets: ManeuverTargets,
    pub configs: ManeuverConfigs,
}

impl Default for ManeuverRequest {
    fn default() -> Self {
        Self {
            kind: ManeuverKind::Running,
            v_des: 1.0,
            steps: 2,
            knots: 15,
            heading_change: 0.0,
            apex_height: 1.2,
            targets: ManeuverTargets::default(),
            configs: ManeuverConfigs::default(),
        }
    }
}

impl ManeuverRequest {
    pub fn build(&self) -> Result<ManeuverSpec> {
        match self.kind {
            ManeuverKind::Running => {
                build_running(self.v_des, self.steps, self.knots, &self.targets, &self.configs)
            }
            ManeuverKind::Turning => build_turning(
                self.heading_change,
                self.steps,
                self.v_des,
                self.knots,
                &self.targets,
                &self.configs,
            ),
            ManeuverKind::SpinJump => build_spin_jump(
                self.heading_change,
                self.apex_height,
                self.knots,
                &self.targets,
                &self.configs,
            ),
            ManeuverKind::Custom => Err(Error::InvalidSpec(
                "custom maneuvers have no builder; assemble a ManeuverSpec directly".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transcription::{assemble, ConstraintSets};
    use std::f64::consts::FRAC_PI_2;

    fn running(v: f64, steps: usize, n: usize) -> ManeuverSpec {
        build_running(v, steps, n, &ManeuverTargets::default(), &ManeuverConfigs::default()).unwrap()
    }

    #[test]
    fn running_counts() {
        let spec = running(1.0, 2, 10);
        let p = assemble(&spec, &ConstraintSets::full()).unwrap();
        assert_eq!(p.dim, 328);
        // defects + norms + linking + (2 avg velocity + 5 per-mode equalities)
        assert_eq!(p.n_eq(), 2 * (9 * 13 + 10) + 13 + 2 + 2 * 5);
        let maneuver_ineq = 2 + 2;
        let transfer = 20 + 20 + 40 + 20 + 2 * 2 * 9 + 3 * 20 + 2 * 2;
        assert_eq!(p.n_ineq(), maneuver_ineq + transfer);
        assert_eq!(spec.sides, vec![Some(Side::Left), Some(Side::Right)]);
    }

    #[test]
    fn running_guards_speed() {
        let t = ManeuverTargets::default();
        let c = ManeuverConfigs::default();
        assert!(matches!(build_running(10.0, 2, 10, &t, &c), Err(Error::Range(_))));
        assert!(matches!(build_running(-0.1, 2, 10, &t, &c), Err(Error::Range(_))));
        assert!(build_running(1.0, 0, 10, &t, &c).is_err());
        assert!(build_running(1.0, 2, 1, &t, &c).is_err());
    }

    /// Hand-built hop in place: symmetric in each mode, ends where it starts.
    #[test]
    fn in_place_hopping_satisfies_running_equalities() {
        let spec = running(0.0, 2, 5);
        let lay = spec.layout().unwrap();
        let mut z = vec![0.0; lay.total()];
        for m in 0..2 {
            lay.set_duration(&mut z, m, 0.4);
            for k in 0..5 {
                let phase = k as f64 / 4.0;
                let s = SrbmState {
                    p: Vec3::new(0.0, 0.0, 0.8 - 0.02 * (PI * phase).sin()),
                    q: Quaternion::from_axis_angle(Vec3::x(), 0.02 * (1.0 - 2.0 * phase)),
                    v: Vec3::new(0.0, 0.0, 0.0),
                    omega: Vec3::new(0.05 * (1.0 - 2.0 * phase), 0.0, 0.0),
                };
                lay.set_state(&mut z, m, k, &s);
            }
        }
        for c in &spec.constraints {
            let r = c.residual(&z, &lay);
            if c.is_equality() {
                assert!(r.abs() < 1e-12, "{c:?} -> {r}");
            } else {
                assert!(r <= 0.0, "{c:?} -> {r}");
            }
        }
    }

    #[test]
    fn turning_headings_increment() {
        let spec = build_turning(FRAC_PI_2, 4, 1.0, 8, &ManeuverTargets::default(), &ManeuverConfigs::default()).unwrap();
        for w in spec.headings.windows(2) {
            assert!((w[1] - w[0] - PI / 8.0).abs() < 1e-15);
        }
        assert!((spec.headings[3] - FRAC_PI_2).abs() < 1e-15);
        assert!(build_turning(7.0, 4, 1.0, 8, &ManeuverTargets::default(), &ManeuverConfigs::default()).is_err());
        assert!(build_turning(1.0, 1, 1.0, 8, &ManeuverTargets::default(), &ManeuverConfigs::default()).is_err());
    }

    #[test]
    fn zero_turn_keeps_heading() {
        let spec = build_turning(0.0, 3, 1.0, 6, &ManeuverTargets::default(), &ManeuverConfigs::default()).unwrap();
        assert!(spec.headings.iter().all(|h| *h == 0.0));
        let eqs: Vec<_> = spec
            .constraints
            .iter()
            .filter_map(|c| match c {
                ManeuverConstraint::StateEquals { at, value } => Some((at.component, *value)),
                _ => None,
            })
            .collect();
        assert_eq!(eqs.len(), 6);
        assert!(eqs.contains(&(component::V_X, 1.0)));
    }

    #[test]
    fn spin_jump_structure() {
        let spec = build_spin_jump(-FRAC_PI_2, 1.2, 8, &ManeuverTargets::default(), &ManeuverConfigs::default()).unwrap();
        let kinds: Vec<_> = spec.modes.iter().map(|m| m.kind).collect();
        assert_eq!(
            kinds,
            [ModeKind::DoubleStance, ModeKind::Flight, ModeKind::Flight, ModeKind::DoubleStance]
        );
        assert!(spec.constraints.iter().any(|c| matches!(
            c,
            ManeuverConstraint::StateEquals { at, value } if at.mode == 1 && at.component == component::P_Z && *value == 1.2
        )));
        assert!((spec.headings[3] + FRAC_PI_2).abs() < 1e-15);
        let zero = build_spin_jump(0.0, 1.1, 8, &ManeuverTargets::default(), &ManeuverConfigs::default()).unwrap();
        assert_eq!(zero.constraints.len(), spec.constraints.len());
        let t = ManeuverTargets::default();
        let c = ManeuverConfigs::default();
        assert!(matches!(build_spin_jump(0.0, 0.0, 8, &t, &c), Err(Error::Range(_))));
        assert!(matches!(build_spin_jump(0.0, 0.5, 8, &t, &c), Err(Error::Range(_))));
    }

    #[test]
    fn validator_catches_bad_structure() {
        let mut spec = running(1.0, 3, 5);
        spec.sides[1] = Some(Side::Left);
        assert!(spec.validate().is_err());

        let mut jump = build_spin_jump(0.3, 1.2, 5, &ManeuverTargets::default(), &ManeuverConfigs::default()).unwrap();
        jump.modes.swap(0, 1);
        assert!(jump.validate().is_err());

        let mut spec = running(1.0, 2, 5);
        spec.constraints.push(ManeuverConstraint::MirrorOrientation { mode: 7, tolerance: 0.1 });
        assert!(spec.validate().is_err());

        let t = ManeuverTargets {
            theta_touchdown_initial: 0.05,
            ..Default::default()
        };
        assert!(t.validate().is_err());
    }
}
