//! Transferability constraints. Every residual follows the `g(z) <= 0`
//! convention and is evaluated directly on the decision vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maneuvers::{ManeuverSpec, Side};
use crate::transcription::{DecisionLayout, ModeKind};
use crate::srbm::Vec3;

/// Model-level limits that keep solutions plausible for real hardware.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferabilityConfig {
    /// Maximum CoM-to-foot distance, m.
    pub l_max: f64,
    /// Cosine of the largest allowed angle between the leg and the body down axis.
    pub psi: f64,
    /// Friction coefficient used as `mu * F_z^2 >= F_x^2 + F_y^2`.
    pub mu: f64,
    /// Maximum contact force magnitude, N.
    pub f_max: f64,
    /// Maximum rate of change of vertical force, N/s.
    pub fdot_max: f64,
    /// Per-component angular velocity bound, rad/s.
    pub omega_max: f64,
    /// Lateral foot clearance from the CoM path, m.
    pub delta_min: f64,
}

impl Default for TransferabilityConfig {
    fn default() -> Self {
        Self {
            l_max: 1.0,
            psi: 0.5,
            mu: 0.8,
            f_max: 1200.0,
            fdot_max: 30000.0,
            omega_max: 6.0,
            delta_min: 0.08,
        }
    }
}

impl TransferabilityConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("l_max", self.l_max),
            ("psi", self.psi),
            ("mu", self.mu),
            ("f_max", self.f_max),
            ("fdot_max", self.fdot_max),
            ("omega_max", self.omega_max),
            ("delta_min", self.delta_min),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if self.mu > 2.0 {
            return Err(Error::InvalidParams(format!("mu must be <= 2, got {}", self.mu)));
        }
        if self.psi > 1.0 {
            return Err(Error::InvalidParams(format!("psi must be <= 1, got {}", self.psi)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransferKind {
    LegLength,
    LegAngle,
    FrictionCone,
    MaxForce,
    Yank,
    OmegaBound,
    FootstepHalfplanes,
}

impl TransferKind {
    pub const ALL: [TransferKind; 7] = [
        TransferKind::LegLength,
        TransferKind::LegAngle,
        TransferKind::FrictionCone,
        TransferKind::MaxForce,
        TransferKind::Yank,
        TransferKind::OmegaBound,
        TransferKind::FootstepHalfplanes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransferKind::LegLength => "leg_length",
            TransferKind::LegAngle => "leg_angle",
            TransferKind::FrictionCone => "friction_cone",
            TransferKind::MaxForce => "max_force",
            TransferKind::Yank => "yank_bound",
            TransferKind::OmegaBound => "omega_bound",
            TransferKind::FootstepHalfplanes => "footstep_halfplanes",
        }
    }
}

fn stance_contact_knots(layout: &DecisionLayout) -> usize {
    layout
        .blocks()
        .iter()
        .map(|b| b.knots * b.kind.contacts())
        .sum()
}

/// Residual count for one constraint family. Depends only on the spec.
pub fn residual_len(kind: TransferKind, _spec: &ManeuverSpec, layout: &DecisionLayout) -> usize {
    match kind {
        TransferKind::LegLength | TransferKind::LegAngle | TransferKind::MaxForce => {
            stance_contact_knots(layout)
        }
        TransferKind::FrictionCone => 2 * stance_contact_knots(layout),
        TransferKind::Yank => layout
            .blocks()
            .iter()
            .map(|b| 2 * (b.knots - 1) * b.kind.contacts())
            .sum(),
        TransferKind::OmegaBound => layout.blocks().iter().map(|b| 3 * b.knots).sum(),
        TransferKind::FootstepHalfplanes => layout
            .blocks()
            .iter()
            .map(|b| 2 * b.kind.contacts())
            .sum(),
    }
}

/// Evaluate one family into `out` for the solver. Degenerate geometry is
/// guarded rather than reported so the callable stays total.
pub(crate) fn residuals_into(
    kind: TransferKind,
    z: &[f64],
    spec: &ManeuverSpec,
    layout: &DecisionLayout,
    out: &mut [f64],
) {
    let cfg = &spec.transfer;
    let v = match kind {
        TransferKind::LegLength => leg_length(z, layout, cfg),
        TransferKind::LegAngle => leg_angle_guarded(z, layout, cfg),
        TransferKind::FrictionCone => friction_cone(z, layout, cfg),
        TransferKind::MaxForce => max_force(z, layout, cfg),
        TransferKind::Yank => yank_bound(z, layout, cfg),
        TransferKind::OmegaBound => omega_bound(z, layout, cfg),
        TransferKind::FootstepHalfplanes => {
            halfplanes_raw(z, layout, cfg, &spec.headings, &spec.contact_sides())
        }
    };
    out.copy_from_slice(&v);
}

fn for_each_stance_contact(layout: &DecisionLayout, mut f: impl FnMut(usize, usize, usize)) {
    for m in 0..layout.modes() {
        let c = layout.kind(m).contacts();
        for k in 0..layout.knots(m) {
            for i in 0..c {
                f(m, k, i);
            }
        }
    }
}

/// `|p_c - p_f| - L_max` per stance knot and contact.
pub fn leg_length(z: &[f64], layout: &DecisionLayout, cfg: &TransferabilityConfig) -> Vec<f64> {
    let mut out = Vec::new();
    for_each_stance_contact(layout, |m, k, i| {
        let p = layout.state(z, m, k).p;
        out.push((p - layout.foot(z, m, i)).norm() - cfg.l_max);
    });
    out
}

/// `psi - z_down . (p_f - p_c) / |p_f - p_c|` per stance knot and contact,
/// where `z_down` is the body's downward axis in the world frame.
pub fn leg_angle(z: &[f64], layout: &DecisionLayout, cfg: &TransferabilityConfig) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut err = None;
    for_each_stance_contact(layout, |m, k, i| {
        let s = layout.state(z, m, k);
        let leg = layout.foot(z, m, i) - s.p;
        let n = leg.norm();
        if n < 1e-12 {
            err.get_or_insert(Error::SingularGeometry(format!(
                "zero-length leg in mode {m} knot {k} contact {i}"
            )));
            return;
        }
        let down = s.q.rotate(&Vec3::new(0.0, 0.0, -1.0));
        out.push(cfg.psi - down.dot(&leg) / n);
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn leg_angle_guarded(z: &[f64], layout: &DecisionLayout, cfg: &TransferabilityConfig) -> Vec<f64> {
    let mut out = Vec::new();
    for_each_stance_contact(layout, |m, k, i| {
        let s = layout.state(z, m, k);
        let leg = layout.foot(z, m, i) - s.p;
        let n = leg.norm().max(1e-12);
        let down = s.q.rotate(&Vec3::new(0.0, 0.0, -1.0));
        out.push(cfg.psi - down.dot(&leg) / n);
    });
    out
}

/// Per stance knot and contact: `F_x^2 + F_y^2 - mu F_z^2` then `-F_z`.
pub fn friction_cone(z: &[f64], layout: &DecisionLayout, cfg: &TransferabilityConfig) -> Vec<f64> {
    let mut out = Vec::new();
    for_each_stance_contact(layout, |m, k, i| {
        let f = layout.grf(z, m, k, i);
        out.push(f.x * f.x + f.y * f.y - cfg.mu * f.z * f.z);
        out.push(-f.z);
    });
    out
}

/// `|F|^2 - F_max^2` per stance knot and contact.
pub fn max_force(z: &[f64], layout: &DecisionLayout, cfg: &TransferabilityConfig) -> Vec<f64> {
    let mut out = Vec::new();
    for_each_stance_contact(layout, |m, k, i| {
        let f = layout.grf(z, m, k, i);
        out.push(f.norm_squared() - cfg.f_max * cfg.f_max);
    });
    out
}

/// Finite-difference vertical force rate, two one-sided residuals per interval.
pub fn yank_bound(z: &[f64], layout: &DecisionLayout, cfg: &TransferabilityConfig) -> Vec<f64> {
    let mut out = Vec::new();
    for m in 0..layout.modes() {
        let c = layout.kind(m).contacts();
        if c == 0 {
            continue;
        }
        let n = layout.knots(m);
        let h = layout.duration(z, m) / (n - 1) as f64;
        for i in 0..c {
            for k in 0..n - 1 {
                let rate = (layout.grf(z, m, k + 1, i).z - layout.grf(z, m, k, i).z) / h;
                out.push(rate - cfg.fdot_max);
                out.push(-rate - cfg.fdot_max);
            }
        }
    }
    out
}

/// `|omega_i| - omega_max` for every knot and component.
pub fn omega_bound(z: &[f64], layout: &DecisionLayout, cfg: &TransferabilityConfig) -> Vec<f64> {
    let mut out = Vec::new();
    for m in 0..layout.modes() {
        for k in 0..layout.knots(m) {
            let w = layout.state(z, m, k).omega;
            out.extend(w.iter().map(|c| c.abs() - cfg.omega_max));
        }
    }
    out
}

/// Signed clearance residual of a foot against a line through `origin` with
/// direction `heading`: the foot must sit at least `delta` to its side.
pub fn halfplane_residual(origin: [f64; 2], heading: f64, side: Side, foot: [f64; 2], delta: f64) -> f64 {
    let left = [-heading.sin(), heading.cos()];
    let offset = left[0] * (foot[0] - origin[0]) + left[1] * (foot[1] - origin[1]);
    match side {
        Side::Left => delta - offset,
        Side::Right => offset + delta,
    }
}

/// Two half-plane residuals per stance mode and contact, from lines through the
/// CoM at the mode's first and last knots along the mode's nominal heading.
pub fn footstep_halfplanes(
    z: &[f64],
    layout: &DecisionLayout,
    cfg: &TransferabilityConfig,
    headings: &[f64],
    sides: &[Vec<Side>],
) -> Result<Vec<f64>> {
    if headings.len() != layout.modes() || sides.len() != layout.modes() {
        return Err(Error::InvalidSpec(
            "headings and stance sides must cover every mode".into(),
        ));
    }
    for m in 0..layout.modes() {
        if !headings[m].is_finite() {
            return Err(Error::InvalidSpec(format!("mode {m} has no usable heading")));
        }
        if sides[m].len() != layout.kind(m).contacts() {
            return Err(Error::InvalidSpec(format!(
                "mode {m} needs {} stance sides",
                layout.kind(m).contacts()
            )));
        }
    }
    Ok(halfplanes_raw(z, layout, cfg, headings, sides))
}

fn halfplanes_raw(
    z: &[f64],
    layout: &DecisionLayout,
    cfg: &TransferabilityConfig,
    headings: &[f64],
    sides: &[Vec<Side>],
) -> Vec<f64> {
    let mut out = Vec::new();
    for m in 0..layout.modes() {
        if layout.kind(m) == ModeKind::Flight {
            continue;
        }
        let a = layout.state(z, m, 0).p;
        let b = layout.state(z, m, layout.knots(m) - 1).p;
        for (i, side) in sides[m].iter().enumerate() {
            let f = layout.foot(z, m, i);
            for o in [a, b] {
                out.push(halfplane_residual([o.x, o.y], headings[m], *side, [f.x, f.y], cfg.delta_min));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maneuvers::ManeuverSpec;
    use crate::srbm::{Mat3, Quaternion, SrbmParams, SrbmState};
    use crate::transcription::{layout, HybridMode};
    use proptest::prelude::*;

    fn one_mode(kind: ModeKind, n: usize) -> (ManeuverSpec, DecisionLayout, Vec<f64>) {
        let params = SrbmParams::new(30.0, Mat3::identity(), 9.81).unwrap();
        let spec = ManeuverSpec::bare(vec![HybridMode::new(kind, n, 0.1, 0.5)], params);
        let lay = layout(&spec).unwrap();
        let mut z = vec![0.0; lay.total()];
        for k in 0..n {
            lay.set_state(&mut z, 0, k, &SrbmState { p: Vec3::new(0.0, 0.0, 0.8), ..Default::default() });
        }
        lay.set_duration(&mut z, 0, 0.1);
        (spec, lay, z)
    }

    fn cfg() -> TransferabilityConfig {
        TransferabilityConfig::default()
    }

    #[test]
    fn defaults_validate() {
        cfg().validate().unwrap();
        assert!(TransferabilityConfig { mu: 2.5, ..cfg() }.validate().is_err());
        assert!(TransferabilityConfig { psi: 0.0, ..cfg() }.validate().is_err());
        assert!(TransferabilityConfig { delta_min: -0.1, ..cfg() }.validate().is_err());
    }

    #[test]
    fn leg_length_examples() {
        let (_, lay, z) = one_mode(ModeKind::SingleStance, 2);
        let c = TransferabilityConfig { l_max: 1.0, ..cfg() };
        let r = leg_length(&z, &lay, &c);
        assert!(r.iter().all(|v| (v + 0.2).abs() < 1e-12));
        let c = TransferabilityConfig { l_max: 0.8, ..cfg() };
        assert!(leg_length(&z, &lay, &c).iter().all(|v| v.abs() < 1e-12));
        let (_, lay, z) = one_mode(ModeKind::Flight, 4);
        assert!(leg_length(&z, &lay, &c).is_empty());
    }

    #[test]
    fn leg_angle_examples() {
        let (_, lay, mut z) = one_mode(ModeKind::SingleStance, 2);
        let c = TransferabilityConfig { psi: 0.7, ..cfg() };
        let r = leg_angle(&z, &lay, &c).unwrap();
        assert!(r.iter().all(|v| (v + 0.3).abs() < 1e-12));

        // Leg 60 degrees from vertical.
        let len = 0.8 / 60f64.to_radians().cos();
        lay.set_foot(&mut z, 0, 0, &Vec3::new(len * 60f64.to_radians().sin(), 0.0, 0.0));
        let r = leg_angle(&z, &lay, &c).unwrap();
        assert!(r.iter().all(|v| (v - 0.2).abs() < 1e-12), "{r:?}");

        // Pitched body, foot straight below in world.
        let (_, lay, mut z) = one_mode(ModeKind::SingleStance, 2);
        for k in 0..2 {
            let mut s = lay.state(&z, 0, k);
            s.q = Quaternion::from_axis_angle(Vec3::y(), 30f64.to_radians());
            lay.set_state(&mut z, 0, k, &s);
        }
        let r = leg_angle(&z, &lay, &c).unwrap();
        assert!(r.iter().all(|v| (0.7 - v - 30f64.to_radians().cos()).abs() < 1e-12));
    }

    #[test]
    fn leg_angle_rejects_zero_leg() {
        let (_, lay, mut z) = one_mode(ModeKind::SingleStance, 2);
        lay.set_foot(&mut z, 0, 0, &Vec3::new(0.0, 0.0, 0.8));
        assert!(matches!(leg_angle(&z, &lay, &cfg()), Err(Error::SingularGeometry(_))));
    }

    #[test]
    fn friction_examples() {
        let (_, lay, mut z) = one_mode(ModeKind::SingleStance, 2);
        let c = TransferabilityConfig { mu: 1.0, ..cfg() };
        lay.set_grf(&mut z, 0, 0, 0, &Vec3::new(0.0, 0.0, 100.0));
        lay.set_grf(&mut z, 0, 1, 0, &Vec3::new(60.0, 80.0, 100.0));
        let r = friction_cone(&z, &lay, &c);
        assert_eq!(r, vec![-10000.0, -100.0, 0.0, -100.0]);
        lay.set_grf(&mut z, 0, 0, 0, &Vec3::new(0.0, 0.0, -1.0));
        assert_eq!(friction_cone(&z, &lay, &c)[1], 1.0);
    }

    #[test]
    fn max_force_examples() {
        let (_, lay, mut z) = one_mode(ModeKind::SingleStance, 2);
        let c = TransferabilityConfig { f_max: 5.0, ..cfg() };
        lay.set_grf(&mut z, 0, 0, 0, &Vec3::new(3.0, 4.0, 0.0));
        assert_eq!(max_force(&z, &lay, &c), vec![0.0, -25.0]);
    }

    #[test]
    fn yank_examples() {
        let (_, lay, mut z) = one_mode(ModeKind::SingleStance, 3);
        let c = TransferabilityConfig { fdot_max: 2500.0, ..cfg() };
        for k in 0..3 {
            lay.set_grf(&mut z, 0, k, 0, &Vec3::new(0.0, 0.0, 200.0));
        }
        assert_eq!(yank_bound(&z, &lay, &c), vec![-2500.0; 4]);

        lay.set_grf(&mut z, 0, 0, 0, &Vec3::new(0.0, 0.0, 0.0));
        lay.set_grf(&mut z, 0, 1, 0, &Vec3::new(0.0, 0.0, 100.0));
        lay.set_grf(&mut z, 0, 2, 0, &Vec3::new(0.0, 0.0, 0.0));
        // T = 0.1 over 2 intervals: h = 0.05, rate = 2000 N/s.
        let r = yank_bound(&z, &lay, &TransferabilityConfig { fdot_max: 2000.0, ..cfg() });
        assert!((r[0]).abs() < 1e-9 && (r[3]).abs() < 1e-9, "{r:?}");
        assert!(yank_bound(&z, &lay, &TransferabilityConfig { fdot_max: 1999.0, ..cfg() })
            .iter()
            .any(|v| *v > 0.0));
    }

    #[test]
    fn omega_examples() {
        let (_, lay, mut z) = one_mode(ModeKind::Flight, 2);
        let c = TransferabilityConfig { omega_max: 2.5, ..cfg() };
        assert_eq!(omega_bound(&z, &lay, &c), vec![-2.5; 6]);
        let mut s = lay.state(&z, 0, 0);
        s.omega = Vec3::new(1.0, -2.0, 3.0);
        lay.set_state(&mut z, 0, 0, &s);
        let r = omega_bound(&z, &lay, &c);
        assert_eq!(r.iter().filter(|v| **v > 0.0).count(), 1);
        assert_eq!(r[2], 0.5);
        s.omega = Vec3::new(2.5, 0.0, 0.0);
        lay.set_state(&mut z, 0, 1, &s);
        assert_eq!(omega_bound(&z, &lay, &c)[3], 0.0);
    }

    #[test]
    fn halfplane_examples() {
        let (_, lay, mut z) = one_mode(ModeKind::SingleStance, 2);
        for k in 0..2 {
            let mut s = lay.state(&z, 0, k);
            s.p = Vec3::new(0.0, 0.0, 0.8);
            lay.set_state(&mut z, 0, k, &s);
        }
        let c = TransferabilityConfig { delta_min: 0.1, ..cfg() };
        let sides = vec![vec![Side::Right]];
        lay.set_foot(&mut z, 0, 0, &Vec3::new(0.2, -0.15, 0.0));
        let r = footstep_halfplanes(&z, &lay, &c, &[0.0], &sides).unwrap();
        assert!(r.iter().all(|v| (v + 0.05).abs() < 1e-12), "{r:?}");
        lay.set_foot(&mut z, 0, 0, &Vec3::new(0.2, -0.1, 0.0));
        let r = footstep_halfplanes(&z, &lay, &c, &[0.0], &sides).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-15));
        lay.set_foot(&mut z, 0, 0, &Vec3::new(0.2, 0.05, 0.0));
        let r = footstep_halfplanes(&z, &lay, &c, &[0.0], &sides).unwrap();
        assert!(r.iter().all(|v| (v - 0.15).abs() < 1e-12));
        assert!(footstep_halfplanes(&z, &lay, &c, &[f64::NAN], &sides).is_err());
    }

    #[test]
    fn residual_lengths_match_counts() {
        let params = SrbmParams::new(30.0, Mat3::identity(), 9.81).unwrap();
        let spec = ManeuverSpec::bare(
            vec![
                HybridMode::new(ModeKind::DoubleStance, 4, 0.2, 0.5),
                HybridMode::new(ModeKind::Flight, 3, 0.1, 0.5),
                HybridMode::new(ModeKind::SingleStance, 5, 0.2, 0.5),
            ],
            params,
        );
        let lay = layout(&spec).unwrap();
        let z: Vec<f64> = (0..lay.total()).map(|i| 0.1 + (i as f64).sin()).collect();
        for kind in TransferKind::ALL {
            let mut out = vec![0.0; residual_len(kind, &spec, &lay)];
            residuals_into(kind, &z, &spec, &lay, &mut out);
        }
        assert_eq!(residual_len(TransferKind::FrictionCone, &spec, &lay), 2 * (8 + 5));
        assert_eq!(residual_len(TransferKind::Yank, &spec, &lay), 2 * (2 * 3 + 4));
        assert_eq!(residual_len(TransferKind::OmegaBound, &spec, &lay), 3 * 12);
        assert_eq!(residual_len(TransferKind::FootstepHalfplanes, &spec, &lay), 2 * 3);
    }

    proptest! {
        #[test]
        fn force_limits_are_rotation_invariant(fx in -300.0..300.0f64, fy in -300.0..300.0f64, fz in -50.0..600.0f64, ang in 0.0..6.3f64) {
            let (_, lay, mut z) = one_mode(ModeKind::SingleStance, 2);
            let (s, c) = ang.sin_cos();
            lay.set_grf(&mut z, 0, 0, 0, &Vec3::new(fx, fy, fz));
            lay.set_grf(&mut z, 0, 1, 0, &Vec3::new(c * fx - s * fy, s * fx + c * fy, fz));
            let f = friction_cone(&z, &lay, &cfg());
            let m = max_force(&z, &lay, &cfg());
            prop_assert!((f[0] - f[2]).abs() <= 1e-9 * (1.0 + f[0].abs()));
            prop_assert!((m[0] - m[1]).abs() <= 1e-9 * (1.0 + m[0].abs()));
        }

        #[test]
        fn halfplanes_are_translation_invariant(
            ax in -1.0..1.0f64, ay in -1.0..1.0f64, bx in -1.0..1.0f64, by in -1.0..1.0f64,
            fx in -1.0..1.0f64, fy in -1.0..1.0f64, dx in -50.0..50.0f64, dy in -50.0..50.0f64,
            heading in -3.0..3.0f64, left in any::<bool>()
        ) {
            let side = if left { Side::Left } else { Side::Right };
            for o in [[ax, ay], [bx, by]] {
                let r0 = halfplane_residual(o, heading, side, [fx, fy], 0.08);
                let r1 = halfplane_residual([o[0] + dx, o[1] + dy], heading, side, [fx + dx, fy + dy], 0.08);
                prop_assert!((r0 - r1).abs() < 1e-12);
            }
        }
    }
}
