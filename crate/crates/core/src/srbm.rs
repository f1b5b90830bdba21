//! Single rigid-body model: quaternion kinematics, contact wrench, state
//! derivative and an RK4 rollout used to cross-check collocation solutions.
//!
//! Quaternions are scalar-first `(w, x, y, z)` with the Hamilton product and
//! rotate body-frame vectors into the world frame. Angular velocity is
//! expressed in the body frame. State vectors are packed as
//! `[p_c (3), q (4), v_c (3), omega (3)]`.

use std::ops::{Mul, Neg};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Packed state dimension.
pub const STATE_DIM: usize = 13;

/// Quaternion norm deviation tolerated by the checked entry points.
pub const UNIT_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::identity()
    }
}

impl Quaternion {
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    /// Rotation of `angle` radians about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        let (s, c) = (0.5 * angle).sin_cos();
        let a = axis / n;
        Self::new(c, s * a.x, s * a.y, s * a.z)
    }

    /// Pure rotation about world z.
    pub fn from_yaw(yaw: f64) -> Self {
        Self::from_axis_angle(Vec3::z(), yaw)
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self::new(s[0], s[1], s[2], s[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// Body-to-world rotation matrix. Exact for unit quaternions; for the
    /// slightly non-unit iterates seen inside the optimizer it is the usual
    /// polynomial extension.
    pub fn rotation_matrix(&self) -> Mat3 {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Rotate a body-frame vector into the world frame.
    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.rotation_matrix() * v
    }

    /// Heading of the body x axis projected onto the world xy plane.
    pub fn yaw(&self) -> f64 {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z))
    }

    /// Spherical linear interpolation along the shorter arc.
    pub fn slerp(&self, other: &Self, t: f64) -> Self {
        let mut b = *other;
        let mut d = self.dot(other);
        if d < 0.0 {
            b = -b;
            d = -d;
        }
        if d > 1.0 - 1e-12 {
            let q = Self::new(
                self.w + t * (b.w - self.w),
                self.x + t * (b.x - self.x),
                self.y + t * (b.y - self.y),
                self.z + t * (b.z - self.z),
            );
            return q.normalized();
        }
        let theta = d.acos();
        let s = theta.sin();
        let wa = ((1.0 - t) * theta).sin() / s;
        let wb = (t * theta).sin() / s;
        Self::new(
            wa * self.w + wb * b.w,
            wa * self.x + wb * b.x,
            wa * self.y + wb * b.y,
            wa * self.z + wb * b.z,
        )
        .normalized()
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, r: Quaternion) -> Quaternion {
        let l = self;
        Quaternion::new(
            l.w * r.w - l.x * r.x - l.y * r.y - l.z * r.z,
            l.w * r.x + l.x * r.w + l.y * r.z - l.z * r.y,
            l.w * r.y - l.x * r.z + l.y * r.w + l.z * r.x,
            l.w * r.z + l.x * r.y - l.y * r.x + l.z * r.w,
        )
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

/// `½ q ⊗ [0, ω]` with ω in the body frame.
pub fn quat_derivative(q: &Quaternion, omega: &Vec3) -> [f64; 4] {
    let w = *q * Quaternion::new(0.0, omega.x, omega.y, omega.z);
    [0.5 * w.w, 0.5 * w.x, 0.5 * w.y, 0.5 * w.z]
}

/// Geodesic rotation angle between two attitudes, in `[0, π]`. Invariant
/// under the sign of either argument.
///
/// Equal to `2 acos(|<a, b>|)` for unit inputs; the atan2 form stays accurate
/// near zero and ignores a common scale on either argument.
pub fn quat_distance(a: &Quaternion, b: &Quaternion) -> f64 {
    // Components of conj(a) * b, grouped so that equal inputs cancel exactly.
    let (av, bv) = (a.vector(), b.vector());
    let w = a.w * b.w + av.dot(&bv);
    let v = (bv * a.w - av * b.w) - av.cross(&bv);
    2.0 * v.norm().atan2(w.abs())
}

/// Reflect an attitude across the body x-z (sagittal) plane: pitch is kept,
/// roll and yaw change sign.
pub fn mirror_sagittal(q: &Quaternion) -> Quaternion {
    Quaternion::new(q.w, -q.x, q.y, -q.z)
}

/// Mass properties of the rigid body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrbmParams {
    pub mass: f64,
    pub inertia: Mat3,
    pub gravity: f64,
}

impl SrbmParams {
    pub fn new(mass: f64, inertia: Mat3, gravity: f64) -> Result<Self> {
        let p = Self {
            mass,
            inertia,
            gravity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        if !self.gravity.is_finite() {
            return Err(Error::InvalidParams("gravity must be finite".into()));
        }
        let j = &self.inertia;
        if (j - j.transpose()).abs().max() > 1e-12 {
            return Err(Error::InvalidParams("inertia must be symmetric".into()));
        }
        let eig = j.symmetric_eigenvalues();
        if eig.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::InvalidParams(
                "inertia must be positive definite".into(),
            ));
        }
        Ok(())
    }

    pub fn inertia_inverse(&self) -> Result<Mat3> {
        self.inertia
            .try_inverse()
            .ok_or_else(|| Error::InvalidParams("inertia matrix is singular".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrbmState {
    pub p: Vec3,
    pub q: Quaternion,
    pub v: Vec3,
    pub omega: Vec3,
}

impl Default for SrbmState {
    fn default() -> Self {
        Self {
            p: Vec3::zeros(),
            q: Quaternion::identity(),
            v: Vec3::zeros(),
            omega: Vec3::zeros(),
        }
    }
}

impl SrbmState {
    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            p: Vec3::new(s[0], s[1], s[2]),
            q: Quaternion::from_slice(&s[3..7]),
            v: Vec3::new(s[7], s[8], s[9]),
            omega: Vec3::new(s[10], s[11], s[12]),
        }
    }

    pub fn to_array(&self) -> [f64; STATE_DIM] {
        [
            self.p.x, self.p.y, self.p.z, self.q.w, self.q.x, self.q.y, self.q.z, self.v.x,
            self.v.y, self.v.z, self.omega.x, self.omega.y, self.omega.z,
        ]
    }

    pub fn check(&self) -> Result<()> {
        if !self.to_array().iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidState("non-finite state component".into()));
        }
        if !self.q.is_unit(UNIT_NORM_TOL) {
            return Err(Error::InvalidState(format!(
                "quaternion norm {} is not unit",
                self.q.norm()
            )));
        }
        Ok(())
    }

    /// World-frame angular momentum `R(q) J ω`.
    pub fn angular_momentum_world(&self, params: &SrbmParams) -> Vec3 {
        self.q.rotate(&(params.inertia * self.omega))
    }

    /// Gravitational plus kinetic energy.
    pub fn mechanical_energy(&self, params: &SrbmParams) -> f64 {
        params.mass * params.gravity * self.p.z
            + 0.5 * params.mass * self.v.norm_squared()
            + 0.5 * self.omega.dot(&(params.inertia * self.omega))
    }
}

/// One active foot contact: world foot position and world ground reaction force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub foot: Vec3,
    pub force: Vec3,
}

impl Contact {
    pub fn new(foot: Vec3, force: Vec3) -> Self {
        Self { foot, force }
    }
}

/// Contact force sum (world) and contact torque about the CoM (body frame).
/// Gravity is not included.
pub fn body_wrench(state: &SrbmState, contacts: &[Contact]) -> Result<(Vec3, Vec3)> {
    state.check()?;
    Ok(wrench_raw(&state.p, &state.q, contacts))
}

pub(crate) fn wrench_raw(p: &Vec3, q: &Quaternion, contacts: &[Contact]) -> (Vec3, Vec3) {
    let mut force = Vec3::zeros();
    let mut torque_world = Vec3::zeros();
    for c in contacts {
        force += c.force;
        torque_world += (c.foot - p).cross(&c.force);
    }
    let torque_body = q.rotation_matrix().transpose() * torque_world;
    (force, torque_body)
}

/// Full 13-component state derivative.
pub fn dynamics(
    state: &SrbmState,
    contacts: &[Contact],
    params: &SrbmParams,
) -> Result<[f64; STATE_DIM]> {
    state.check()?;
    let j_inv = params.inertia_inverse()?;
    Ok(dynamics_raw(state, contacts, params, &j_inv))
}

/// Unchecked derivative; the quaternion may be off the unit sphere.
pub(crate) fn dynamics_raw(
    state: &SrbmState,
    contacts: &[Contact],
    params: &SrbmParams,
    inertia_inv: &Mat3,
) -> [f64; STATE_DIM] {
    let (force, torque) = wrench_raw(&state.p, &state.q, contacts);
    let qd = quat_derivative(&state.q, &state.omega);
    let acc = force / params.mass - Vec3::new(0.0, 0.0, params.gravity);
    let jw = params.inertia * state.omega;
    let alpha = inertia_inv * (torque - state.omega.cross(&jw));
    [
        state.v.x, state.v.y, state.v.z, qd[0], qd[1], qd[2], qd[3], acc.x, acc.y, acc.z,
        alpha.x, alpha.y, alpha.z,
    ]
}

/// Contacts applied as a function of time during a rollout.
pub trait ContactSchedule {
    fn contacts_at(&self, t: f64) -> Vec<Contact>;
}

impl<F> ContactSchedule for F
where
    F: Fn(f64) -> Vec<Contact>,
{
    fn contacts_at(&self, t: f64) -> Vec<Contact> {
        self(t)
    }
}

/// Schedule with no contacts.
pub struct Ballistic;

impl ContactSchedule for Ballistic {
    fn contacts_at(&self, _t: f64) -> Vec<Contact> {
        Vec::new()
    }
}

fn axpy(x: &[f64; STATE_DIM], a: f64, d: &[f64; STATE_DIM]) -> SrbmState {
    let mut out = [0.0; STATE_DIM];
    for i in 0..STATE_DIM {
        out[i] = x[i] + a * d[i];
    }
    SrbmState::from_slice(&out)
}

/// Classic RK4 integration with quaternion renormalization after every step.
/// Returns the initial state followed by the state after each step; the last
/// step is shortened so the final sample lands exactly on `duration`.
pub fn rk4_rollout<S: ContactSchedule + ?Sized>(
    initial: &SrbmState,
    schedule: &S,
    params: &SrbmParams,
    duration: f64,
    dt: f64,
) -> Result<Vec<SrbmState>> {
    if !(dt > 0.0) {
        return Err(Error::Usage(format!("dt must be positive, got {dt}")));
    }
    if !(duration >= dt) {
        return Err(Error::Usage(format!(
            "duration {duration} must be at least dt {dt}"
        )));
    }
    initial.check()?;
    params.validate()?;
    let j_inv = params.inertia_inverse()?;

    let full_steps = (duration / dt + 1e-9).floor() as usize;
    let remainder = duration - full_steps as f64 * dt;
    let mut steps: Vec<f64> = vec![dt; full_steps];
    if remainder > 1e-12 * dt.max(1.0) {
        steps.push(remainder);
    }

    let mut out = Vec::with_capacity(steps.len() + 1);
    out.push(*initial);
    let mut x = *initial;
    let mut t = 0.0;
    for (k, &h) in steps.iter().enumerate() {
        let f = |s: &SrbmState, tt: f64| dynamics_raw(s, &schedule.contacts_at(tt), params, &j_inv);
        let x0 = x.to_array();
        let k1 = f(&x, t);
        let k2 = f(&axpy(&x0, 0.5 * h, &k1), t + 0.5 * h);
        let k3 = f(&axpy(&x0, 0.5 * h, &k2), t + 0.5 * h);
        let k4 = f(&axpy(&x0, h, &k3), t + h);
        let mut next = [0.0; STATE_DIM];
        for i in 0..STATE_DIM {
            next[i] = x0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: k });
        }
        x = SrbmState::from_slice(&next);
        x.q = x.q.normalized();
        t += h;
        out.push(x);
    }
    Ok(out)
}
