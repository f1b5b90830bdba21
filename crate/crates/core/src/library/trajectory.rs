//! A solved maneuver: mode structure plus the decision vector, with sampling,
//! replay and columnar export.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::maneuvers::{ManeuverSpec, Side};
use crate::srbm::{quat_distance, rk4_rollout, Contact, SrbmParams, SrbmState, Vec3, STATE_DIM};
use crate::transcription::{DecisionLayout, HybridMode, ModeKind};

/// Column names of [`Trajectory::to_csv`].
pub const CSV_COLUMNS: [&str; 28] = [
    "time", "mode", "n_contacts", "p_x", "p_y", "p_z", "q_w", "q_x", "q_y", "q_z", "v_x", "v_y",
    "v_z", "omega_x", "omega_y", "omega_z", "grf_left_x", "grf_left_y", "grf_left_z",
    "foot_left_x", "foot_left_y", "foot_left_z", "grf_right_x", "grf_right_y", "grf_right_z",
    "foot_right_x", "foot_right_y", "foot_right_z",
];

fn slot(side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => 1,
    }
}

/// Distance between two states with positions scaled by `length`, velocities
/// by `sqrt(g length)` and angular rates by `sqrt(g / length)`; attitude
/// contributes its geodesic angle.
pub fn normalized_state_distance(a: &SrbmState, b: &SrbmState, gravity: f64, length: f64) -> f64 {
    let g = gravity.abs().max(1e-12);
    let dp = (a.p - b.p).norm() / length;
    let dq = quat_distance(&a.q, &b.q);
    let dv = (a.v - b.v).norm() / (g * length).sqrt();
    let dw = (a.omega - b.omega).norm() * (length / g).sqrt();
    (dp * dp + dq * dq + dv * dv + dw * dw).sqrt()
}

/// Reference values at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSample {
    pub time: f64,
    /// Position within the cycle, in `[0, 1)` when looping.
    pub phase: f64,
    /// Completed loops before `time`.
    pub cycle: usize,
    pub mode: usize,
    pub state: SrbmState,
    /// Body-frame angular momentum `J omega`.
    pub angular_momentum: Vec3,
    /// Left and right contact flags.
    pub in_contact: [bool; 2],
    /// Left and right ground reaction forces; zero when not in contact.
    pub grf: [Vec3; 2],
    /// Current stance position of each foot, or the nearest one in time when
    /// that foot is airborne.
    pub foot: [Vec3; 2],
}

/// Contact windows of one foot over a cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct StanceSchedule {
    pub period: f64,
    /// Closed `[start, end]` stance intervals per foot (left, right), merged.
    pub windows: [Vec<(f64, f64)>; 2],
}

impl StanceSchedule {
    pub fn in_contact(&self, foot: usize, t: f64) -> bool {
        let tau = t.rem_euclid(self.period);
        self.windows[foot].iter().any(|&(a, b)| tau >= a && tau < b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    modes: Vec<HybridMode>,
    sides: Vec<Option<Side>>,
    params: SrbmParams,
    z: Vec<f64>,
    layout: DecisionLayout,
}

impl Trajectory {
    pub fn new(
        modes: Vec<HybridMode>,
        sides: Vec<Option<Side>>,
        params: SrbmParams,
        z: Vec<f64>,
    ) -> Result<Self> {
        let layout = DecisionLayout::from_modes(&modes)?;
        if sides.len() != modes.len() {
            return Err(Error::Shape {
                expected: modes.len(),
                got: sides.len(),
            });
        }
        for (m, (mode, side)) in modes.iter().zip(&sides).enumerate() {
            if (mode.kind == ModeKind::SingleStance) != side.is_some() {
                return Err(Error::InvalidSpec(format!(
                    "mode {m}: a side is required for single stance and only there"
                )));
            }
        }
        if z.len() != layout.total() {
            return Err(Error::Shape {
                expected: layout.total(),
                got: z.len(),
            });
        }
        params.validate()?;
        Ok(Self {
            modes,
            sides,
            params,
            z,
            layout,
        })
    }

    pub fn from_spec(spec: &ManeuverSpec, z: Vec<f64>) -> Result<Self> {
        Self::new(spec.modes.clone(), spec.sides.clone(), spec.params.clone(), z)
    }

    pub fn modes(&self) -> &[HybridMode] {
        &self.modes
    }

    pub fn sides(&self) -> &[Option<Side>] {
        &self.sides
    }

    pub fn params(&self) -> &SrbmParams {
        &self.params
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn layout(&self) -> &DecisionLayout {
        &self.layout
    }

    /// True when both trajectories share modes, sides and vector length.
    pub fn same_structure(&self, other: &Trajectory) -> bool {
        self.modes.len() == other.modes.len()
            && self
                .modes
                .iter()
                .zip(&other.modes)
                .all(|(a, b)| a.kind == b.kind && a.knots == b.knots)
            && self.sides == other.sides
    }

    /// Sides of each contact slot of mode `m`, in layout order.
    pub fn contact_sides(&self, m: usize) -> Vec<Side> {
        match self.modes[m].kind {
            ModeKind::Flight => Vec::new(),
            ModeKind::SingleStance => vec![self.sides[m].unwrap_or(Side::Left)],
            ModeKind::DoubleStance => vec![Side::Left, Side::Right],
        }
    }

    pub fn duration(&self, m: usize) -> f64 {
        self.layout.duration(&self.z, m)
    }

    pub fn total_duration(&self) -> f64 {
        self.layout.total_duration(&self.z)
    }

    /// Start time of each mode.
    pub fn mode_starts(&self) -> Vec<f64> {
        let mut t = 0.0;
        (0..self.modes.len())
            .map(|m| {
                let s = t;
                t += self.duration(m);
                s
            })
            .collect()
    }

    pub fn knot_time(&self, m: usize, k: usize) -> f64 {
        let h = self.duration(m) / (self.modes[m].knots - 1) as f64;
        self.mode_starts()[m] + k as f64 * h
    }

    pub fn state(&self, m: usize, k: usize) -> SrbmState {
        self.layout.state(&self.z, m, k)
    }

    pub fn first_state(&self) -> SrbmState {
        self.state(0, 0)
    }

    pub fn last_state(&self) -> SrbmState {
        let m = self.modes.len() - 1;
        self.state(m, self.modes[m].knots - 1)
    }

    /// Foot position of `side` in mode `m`, if that foot is in contact there.
    pub fn foot(&self, m: usize, side: Side) -> Option<Vec3> {
        self.contact_sides(m)
            .iter()
            .position(|s| *s == side)
            .map(|c| self.layout.foot(&self.z, m, c))
    }

    /// Interval index and fraction for a local time inside mode `m`.
    fn locate_in_mode(&self, m: usize, local: f64) -> (usize, f64) {
        let n = self.modes[m].knots;
        let h = self.duration(m) / (n - 1) as f64;
        let u = (local / h).max(0.0);
        let k = (u.floor() as usize).min(n - 2);
        (k, (u - k as f64).min(1.0))
    }

    fn interp_state(&self, m: usize, k: usize, alpha: f64) -> SrbmState {
        let a = self.state(m, k);
        let b = self.state(m, k + 1);
        if alpha == 0.0 {
            return a;
        }
        if alpha == 1.0 {
            return b;
        }
        SrbmState {
            p: a.p.lerp(&b.p, alpha),
            q: a.q.slerp(&b.q, alpha),
            v: a.v.lerp(&b.v, alpha),
            omega: a.omega.lerp(&b.omega, alpha),
        }
    }

    fn interp_contacts(&self, m: usize, local: f64) -> Vec<Contact> {
        let (k, alpha) = self.locate_in_mode(m, local);
        (0..self.modes[m].kind.contacts())
            .map(|c| {
                let f0 = self.layout.grf(&self.z, m, k, c);
                let f1 = self.layout.grf(&self.z, m, k + 1, c);
                Contact::new(self.layout.foot(&self.z, m, c), f0.lerp(&f1, alpha))
            })
            .collect()
    }

    /// Nearest stance position of `side` as seen from mode `m`: current mode,
    /// then earlier modes, then later ones.
    fn reference_foot(&self, m: usize, side: Side, fallback: Vec3) -> Vec3 {
        let earlier = (0..=m).rev();
        let later = m + 1..self.modes.len();
        earlier
            .chain(later)
            .find_map(|i| self.foot(i, side))
            .unwrap_or(Vec3::new(fallback.x, fallback.y, 0.0))
    }

    /// Reference at time `t`. Without looping `t` must lie in `[0, T]`; with
    /// looping the cycle repeats and positions advance by the net horizontal
    /// displacement of one cycle per loop.
    pub fn sample(&self, t: f64, looping: bool) -> Result<ReferenceSample> {
        let period = self.total_duration();
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Range(format!("sample time must be finite and >= 0, got {t}")));
        }
        let (cycle, tau) = if looping {
            let mut c = (t / period).floor();
            let mut tau = t - c * period;
            if tau >= period {
                tau -= period;
                c += 1.0;
            }
            (c as usize, tau.max(0.0))
        } else {
            if t > period * (1.0 + 1e-12) {
                return Err(Error::Range(format!(
                    "sample time {t} beyond trajectory duration {period}"
                )));
            }
            (0, t.min(period))
        };

        let starts = self.mode_starts();
        let m = starts.iter().rposition(|s| *s <= tau).unwrap_or(0);
        let (k, alpha) = self.locate_in_mode(m, tau - starts[m]);
        let mut state = self.interp_state(m, k, alpha);

        let shift = if cycle > 0 {
            let d = self.last_state().p - self.first_state().p;
            Vec3::new(d.x, d.y, 0.0) * cycle as f64
        } else {
            Vec3::zeros()
        };
        state.p += shift;

        let contacts = self.interp_contacts(m, tau - starts[m]);
        let mut in_contact = [false; 2];
        let mut grf = [Vec3::zeros(); 2];
        for (c, side) in self.contact_sides(m).into_iter().enumerate() {
            in_contact[slot(side)] = true;
            grf[slot(side)] = contacts[c].force;
        }
        let com = state.p - shift;
        let foot = [Side::Left, Side::Right].map(|s| self.reference_foot(m, s, com) + shift);

        Ok(ReferenceSample {
            time: t,
            phase: tau / period,
            cycle,
            mode: m,
            angular_momentum: self.params.inertia * state.omega,
            state,
            in_contact,
            grf,
            foot,
        })
    }

    /// Stance windows of both feet over one cycle.
    pub fn stance_schedule(&self) -> StanceSchedule {
        let starts = self.mode_starts();
        let mut windows: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
        for m in 0..self.modes.len() {
            let (a, b) = (starts[m], starts[m] + self.duration(m));
            for side in self.contact_sides(m) {
                let w = &mut windows[slot(side)];
                match w.last_mut() {
                    Some(last) if (last.1 - a).abs() <= 1e-12 => last.1 = b,
                    _ => w.push((a, b)),
                }
            }
        }
        StanceSchedule {
            period: self.total_duration(),
            windows,
        }
    }

    /// Forward-integrate the SRBM from the first knot with the knot forces
    /// interpolated linearly and feet held per mode. Returns the state at the
    /// end of every mode.
    pub fn rollout(&self, dt: f64) -> Result<Vec<SrbmState>> {
        let mut x = self.first_state();
        let mut ends = Vec::with_capacity(self.modes.len());
        for m in 0..self.modes.len() {
            let dur = self.duration(m);
            let schedule = |local: f64| self.interp_contacts(m, local);
            let states = rk4_rollout(&x, &schedule, &self.params, dur, dt.min(dur))?;
            x = *states.last().expect("rollout returns at least the initial state");
            ends.push(x);
        }
        Ok(ends)
    }

    /// Normalized distance between the replayed final state and the last knot.
    pub fn rollout_error(&self, dt: f64, length_scale: f64) -> Result<f64> {
        let end = *self.rollout(dt)?.last().expect("at least one mode");
        Ok(normalized_state_distance(
            &end,
            &self.last_state(),
            self.params.gravity,
            length_scale,
        ))
    }

    /// One row per knot (boundary knots appear in both adjacent modes), with
    /// the columns of [`CSV_COLUMNS`]. Slots of feet not in contact are zero.
    pub fn to_csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        for m in 0..self.modes.len() {
            let sides = self.contact_sides(m);
            for k in 0..self.modes[m].knots {
                let mut row = [0.0; 28];
                row[0] = self.knot_time(m, k);
                row[3..3 + STATE_DIM].copy_from_slice(&self.state(m, k).to_array());
                for (c, side) in sides.iter().enumerate() {
                    let base = 16 + 6 * slot(*side);
                    let f = self.layout.grf(&self.z, m, k, c);
                    let p = self.layout.foot(&self.z, m, c);
                    row[base..base + 3].copy_from_slice(f.as_slice());
                    row[base + 3..base + 6].copy_from_slice(p.as_slice());
                }
                let _ = write!(out, "{:.16e},{},{}", row[0], m, sides.len());
                for v in &row[3..] {
                    let _ = write!(out, ",{v:.16e}");
                }
                out.push('\n');
            }
        }
        out
    }

    /// Rebuild a trajectory from [`Trajectory::to_csv`] output using the mode
    /// structure of `spec`. Durations come from the knot times.
    pub fn from_csv(spec: &ManeuverSpec, text: &str) -> Result<Self> {
        let layout = spec.layout()?;
        let sides_of = spec.contact_sides();
        let mut z = vec![0.0; layout.total()];
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
        if header.is_empty() {
            return Err(Error::Parse {
                line: 1,
                msg: "missing section `header`".into(),
            });
        }
        if header.iter().ne(CSV_COLUMNS.iter().copied()) {
            return Err(Error::Parse {
                line: 1,
                msg: "unexpected header".into(),
            });
        }
        let mut records = reader.records();
        let eof_line = text.lines().count() + 1;
        for m in 0..layout.modes() {
            let n = layout.knots(m);
            let mut t0 = 0.0;
            for k in 0..n {
                let record = records.next().ok_or_else(|| Error::Parse {
                    line: eof_line,
                    msg: format!("missing section `mode {m} knot {k}`"),
                })?;
                let record = record.map_err(|e| Error::Parse {
                    line: e.position().map(|p| p.line() as usize).unwrap_or(eof_line),
                    msg: e.to_string(),
                })?;
                let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
                let err = |msg: String| Error::Parse { line, msg };
                let mut row = [0.0; 28];
                for (c, cell) in record.iter().enumerate() {
                    row[c] = cell
                        .parse()
                        .map_err(|_| err(format!("bad value `{cell}` in column `{}`", CSV_COLUMNS[c])))?;
                }
                if row[1] != m as f64 {
                    return Err(err(format!("expected mode {m}, found {}", &record[1])));
                }
                if k == 0 {
                    t0 = row[0];
                }
                if k == n - 1 {
                    layout.set_duration(&mut z, m, row[0] - t0);
                }
                layout.set_state(&mut z, m, k, &SrbmState::from_slice(&row[3..3 + STATE_DIM]));
                for (c, side) in sides_of[m].iter().enumerate() {
                    let base = 16 + 6 * slot(*side);
                    layout.set_grf(&mut z, m, k, c, &Vec3::from_column_slice(&row[base..base + 3]));
                    if k == 0 {
                        layout.set_foot(&mut z, m, c, &Vec3::from_column_slice(&row[base + 3..base + 6]));
                    }
                }
            }
        }
        if let Some(extra) = records.next() {
            let line = extra.ok().and_then(|r| r.position().map(|p| p.line() as usize)).unwrap_or(eof_line);
            return Err(Error::Parse {
                line,
                msg: "more rows than knots".into(),
            });
        }
        Self::from_spec(spec, z)
    }
}
