//! Direct-collocation transcription of a maneuver into a flat NLP.
//!
//! Each hybrid mode owns a contiguous block of the decision vector:
//!
//! ```text
//! [knot 0: state(13) grf(3c)] ... [knot N-1: state(13) grf(3c)] [duration] [feet(3c)]
//! ```
//!
//! where `c` is the mode's contact count. Dynamics are enforced with the
//! trapezoidal rule on a uniform grid `h = T / (N - 1)`, with the duration `T`
//! itself a decision variable.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constraints::{self, TransferKind};
use crate::error::{Error, Result};
use crate::maneuvers::ManeuverSpec;
use crate::srbm::{
    dynamics_raw, quat_derivative, wrench_raw, Contact, Quaternion, SrbmState, Vec3, STATE_DIM,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeKind {
    Flight,
    SingleStance,
    DoubleStance,
}

impl ModeKind {
    pub fn contacts(self) -> usize {
        match self {
            ModeKind::Flight => 0,
            ModeKind::SingleStance => 1,
            ModeKind::DoubleStance => 2,
        }
    }

    pub fn is_stance(self) -> bool {
        self.contacts() > 0
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModeKind::Flight => "flight",
            ModeKind::SingleStance => "single_stance",
            ModeKind::DoubleStance => "double_stance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "flight" => Some(ModeKind::Flight),
            "single_stance" => Some(ModeKind::SingleStance),
            "double_stance" => Some(ModeKind::DoubleStance),
            _ => None,
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridMode {
    pub kind: ModeKind,
    pub knots: usize,
    pub t_min: f64,
    pub t_max: f64,
}

impl HybridMode {
    pub fn new(kind: ModeKind, knots: usize, t_min: f64, t_max: f64) -> Self {
        Self {
            kind,
            knots,
            t_min,
            t_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.knots < 2 {
            return Err(Error::InvalidSpec(format!(
                "mode needs at least 2 knots, got {}",
                self.knots
            )));
        }
        if !(self.t_min > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "t_min must be positive, got {}",
                self.t_min
            )));
        }
        if !(self.t_max >= self.t_min) {
            return Err(Error::InvalidSpec(format!(
                "t_min {} exceeds t_max {}",
                self.t_min, self.t_max
            )));
        }
        Ok(())
    }

    /// Decision variables owned by this mode.
    pub fn block_len(&self) -> usize {
        let c = self.kind.contacts();
        self.knots * (STATE_DIM + 3 * c) + 1 + 3 * c
    }
}

/// Selects the first or last collocation point of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KnotRef {
    First,
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeBlock {
    pub kind: ModeKind,
    pub knots: usize,
    pub offset: usize,
}

impl ModeBlock {
    fn stride(&self) -> usize {
        STATE_DIM + 3 * self.kind.contacts()
    }
}

/// A named slot inside a mode block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    State { knot: usize, component: usize },
    Grf { knot: usize, contact: usize, axis: usize },
    Duration,
    Foot { contact: usize, axis: usize },
}

/// Index map from `(mode, field)` to decision-vector positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionLayout {
    blocks: Vec<ModeBlock>,
    total: usize,
}

impl DecisionLayout {
    pub fn from_modes(modes: &[HybridMode]) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidSpec("maneuver has no modes".into()));
        }
        let mut blocks = Vec::with_capacity(modes.len());
        let mut offset = 0;
        for m in modes {
            if m.knots < 2 {
                return Err(Error::InvalidSpec(format!(
                    "mode needs at least 2 knots, got {}",
                    m.knots
                )));
            }
            blocks.push(ModeBlock {
                kind: m.kind,
                knots: m.knots,
                offset,
            });
            offset += m.block_len();
        }
        Ok(Self {
            blocks,
            total: offset,
        })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn modes(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, mode: usize) -> &ModeBlock {
        &self.blocks[mode]
    }

    pub fn blocks(&self) -> &[ModeBlock] {
        &self.blocks
    }

    pub fn knots(&self, mode: usize) -> usize {
        self.blocks[mode].knots
    }

    pub fn kind(&self, mode: usize) -> ModeKind {
        self.blocks[mode].kind
    }

    pub fn knot_index(&self, mode: usize, knot: KnotRef) -> usize {
        match knot {
            KnotRef::First => 0,
            KnotRef::Last => self.blocks[mode].knots - 1,
        }
    }

    pub fn index(&self, mode: usize, field: Field) -> usize {
        let b = &self.blocks[mode];
        let c = b.kind.contacts();
        match field {
            Field::State { knot, component } => {
                debug_assert!(knot < b.knots && component < STATE_DIM);
                b.offset + knot * b.stride() + component
            }
            Field::Grf {
                knot,
                contact,
                axis,
            } => {
                debug_assert!(knot < b.knots && contact < c && axis < 3);
                b.offset + knot * b.stride() + STATE_DIM + 3 * contact + axis
            }
            Field::Duration => b.offset + b.knots * b.stride(),
            Field::Foot { contact, axis } => {
                debug_assert!(contact < c && axis < 3);
                b.offset + b.knots * b.stride() + 1 + 3 * contact + axis
            }
        }
    }

    pub fn state_index(&self, mode: usize, knot: usize, component: usize) -> usize {
        self.index(mode, Field::State { knot, component })
    }

    pub fn duration_index(&self, mode: usize) -> usize {
        self.index(mode, Field::Duration)
    }

    pub fn state(&self, z: &[f64], mode: usize, knot: usize) -> SrbmState {
        let i = self.state_index(mode, knot, 0);
        SrbmState::from_slice(&z[i..i + STATE_DIM])
    }

    pub fn set_state(&self, z: &mut [f64], mode: usize, knot: usize, s: &SrbmState) {
        let i = self.state_index(mode, knot, 0);
        z[i..i + STATE_DIM].copy_from_slice(&s.to_array());
    }

    pub fn quaternion(&self, z: &[f64], mode: usize, knot: usize) -> Quaternion {
        let i = self.state_index(mode, knot, 3);
        Quaternion::from_slice(&z[i..i + 4])
    }

    pub fn grf(&self, z: &[f64], mode: usize, knot: usize, contact: usize) -> Vec3 {
        let i = self.index(
            mode,
            Field::Grf {
                knot,
                contact,
                axis: 0,
            },
        );
        Vec3::new(z[i], z[i + 1], z[i + 2])
    }

    pub fn set_grf(&self, z: &mut [f64], mode: usize, knot: usize, contact: usize, f: &Vec3) {
        let i = self.index(
            mode,
            Field::Grf {
                knot,
                contact,
                axis: 0,
            },
        );
        z[i..i + 3].copy_from_slice(f.as_slice());
    }

    pub fn foot(&self, z: &[f64], mode: usize, contact: usize) -> Vec3 {
        let i = self.index(mode, Field::Foot { contact, axis: 0 });
        Vec3::new(z[i], z[i + 1], z[i + 2])
    }

    pub fn set_foot(&self, z: &mut [f64], mode: usize, contact: usize, p: &Vec3) {
        let i = self.index(mode, Field::Foot { contact, axis: 0 });
        z[i..i + 3].copy_from_slice(p.as_slice());
    }

    pub fn duration(&self, z: &[f64], mode: usize) -> f64 {
        z[self.duration_index(mode)]
    }

    pub fn set_duration(&self, z: &mut [f64], mode: usize, t: f64) {
        let i = self.duration_index(mode);
        z[i] = t;
    }

    /// Active contacts (foot, force) at a knot.
    pub fn contacts(&self, z: &[f64], mode: usize, knot: usize) -> Vec<Contact> {
        (0..self.kind(mode).contacts())
            .map(|c| Contact::new(self.foot(z, mode, c), self.grf(z, mode, knot, c)))
            .collect()
    }

    /// Sum of all mode durations.
    pub fn total_duration(&self, z: &[f64]) -> f64 {
        (0..self.modes()).map(|m| self.duration(z, m)).sum()
    }

    /// Human-readable variable name for diagnostics.
    pub fn variable_name(&self, index: usize) -> String {
        const STATE_NAMES: [&str; STATE_DIM] = [
            "p_x", "p_y", "p_z", "q_w", "q_x", "q_y", "q_z", "v_x", "v_y", "v_z", "omega_x",
            "omega_y", "omega_z",
        ];
        const AXES: [&str; 3] = ["x", "y", "z"];
        for (m, b) in self.blocks.iter().enumerate() {
            let len = b.knots * b.stride() + 1 + 3 * b.kind.contacts();
            if index < b.offset || index >= b.offset + len {
                continue;
            }
            let local = index - b.offset;
            let knot_part = b.knots * b.stride();
            if local < knot_part {
                let knot = local / b.stride();
                let r = local % b.stride();
                if r < STATE_DIM {
                    return format!("mode{m}.knot{knot}.{}", STATE_NAMES[r]);
                }
                let r = r - STATE_DIM;
                return format!("mode{m}.knot{knot}.grf{}_{}", r / 3, AXES[r % 3]);
            }
            if local == knot_part {
                return format!("mode{m}.duration");
            }
            let r = local - knot_part - 1;
            return format!("mode{m}.foot{}_{}", r / 3, AXES[r % 3]);
        }
        format!("z[{index}]")
    }
}

/// Decision layout of a maneuver.
pub fn layout(spec: &ManeuverSpec) -> Result<DecisionLayout> {
    DecisionLayout::from_modes(&spec.modes)
}

fn check_len(z: &[f64], layout: &DecisionLayout) -> Result<()> {
    if z.len() != layout.total() {
        return Err(Error::Shape {
            expected: layout.total(),
            got: z.len(),
        });
    }
    Ok(())
}

/// Number of defect plus unit-norm residuals.
pub fn defect_len(layout: &DecisionLayout) -> usize {
    layout
        .blocks()
        .iter()
        .map(|b| (b.knots - 1) * STATE_DIM + b.knots)
        .sum()
}

/// Trapezoidal dynamics defects followed by per-knot `|q|^2 - 1`, mode by mode.
pub fn dynamics_defects(z: &[f64], spec: &ManeuverSpec) -> Result<Vec<f64>> {
    let lay = layout(spec)?;
    check_len(z, &lay)?;
    let j_inv = spec.params.inertia_inverse()?;
    let mut out = vec![0.0; defect_len(&lay)];
    defects_into(z, spec, &lay, &j_inv, &mut out);
    Ok(out)
}

pub(crate) fn defects_into(
    z: &[f64],
    spec: &ManeuverSpec,
    lay: &DecisionLayout,
    j_inv: &crate::srbm::Mat3,
    out: &mut [f64],
) {
    let mut r = 0;
    for m in 0..lay.modes() {
        let n = lay.knots(m);
        let h = lay.duration(z, m) / (n - 1) as f64;
        let mut prev_x = lay.state(z, m, 0);
        let mut prev_f = dynamics_raw(&prev_x, &lay.contacts(z, m, 0), &spec.params, j_inv);
        for k in 0..n - 1 {
            let next_x = lay.state(z, m, k + 1);
            let next_f = dynamics_raw(&next_x, &lay.contacts(z, m, k + 1), &spec.params, j_inv);
            let a = prev_x.to_array();
            let b = next_x.to_array();
            for i in 0..STATE_DIM {
                out[r + i] = b[i] - a[i] - 0.5 * h * (prev_f[i] + next_f[i]);
            }
            // Attitude rows use the interval-mean body rate at both ends, which
            // keeps |q| invariant so the per-knot norm rows stay consistent.
            let w_mean = 0.5 * (prev_x.omega + next_x.omega);
            let qa = quat_derivative(&prev_x.q, &w_mean);
            let qb = quat_derivative(&next_x.q, &w_mean);
            for i in 0..4 {
                out[r + 3 + i] = b[3 + i] - a[3 + i] - 0.5 * h * (qa[i] + qb[i]);
            }
            r += STATE_DIM;
            prev_x = next_x;
            prev_f = next_f;
        }
        for k in 0..n {
            let q = lay.quaternion(z, m, k);
            out[r] = q.dot(&q) - 1.0;
            r += 1;
        }
    }
    debug_assert_eq!(r, out.len());
}

/// Full-state continuity between the last knot of each mode and the first
/// knot of the next.
pub fn linking_constraints(z: &[f64], spec: &ManeuverSpec) -> Result<Vec<f64>> {
    let lay = layout(spec)?;
    check_len(z, &lay)?;
    let mut out = vec![0.0; linking_len(&lay)];
    linking_into(z, &lay, &mut out);
    Ok(out)
}

pub fn linking_len(layout: &DecisionLayout) -> usize {
    (layout.modes() - 1) * STATE_DIM
}

pub(crate) fn linking_into(z: &[f64], lay: &DecisionLayout, out: &mut [f64]) {
    let mut r = 0;
    for m in 0..lay.modes() - 1 {
        let a = lay.state_index(m, lay.knots(m) - 1, 0);
        let b = lay.state_index(m + 1, 0, 0);
        for i in 0..STATE_DIM {
            out[r] = z[b + i] - z[a + i];
            r += 1;
        }
    }
}

/// Trapezoidal integral of `sum |F_i|^2 + |tau_B|^2` over the maneuver.
pub fn objective(z: &[f64], spec: &ManeuverSpec) -> Result<f64> {
    let lay = layout(spec)?;
    check_len(z, &lay)?;
    let mut r = vec![0.0; objective_residual_len(&lay)];
    objective_residuals_into(z, &lay, &mut r);
    Ok(r.iter().map(|v| v * v).sum())
}

/// Length of the least-squares form of the objective.
pub fn objective_residual_len(layout: &DecisionLayout) -> usize {
    layout
        .blocks()
        .iter()
        .filter(|b| b.kind.is_stance())
        .map(|b| b.knots * (3 * b.kind.contacts() + 3))
        .sum()
}

/// Residuals whose squares sum to the objective: `sqrt(w_k) * [F_1.., tau_B]`
/// with trapezoid weights `w_k`.
pub(crate) fn objective_residuals_into(z: &[f64], lay: &DecisionLayout, out: &mut [f64]) {
    let mut r = 0;
    for m in 0..lay.modes() {
        let kind = lay.kind(m);
        if !kind.is_stance() {
            continue;
        }
        let n = lay.knots(m);
        let h = lay.duration(z, m) / (n - 1) as f64;
        for k in 0..n {
            let w = if k == 0 || k == n - 1 { 0.5 * h } else { h };
            let s = w.max(0.0).sqrt();
            let contacts = lay.contacts(z, m, k);
            let p = lay.state(z, m, k);
            let (_, tau) = wrench_raw(&p.p, &p.q, &contacts);
            for c in &contacts {
                for a in 0..3 {
                    out[r] = s * c.force[a];
                    r += 1;
                }
            }
            for a in 0..3 {
                out[r] = s * tau[a];
                r += 1;
            }
        }
    }
    debug_assert_eq!(r, out.len());
}

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Objective callable. The least-squares form lets solvers use Gauss-Newton
/// curvature; both forms evaluate to the same scalar.
#[derive(Clone)]
pub enum Objective {
    Scalar(ScalarFn),
    LeastSquares { len: usize, residuals: VectorFn },
}

impl Objective {
    pub fn value(&self, z: &[f64]) -> f64 {
        match self {
            Objective::Scalar(f) => f(z),
            Objective::LeastSquares { len, residuals } => {
                let mut r = vec![0.0; *len];
                residuals(z, &mut r);
                r.iter().map(|v| v * v).sum()
            }
        }
    }
}

/// Stacked residual callable with a diagnostic name.
#[derive(Clone)]
pub struct ConstraintGroup {
    pub name: String,
    pub len: usize,
    pub eval: VectorFn,
}

impl ConstraintGroup {
    pub fn new<F>(name: impl Into<String>, len: usize, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            len,
            eval: Arc::new(f),
        }
    }
}

impl fmt::Debug for ConstraintGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConstraintGroup({}, {})", self.name, self.len)
    }
}

/// A dense NLP: minimize objective subject to `c(z) = 0`, `g(z) <= 0` and
/// `lower <= z <= upper`.
#[derive(Clone)]
pub struct NlpProblem {
    pub dim: usize,
    pub objective: Objective,
    pub equalities: Vec<ConstraintGroup>,
    pub inequalities: Vec<ConstraintGroup>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub variable_names: Vec<String>,
}

impl NlpProblem {
    /// Unconstrained, unbounded problem with a scalar objective.
    pub fn new<F>(dim: usize, objective: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            objective: Objective::Scalar(Arc::new(objective)),
            equalities: Vec::new(),
            inequalities: Vec::new(),
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
            variable_names: (0..dim).map(|i| format!("z[{i}]")).collect(),
        }
    }

    pub fn with_equality(mut self, group: ConstraintGroup) -> Self {
        self.equalities.push(group);
        self
    }

    pub fn with_inequality(mut self, group: ConstraintGroup) -> Self {
        self.inequalities.push(group);
        self
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn n_eq(&self) -> usize {
        self.equalities.iter().map(|g| g.len).sum()
    }

    pub fn n_ineq(&self) -> usize {
        self.inequalities.iter().map(|g| g.len).sum()
    }

    pub fn eval_equalities(&self, z: &[f64], out: &mut [f64]) {
        eval_groups(&self.equalities, z, out);
    }

    pub fn eval_inequalities(&self, z: &[f64], out: &mut [f64]) {
        eval_groups(&self.inequalities, z, out);
    }

    pub fn equality_values(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_eq()];
        self.eval_equalities(z, &mut out);
        out
    }

    pub fn inequality_values(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_ineq()];
        self.eval_inequalities(z, &mut out);
        out
    }

    /// Name of the group owning a stacked equality (`eq = true`) or
    /// inequality row.
    pub fn row_group(&self, eq: bool, row: usize) -> &str {
        let groups = if eq {
            &self.equalities
        } else {
            &self.inequalities
        };
        let mut start = 0;
        for g in groups {
            if row < start + g.len {
                return &g.name;
            }
            start += g.len;
        }
        "?"
    }

    pub fn check_bounds(&self) -> Result<()> {
        if self.lower.len() != self.dim || self.upper.len() != self.dim {
            return Err(Error::InvalidSpec("bound vectors have wrong length".into()));
        }
        for i in 0..self.dim {
            if self.lower[i] > self.upper[i] {
                return Err(Error::InvalidSpec(format!(
                    "lower bound {} exceeds upper bound {} for {}",
                    self.lower[i], self.upper[i], self.variable_names[i]
                )));
            }
        }
        Ok(())
    }
}

fn eval_groups(groups: &[ConstraintGroup], z: &[f64], out: &mut [f64]) {
    let mut start = 0;
    for g in groups {
        (g.eval)(z, &mut out[start..start + g.len]);
        start += g.len;
    }
}

/// Which constraint families to attach when assembling.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSets {
    pub transfer: Vec<TransferKind>,
    pub maneuver: bool,
}

impl ConstraintSets {
    pub fn full() -> Self {
        Self {
            transfer: TransferKind::ALL.to_vec(),
            maneuver: true,
        }
    }

    pub fn none() -> Self {
        Self {
            transfer: Vec::new(),
            maneuver: false,
        }
    }
}

/// Build the NLP for a maneuver.
pub fn assemble(spec: &ManeuverSpec, sets: &ConstraintSets) -> Result<NlpProblem> {
    for m in &spec.modes {
        m.validate()?;
    }
    let lay = Arc::new(layout(spec)?);
    let spec = Arc::new(spec.clone());
    let j_inv = spec.params.inertia_inverse()?;
    let n = lay.total();

    let objective = {
        let lay = lay.clone();
        Objective::LeastSquares {
            len: objective_residual_len(&lay),
            residuals: Arc::new(move |z: &[f64], out: &mut [f64]| {
                objective_residuals_into(z, &lay, out)
            }),
        }
    };

    let mut equalities = Vec::new();
    {
        let (lay, spec) = (lay.clone(), spec.clone());
        equalities.push(ConstraintGroup::new(
            "dynamics_defects",
            defect_len(&lay),
            move |z, out| defects_into(z, &spec, &lay, &j_inv, out),
        ));
    }
    if lay.modes() > 1 {
        let l = lay.clone();
        equalities.push(ConstraintGroup::new(
            "linking",
            linking_len(&lay),
            move |z, out| linking_into(z, &l, out),
        ));
    }

    let mut inequalities = Vec::new();
    for kind in &sets.transfer {
        let len = constraints::residual_len(*kind, &spec, &lay);
        if len == 0 {
            continue;
        }
        let (l, s, k) = (lay.clone(), spec.clone(), *kind);
        inequalities.push(ConstraintGroup::new(kind.name(), len, move |z, out| {
            constraints::residuals_into(k, z, &s, &l, out)
        }));
    }

    if sets.maneuver {
        for (i, c) in spec.constraints.iter().enumerate() {
            let (l, c2) = (lay.clone(), c.clone());
            let group = ConstraintGroup::new(format!("{}#{i}", c.name()), 1, move |z, out| {
                out[0] = c2.residual(z, &l)
            });
            if c.is_equality() {
                equalities.push(group);
            } else {
                inequalities.push(group);
            }
        }
    }

    let mut lower = vec![f64::NEG_INFINITY; n];
    let mut upper = vec![f64::INFINITY; n];
    for (m, mode) in spec.modes.iter().enumerate() {
        let d = lay.duration_index(m);
        lower[d] = mode.t_min;
        upper[d] = mode.t_max;
        for c in 0..mode.kind.contacts() {
            let i = lay.index(m, Field::Foot { contact: c, axis: 2 });
            lower[i] = 0.0;
            upper[i] = 0.0;
        }
    }
    // Horizontal translation is a symmetry of every cost and constraint, so the
    // first knot's xy position is pinned to the nominal start.
    if let Some(start) = spec.keyframes.first() {
        for axis in 0..2 {
            let i = lay.state_index(0, 0, axis);
            lower[i] = start.p[axis];
            upper[i] = start.p[axis];
        }
    }

    let problem = NlpProblem {
        dim: n,
        objective,
        equalities,
        inequalities,
        lower,
        upper,
        variable_names: (0..n).map(|i| lay.variable_name(i)).collect(),
    };
    problem.check_bounds()?;
    Ok(problem)
}
