//! TOML configuration with unit-suffixed keys. Every section is optional at
//! parse time; commands ask for the sections they use.

use serde::{Deserialize, Serialize};

use crate::constraints::TransferabilityConfig;
use crate::error::{Error, Result};
use crate::library::{SweepParameter, SweepPlan};
use crate::maneuvers::{ManeuverConfigs, ManeuverKind, ManeuverRequest, ManeuverTargets, Side};
use crate::reward::{FootTerms, RewardCoefficients, RewardConfig};
use crate::solver::{InnerMethod, SolveOptions};
use crate::srbm::{Mat3, Quaternion, SrbmParams};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transferability: Option<TransferabilitySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maneuver: Option<ManeuverSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub mass_kg: f64,
    /// Row-major 3x3 body-frame inertia.
    pub inertia_kg_m2: [f64; 9],
    pub gravity_m_per_s2: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            mass_kg: 30.0,
            inertia_kg_m2: [1.2, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.6],
            gravity_m_per_s2: 9.81,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferabilitySection {
    pub l_max_m: f64,
    /// Cosine of the largest leg angle from the body down axis.
    pub psi: f64,
    pub mu: f64,
    pub f_max_n: f64,
    pub fdot_max_n_per_s: f64,
    pub omega_max_rad_per_s: f64,
    pub delta_min_m: f64,
}

impl Default for TransferabilitySection {
    fn default() -> Self {
        let d = TransferabilityConfig::default();
        Self {
            l_max_m: d.l_max,
            psi: d.psi,
            mu: d.mu,
            f_max_n: d.f_max,
            fdot_max_n_per_s: d.fdot_max,
            omega_max_rad_per_s: d.omega_max,
            delta_min_m: d.delta_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManeuverSection {
    pub kind: ManeuverKind,
    pub v_des_m_per_s: f64,
    pub steps: usize,
    pub knots: usize,
    pub heading_change_rad: f64,
    pub apex_height_m: f64,
    pub first_side: Side,
    pub stance_duration_s: [f64; 2],
    pub flight_duration_s: [f64; 2],
    /// `[w, x, y, z]`.
    pub q_run: [f64; 4],
    pub q_liftoff: [f64; 4],
    pub theta_tol_rad: f64,
    pub theta_mirror_rad: f64,
    pub theta_turn_rad: f64,
    pub theta_liftoff_rad: f64,
    pub theta_touchdown_initial_rad: f64,
    pub theta_touchdown_final_rad: f64,
    pub nominal_height_m: f64,
}

impl Default for ManeuverSection {
    fn default() -> Self {
        let r = ManeuverRequest::default();
        let t = r.targets;
        let c = r.configs;
        Self {
            kind: r.kind,
            v_des_m_per_s: r.v_des,
            steps: r.steps,
            knots: r.knots,
            heading_change_rad: r.heading_change,
            apex_height_m: r.apex_height,
            first_side: c.first_side,
            stance_duration_s: [c.stance_duration.0, c.stance_duration.1],
            flight_duration_s: [c.flight_duration.0, c.flight_duration.1],
            q_run: t.q_run.to_array(),
            q_liftoff: t.q_liftoff.to_array(),
            theta_tol_rad: t.theta_tol,
            theta_mirror_rad: t.theta_mirror,
            theta_turn_rad: t.theta_turn,
            theta_liftoff_rad: t.theta_liftoff,
            theta_touchdown_initial_rad: t.theta_touchdown_initial,
            theta_touchdown_final_rad: t.theta_touchdown_final,
            nominal_height_m: t.nominal_height,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerKind {
    GaussNewton,
    Lbfgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub backend: String,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub max_outer_iterations: usize,
    pub max_inner_iterations: usize,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_penalty: f64,
    pub fd_step: f64,
    pub inner: InnerKind,
    pub lbfgs_memory: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = SolveOptions::default();
        Self {
            backend: "builtin".into(),
            feasibility_tol: o.feasibility_tol,
            optimality_tol: o.optimality_tol,
            max_outer_iterations: o.max_outer_iterations,
            max_inner_iterations: o.max_inner_iterations,
            initial_penalty: o.initial_penalty,
            penalty_growth: o.penalty_growth,
            max_penalty: o.max_penalty,
            fd_step: o.fd_step,
            inner: InnerKind::GaussNewton,
            lbfgs_memory: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// `v_des`, `heading_change` or `apex_height`; bounds are in its units.
    pub parameter: String,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub descending: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            parameter: "v_des".into(),
            lo: 0.5,
            hi: 1.5,
            step: 0.25,
            descending: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardSection {
    pub coefficients: RewardCoefficients,
    pub foot_position_scale_per_m: f64,
    pub drift_threshold_m: f64,
    pub drift_scale_per_m: f64,
    pub z_foot_des_m: f64,
    pub foot_terms: FootTerms,
    pub clock_gain: f64,
}

impl Default for RewardSection {
    fn default() -> Self {
        let r = RewardConfig::default();
        Self {
            coefficients: r.coefficients,
            foot_position_scale_per_m: r.foot_position_scale,
            drift_threshold_m: r.drift_threshold,
            drift_scale_per_m: r.drift_scale,
            z_foot_des_m: r.z_foot_des,
            foot_terms: r.foot_terms,
            clock_gain: r.clock_gain,
        }
    }
}

fn missing(section: &str) -> Error {
    Error::Config(format!("missing section [{section}]"))
}

fn bounds(field: &str, b: [f64; 2]) -> Result<(f64, f64)> {
    if !(b[0] > 0.0 && b[0].is_finite() && b[1].is_finite()) {
        return Err(Error::Config(format!("maneuver.{field}: bounds must be positive and finite")));
    }
    if b[0] > b[1] {
        return Err(Error::Config(format!(
            "maneuver.{field}: t_min {} exceeds t_max {}",
            b[0], b[1]
        )));
    }
    Ok((b[0], b[1]))
}

fn quaternion(field: &str, q: [f64; 4]) -> Result<Quaternion> {
    let q = Quaternion::new(q[0], q[1], q[2], q[3]);
    if !q.is_unit(1e-9) {
        return Err(Error::Config(format!("maneuver.{field} must be a unit quaternion [w, x, y, z]")));
    }
    Ok(q)
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string() + &span_note(text, e.span())))
    }

    pub fn load(path: &std::path::Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok((Self::parse(&text)?, text))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config sections serialize to TOML")
    }

    pub fn params(&self) -> Result<SrbmParams> {
        let m = self.model.as_ref().ok_or_else(|| missing("model"))?;
        SrbmParams::new(m.mass_kg, Mat3::from_row_slice(&m.inertia_kg_m2), m.gravity_m_per_s2)
            .map_err(|e| Error::Config(format!("model: {e}")))
    }

    pub fn transfer(&self) -> Result<TransferabilityConfig> {
        let t = self.transferability.as_ref().ok_or_else(|| missing("transferability"))?;
        let c = TransferabilityConfig {
            l_max: t.l_max_m,
            psi: t.psi,
            mu: t.mu,
            f_max: t.f_max_n,
            fdot_max: t.fdot_max_n_per_s,
            omega_max: t.omega_max_rad_per_s,
            delta_min: t.delta_min_m,
        };
        c.validate().map_err(|e| Error::Config(format!("transferability: {e}")))?;
        Ok(c)
    }

    pub fn request(&self) -> Result<ManeuverRequest> {
        let params = self.params()?;
        let transfer = self.transfer()?;
        let m = self.maneuver.as_ref().ok_or_else(|| missing("maneuver"))?;
        let targets = ManeuverTargets {
            q_run: quaternion("q_run", m.q_run)?,
            q_liftoff: quaternion("q_liftoff", m.q_liftoff)?,
            theta_tol: m.theta_tol_rad,
            theta_mirror: m.theta_mirror_rad,
            theta_turn: m.theta_turn_rad,
            theta_liftoff: m.theta_liftoff_rad,
            theta_touchdown_initial: m.theta_touchdown_initial_rad,
            theta_touchdown_final: m.theta_touchdown_final_rad,
            nominal_height: m.nominal_height_m,
        };
        targets.validate().map_err(|e| Error::Config(format!("maneuver: {e}")))?;
        Ok(ManeuverRequest {
            kind: m.kind,
            v_des: m.v_des_m_per_s,
            steps: m.steps,
            knots: m.knots,
            heading_change: m.heading_change_rad,
            apex_height: m.apex_height_m,
            targets,
            configs: ManeuverConfigs {
                params,
                transfer,
                stance_duration: bounds("stance_duration_s", m.stance_duration_s)?,
                flight_duration: bounds("flight_duration_s", m.flight_duration_s)?,
                first_side: m.first_side,
            },
        })
    }

    pub fn backend_name(&self) -> Result<String> {
        Ok(self.solver.as_ref().ok_or_else(|| missing("solver"))?.backend.clone())
    }

    pub fn solve_options(&self) -> Result<SolveOptions> {
        let s = self.solver.as_ref().ok_or_else(|| missing("solver"))?;
        let o = SolveOptions {
            feasibility_tol: s.feasibility_tol,
            optimality_tol: s.optimality_tol,
            max_outer_iterations: s.max_outer_iterations,
            max_inner_iterations: s.max_inner_iterations,
            initial_penalty: s.initial_penalty,
            penalty_growth: s.penalty_growth,
            max_penalty: s.max_penalty,
            fd_step: s.fd_step,
            inner: match s.inner {
                InnerKind::GaussNewton => InnerMethod::GaussNewton,
                InnerKind::Lbfgs => InnerMethod::Lbfgs {
                    memory: s.lbfgs_memory,
                },
            },
        };
        o.validate().map_err(|e| Error::Config(format!("solver: {e}")))?;
        Ok(o)
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        let request = self.request()?;
        let s = self.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
        let parameter = SweepParameter::parse(&s.parameter).ok_or_else(|| {
            Error::Config(format!(
                "sweep.parameter: unknown parameter `{}` (v_des, heading_change, apex_height)",
                s.parameter
            ))
        })?;
        let plan = SweepPlan {
            request,
            parameter,
            lo: s.lo,
            hi: s.hi,
            step: s.step,
            descending: s.descending,
        };
        plan.values().map_err(|e| Error::Config(format!("sweep: {e}")))?;
        Ok(plan)
    }

    /// Reward settings; defaults when the section is absent.
    pub fn reward(&self) -> Result<RewardConfig> {
        let r = self.reward.clone().unwrap_or_default();
        let c = RewardConfig {
            coefficients: r.coefficients,
            foot_position_scale: r.foot_position_scale_per_m,
            drift_threshold: r.drift_threshold_m,
            drift_scale: r.drift_scale_per_m,
            z_foot_des: r.z_foot_des_m,
            foot_terms: r.foot_terms,
            clock_gain: r.clock_gain,
        };
        c.validate()?;
        Ok(c)
    }

    /// Every section at its default value.
    pub fn template() -> Self {
        Self {
            model: Some(ModelSection::default()),
            transferability: Some(TransferabilitySection::default()),
            maneuver: Some(ManeuverSection::default()),
            solver: Some(SolverSection::default()),
            sweep: Some(SweepSection::default()),
            reward: Some(RewardSection::default()),
        }
    }
}

fn span_note(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(s) => format!(" (line {})", text[..s.start.min(text.len())].lines().count().max(1)),
        None => String::new(),
    }
}
