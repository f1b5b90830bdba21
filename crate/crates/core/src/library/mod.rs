//! Parameter sweeps that chain warm-started solves into a trajectory library.

mod format;
mod trajectory;

use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::maneuvers::ManeuverRequest;
use crate::solver::{cold_start, SolveOptions, SolveResult, SolveStatus, SolverBackend};
use crate::transcription::{assemble, ConstraintSets};

pub use format::{FORMAT_HEADER, FORMAT_VERSION};
pub use trajectory::{
    normalized_state_distance, ReferenceSample, StanceSchedule, Trajectory, CSV_COLUMNS,
};

/// The request field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Speed,
    HeadingChange,
    ApexHeight,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Speed => "v_des",
            SweepParameter::HeadingChange => "heading_change",
            SweepParameter::ApexHeight => "apex_height",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "v_des" => SweepParameter::Speed,
            "heading_change" => SweepParameter::HeadingChange,
            "apex_height" => SweepParameter::ApexHeight,
            _ => return None,
        })
    }

    pub fn apply(self, request: &mut ManeuverRequest, value: f64) {
        match self {
            SweepParameter::Speed => request.v_des = value,
            SweepParameter::HeadingChange => request.heading_change = value,
            SweepParameter::ApexHeight => request.apex_height = value,
        }
    }

    pub fn get(self, request: &ManeuverRequest) -> f64 {
        match self {
            SweepParameter::Speed => request.v_des,
            SweepParameter::HeadingChange => request.heading_change,
            SweepParameter::ApexHeight => request.apex_height,
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub request: ManeuverRequest,
    pub parameter: SweepParameter,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    /// Solve from `hi` down to `lo` instead.
    pub descending: bool,
}

impl SweepPlan {
    /// Grid values in solve order.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(Error::Range("sweep bounds must be finite".into()));
        }
        if !(self.step > 0.0) {
            return Err(Error::Range(format!("sweep step must be positive, got {}", self.step)));
        }
        if self.hi < self.lo {
            return Err(Error::Range(format!(
                "sweep range is empty: lo {} > hi {}",
                self.lo, self.hi
            )));
        }
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        let mut v: Vec<f64> = (0..=n).map(|i| self.lo + i as f64 * self.step).collect();
        if self.descending {
            v.reverse();
        }
        Ok(v)
    }

    pub fn request_at(&self, value: f64) -> ManeuverRequest {
        let mut r = self.request.clone();
        self.parameter.apply(&mut r, value);
        r
    }
}

/// Where a library came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    /// Hex SHA-256 of the configuration text (or of the plan when built
    /// without one).
    pub config_hash: String,
    pub backend: String,
    pub solver: SolveOptions,
    /// The configuration text itself, when available.
    pub config: Option<String>,
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LibraryEntry {
    pub value: f64,
    pub trajectory: Trajectory,
    pub status: SolveStatus,
    pub objective: f64,
    pub max_eq_violation: f64,
    pub max_ineq_violation: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub warm_started: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLibrary {
    /// Name of the swept parameter.
    pub parameter: String,
    /// Length used to normalize state distances, m.
    pub length_scale: f64,
    /// Converged entries sorted by value.
    pub entries: Vec<LibraryEntry>,
    /// Grid values that did not converge.
    pub gaps: Vec<f64>,
    pub provenance: Provenance,
}

/// Largest normalized knot-by-knot state difference between neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessReport {
    /// `(value_a, value_b, distance)` for each adjacent pair.
    pub pairs: Vec<(f64, f64, f64)>,
    pub max: f64,
}

impl TrajectoryLibrary {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    /// Index of the entry closest to `value` and whether `value` lies inside
    /// the covered range.
    pub fn nearest(&self, value: f64) -> Option<(usize, bool)> {
        let first = self.entries.first()?.value;
        let last = self.entries.last()?.value;
        let i = self
            .entries
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1.value - value).abs().total_cmp(&(b.1.value - value).abs()))
            .map(|(i, _)| i)?;
        Some((i, value >= first && value <= last))
    }

    pub fn smoothness_report(&self) -> Result<SmoothnessReport> {
        if self.entries.len() < 2 {
            return Err(Error::Usage(format!(
                "smoothness needs at least 2 entries, library has {}",
                self.entries.len()
            )));
        }
        let mut pairs = Vec::new();
        for w in self.entries.windows(2) {
            let (a, b) = (&w[0].trajectory, &w[1].trajectory);
            if !a.same_structure(b) {
                return Err(Error::InvalidSpec(format!(
                    "entries {} and {} have different mode structures",
                    w[0].value, w[1].value
                )));
            }
            let g = a.params().gravity;
            let mut d = 0.0f64;
            for (m, mode) in a.modes().iter().enumerate() {
                for k in 0..mode.knots {
                    d = d.max(normalized_state_distance(
                        &a.state(m, k),
                        &b.state(m, k),
                        g,
                        self.length_scale,
                    ));
                }
            }
            pairs.push((w[0].value, w[1].value, d));
        }
        let max = pairs.iter().fold(0.0f64, |m, p| m.max(p.2));
        Ok(SmoothnessReport { pairs, max })
    }
}

fn solve_at(
    request: &ManeuverRequest,
    backend: &dyn SolverBackend,
    options: &SolveOptions,
    warm: Option<&[f64]>,
) -> Result<(SolveResult, Trajectory, bool)> {
    let spec = request.build()?;
    let problem = assemble(&spec, &ConstraintSets::full())?;
    let (guess, warm_started) = match warm {
        Some(z) if z.len() == problem.dim => (z.to_vec(), true),
        _ => (cold_start(&spec)?, false),
    };
    let result = backend.solve(&problem, &guess, options)?;
    let trajectory = Trajectory::from_spec(&spec, result.solution.clone())?;
    Ok((result, trajectory, warm_started))
}

/// Solve every grid value in order, warm-starting each from the last
/// converged neighbour. A warm start that fails is retried once cold; values
/// that still fail become gaps. Failure at the first value is an error.
pub fn sweep(plan: &SweepPlan, backend: &dyn SolverBackend, options: &SolveOptions) -> Result<TrajectoryLibrary> {
    let values = plan.values()?;
    let mut entries: Vec<LibraryEntry> = Vec::new();
    let mut gaps = Vec::new();
    let mut last: Option<Vec<f64>> = None;
    for (i, &value) in values.iter().enumerate() {
        let request = plan.request_at(value);
        let (mut result, mut trajectory, mut warm) = solve_at(&request, backend, options, last.as_deref())?;
        if !result.converged() && warm {
            (result, trajectory, warm) = solve_at(&request, backend, options, None)?;
        }
        if !result.converged() {
            if i == 0 {
                return Err(Error::Sweep(format!(
                    "first entry {}={value} ended with {}",
                    plan.parameter, result.status
                )));
            }
            gaps.push(value);
            continue;
        }
        last = Some(result.solution.clone());
        entries.push(LibraryEntry {
            value,
            trajectory,
            status: result.status,
            objective: result.objective,
            max_eq_violation: result.max_eq_violation,
            max_ineq_violation: result.max_ineq_violation,
            outer_iterations: result.outer_iterations,
            inner_iterations: result.inner_iterations,
            warm_started: warm,
        });
    }
    entries.sort_by(|a, b| a.value.total_cmp(&b.value));
    gaps.sort_by(f64::total_cmp);
    Ok(TrajectoryLibrary {
        parameter: plan.parameter.name().to_string(),
        length_scale: plan.request.configs.transfer.l_max,
        entries,
        gaps,
        provenance: Provenance {
            config_hash: sha256_hex(&format!("{plan:?}\n{options:?}\n{}", backend.name())),
            backend: backend.name().to_string(),
            solver: options.clone(),
            config: None,
        },
    })
}
