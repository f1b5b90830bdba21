//! Nonlinear programming backends for transcribed maneuvers.

mod augmented_lagrangian;
mod guess;
mod lbfgs;
pub(crate) mod linalg;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transcription::NlpProblem;

pub use guess::cold_start;

/// How the bound-constrained subproblems are minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum InnerMethod {
    /// Gauss-Newton curvature of the squared objective residuals and penalty
    /// terms, globalized with Levenberg-Marquardt damping.
    GaussNewton,
    /// Projected limited-memory BFGS with backtracking.
    Lbfgs { memory: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub max_outer_iterations: usize,
    pub max_inner_iterations: usize,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_penalty: f64,
    /// Relative central-difference step.
    pub fd_step: f64,
    pub inner: InnerMethod,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-6,
            optimality_tol: 1e-6,
            max_outer_iterations: 50,
            max_inner_iterations: 500,
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            max_penalty: 1e8,
            fd_step: 1e-7,
            inner: InnerMethod::GaussNewton,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("feasibility_tol", self.feasibility_tol),
            ("optimality_tol", self.optimality_tol),
            ("initial_penalty", self.initial_penalty),
            ("max_penalty", self.max_penalty),
            ("fd_step", self.fd_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_outer_iterations == 0 || self.max_inner_iterations == 0 {
            return Err(Error::InvalidParams("iteration limits must be positive".into()));
        }
        if !(self.penalty_growth > 1.0) {
            return Err(Error::InvalidParams(format!(
                "penalty_growth must exceed 1, got {}",
                self.penalty_growth
            )));
        }
        if self.max_penalty < self.initial_penalty {
            return Err(Error::InvalidParams("max_penalty below initial_penalty".into()));
        }
        if let InnerMethod::Lbfgs { memory: 0 } = self.inner {
            return Err(Error::InvalidParams("L-BFGS memory must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Infeasible,
    NumericalFailure,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Converged => "Converged",
            SolveStatus::MaxIterations => "MaxIterations",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::NumericalFailure => "NumericalFailure",
        };
        f.write_str(s)
    }
}

impl SolveStatus {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "Converged" => SolveStatus::Converged,
            "MaxIterations" => SolveStatus::MaxIterations,
            "Infeasible" => SolveStatus::Infeasible,
            "NumericalFailure" => SolveStatus::NumericalFailure,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub solution: Vec<f64>,
    pub objective: f64,
    pub max_eq_violation: f64,
    pub max_ineq_violation: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub wall_time: Duration,
    /// Diagnostic detail, e.g. the constraint group that produced a NaN.
    pub message: Option<String>,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// A named NLP solver.
pub trait SolverBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, problem: &NlpProblem, guess: &[f64], options: &SolveOptions) -> Result<SolveResult>;
}

/// The built-in augmented-Lagrangian solver; `lbfgs` forces the L-BFGS inner loop.
#[derive(Debug, Clone, Copy, Default)]
pub struct Builtin {
    pub lbfgs: bool,
}

impl SolverBackend for Builtin {
    fn name(&self) -> &str {
        if self.lbfgs {
            "builtin-lbfgs"
        } else {
            "builtin"
        }
    }

    fn solve(&self, problem: &NlpProblem, guess: &[f64], options: &SolveOptions) -> Result<SolveResult> {
        let mut opts = options.clone();
        if self.lbfgs && !matches!(opts.inner, InnerMethod::Lbfgs { .. }) {
            opts.inner = InnerMethod::Lbfgs { memory: 10 };
        }
        solve(problem, guess, &opts)
    }
}

pub const BACKENDS: [&str; 2] = ["builtin", "builtin-lbfgs"];

/// Look up a backend by name.
pub fn backend(name: &str) -> Result<Box<dyn SolverBackend>> {
    match name {
        "builtin" => Ok(Box::new(Builtin { lbfgs: false })),
        "builtin-lbfgs" => Ok(Box::new(Builtin { lbfgs: true })),
        other => Err(Error::Usage(format!(
            "unknown solver backend `{other}` (available: {})",
            BACKENDS.join(", ")
        ))),
    }
}

/// Solve with the built-in augmented-Lagrangian method.
pub fn solve(problem: &NlpProblem, guess: &[f64], options: &SolveOptions) -> Result<SolveResult> {
    options.validate()?;
    if guess.len() != problem.dim {
        return Err(Error::Usage(format!(
            "initial guess has length {}, problem dimension is {}",
            guess.len(),
            problem.dim
        )));
    }
    if let Some(i) = guess.iter().position(|v| !v.is_finite()) {
        return Err(Error::Usage(format!(
            "initial guess entry {i} ({}) is not finite",
            problem.variable_names.get(i).map(String::as_str).unwrap_or("?")
        )));
    }
    problem.check_bounds()?;
    Ok(augmented_lagrangian::solve_augmented_lagrangian(problem, guess, options))
}

/// Maximum violation of one constraint group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupViolation {
    pub group: String,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeasibilityReport {
    pub tolerance: f64,
    /// Groups exceeding the tolerance, worst first.
    pub violations: Vec<GroupViolation>,
    pub max_violation: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tolerance {:e}", self.tolerance)?;
        writeln!(f, "max_violation {:e}", self.max_violation)?;
        if self.violations.is_empty() {
            writeln!(f, "feasible")?;
        }
        for v in &self.violations {
            writeln!(f, "violated {} {:e}", v.group, v.max_violation)?;
        }
        Ok(())
    }
}

/// Per-group maximum violation at `z`, including variable bounds. Non-finite
/// values count as infinite violation.
pub fn check_feasibility(problem: &NlpProblem, z: &[f64], tolerance: f64) -> FeasibilityReport {
    assert_eq!(z.len(), problem.dim, "point dimension mismatch");
    let clean = |v: f64| if v.is_nan() { f64::INFINITY } else { v };
    let mut groups: Vec<GroupViolation> = Vec::new();
    for g in &problem.equalities {
        let mut out = vec![0.0; g.len];
        (g.eval)(z, &mut out);
        let m = out.iter().fold(0.0f64, |m, v| m.max(clean(v.abs())));
        groups.push(GroupViolation {
            group: g.name.clone(),
            max_violation: m,
        });
    }
    for g in &problem.inequalities {
        let mut out = vec![0.0; g.len];
        (g.eval)(z, &mut out);
        let m = out.iter().fold(0.0f64, |m, v| m.max(clean(*v)));
        groups.push(GroupViolation {
            group: g.name.clone(),
            max_violation: m,
        });
    }
    let bound = (0..problem.dim).fold(0.0f64, |m, i| {
        let v = (problem.lower[i] - z[i]).max(z[i] - problem.upper[i]);
        m.max(clean(v))
    });
    groups.push(GroupViolation {
        group: "variable_bounds".into(),
        max_violation: bound,
    });
    let max_violation = groups.iter().fold(0.0f64, |m, g| m.max(g.max_violation));
    let mut violations: Vec<GroupViolation> =
        groups.into_iter().filter(|g| g.max_violation > tolerance).collect();
    violations.sort_by(|a, b| {
        b.max_violation
            .total_cmp(&a.max_violation)
            .then_with(|| a.group.cmp(&b.group))
    });
    FeasibilityReport {
        tolerance,
        violations,
        max_violation,
    }
}
