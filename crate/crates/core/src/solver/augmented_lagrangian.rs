//! Augmented-Lagrangian outer loop with a bound-constrained inner minimizer.
//!
//! Equalities enter through multipliers plus a quadratic penalty; inequalities
//! through the shifted squared hinge `(max(0, mu + rho g)^2 - mu^2) / (2 rho)`.
//! Variable bounds are handled by projection in the inner loop and fixed
//! variables are removed entirely. Derivatives come from central finite
//! differences of the residual callables. The sparsity pattern is probed at
//! the start so structurally independent columns can be differenced together,
//! and widened from a dense probe whenever the inner loop stalls. The
//! Gauss-Newton system is factored over its envelope.

use std::time::Instant;

use super::lbfgs::LbfgsMemory;
use super::linalg::{dot, norm_inf, Envelope};
use super::{InnerMethod, SolveOptions, SolveResult, SolveStatus};
use crate::transcription::{NlpProblem, Objective};

/// Target magnitude for scaled gradients.
const GRADIENT_SCALE_TARGET: f64 = 100.0;

struct Scaled<'a> {
    problem: &'a NlpProblem,
    free: Vec<usize>,
    template: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    n_obj: usize,
    n_eq: usize,
    n_ineq: usize,
    obj_scale: f64,
    row_scale: Vec<f64>,
    fd_step: f64,
    coloring: Option<Coloring>,
}

/// Groups of free columns with disjoint row supports, so one pair of
/// perturbed evaluations recovers a whole group.
struct Coloring {
    groups: Vec<Vec<usize>>,
    /// Row supports, sorted by column.
    pattern: Vec<Vec<u32>>,
    /// Per column: `(row, position within that row's support)`.
    targets: Vec<Vec<(u32, u32)>>,
}

impl Coloring {
    fn new(pattern: Vec<Vec<u32>>, n_cols: usize) -> Self {
        let mut targets: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n_cols];
        for (i, row) in pattern.iter().enumerate() {
            for (k, &j) in row.iter().enumerate() {
                targets[j as usize].push((i as u32, k as u32));
            }
        }
        // Greedy distance-2 coloring in column order.
        let mut color = vec![usize::MAX; n_cols];
        let mut mark: Vec<usize> = Vec::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for j in 0..n_cols {
            for &(i, _) in &targets[j] {
                for &k in &pattern[i as usize] {
                    let c = color[k as usize];
                    if c != usize::MAX {
                        mark[c] = j;
                    }
                }
            }
            let c = (0..mark.len()).find(|&c| mark[c] != j).unwrap_or(mark.len());
            if c == mark.len() {
                mark.push(usize::MAX);
                groups.push(Vec::new());
            }
            color[j] = c;
            groups[c].push(j);
        }
        Self {
            groups,
            pattern,
            targets,
        }
    }
}

/// Deterministic offsets in [-1, 1] for the sparsity probe.
fn probe_offset(j: usize) -> f64 {
    let mut h = (j as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
    h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    h ^= h >> 31;
    (h >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

struct Point {
    x: Vec<f64>,
    /// Scaled rows `[sqrt(s_f) r_obj | s_c c | s_g g]`.
    rows: Vec<f64>,
    /// Scaled objective value.
    f: f64,
}

/// Row-sparse Jacobian of the scaled rows over the free variables, plus the
/// scaled objective gradient.
struct Jacobian {
    rows: Vec<Vec<(u32, f64)>>,
    grad_f: Vec<f64>,
}

impl<'a> Scaled<'a> {
    fn new(problem: &'a NlpProblem, guess: &[f64], fd_step: f64) -> Self {
        let mut template = guess.to_vec();
        let mut free = Vec::new();
        for i in 0..problem.dim {
            let (l, u) = (problem.lower[i], problem.upper[i]);
            if l == u {
                template[i] = l;
            } else {
                template[i] = template[i].clamp(l, u);
                free.push(i);
            }
        }
        let lo = free.iter().map(|&i| problem.lower[i]).collect();
        let hi = free.iter().map(|&i| problem.upper[i]).collect();
        let n_obj = match &problem.objective {
            Objective::LeastSquares { len, .. } => *len,
            Objective::Scalar(_) => 0,
        };
        let n_eq = problem.n_eq();
        let n_ineq = problem.n_ineq();
        Self {
            problem,
            free,
            template,
            lo,
            hi,
            n_obj,
            n_eq,
            n_ineq,
            obj_scale: 1.0,
            row_scale: vec![1.0; n_obj + n_eq + n_ineq],
            fd_step,
            coloring: None,
        }
    }

    fn n_rows(&self) -> usize {
        self.n_obj + self.n_eq + self.n_ineq
    }

    fn full(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.template.clone();
        for (k, &i) in self.free.iter().enumerate() {
            z[i] = x[k];
        }
        z
    }

    fn x0(&self) -> Vec<f64> {
        self.free.iter().map(|&i| self.template[i]).collect()
    }

    /// Unscaled raw evaluation; returns the scalar objective (0 for least squares).
    fn raw_eval(&self, z: &[f64], out: &mut [f64]) -> f64 {
        let (o, e) = (self.n_obj, self.n_obj + self.n_eq);
        let f = match &self.problem.objective {
            Objective::LeastSquares { residuals, .. } => {
                residuals(z, &mut out[..o]);
                0.0
            }
            Objective::Scalar(f) => f(z),
        };
        self.problem.eval_equalities(z, &mut out[o..e]);
        self.problem.eval_inequalities(z, &mut out[e..]);
        f
    }

    fn row_name(&self, row: usize) -> String {
        if row < self.n_obj {
            "objective".into()
        } else if row < self.n_obj + self.n_eq {
            self.problem.row_group(true, row - self.n_obj).to_string()
        } else {
            self.problem
                .row_group(false, row - self.n_obj - self.n_eq)
                .to_string()
        }
    }

    fn first_bad(&self, f: f64, rows: &[f64]) -> Option<String> {
        if !f.is_finite() {
            return Some("objective".into());
        }
        rows.iter()
            .position(|v| !v.is_finite())
            .map(|r| self.row_name(r))
    }

    fn evaluate(&self, x: &[f64]) -> Result<Point, String> {
        let z = self.full(x);
        let mut rows = vec![0.0; self.n_rows()];
        let raw_f = self.raw_eval(&z, &mut rows);
        if let Some(name) = self.first_bad(raw_f, &rows) {
            return Err(name);
        }
        for (r, s) in rows.iter_mut().zip(&self.row_scale) {
            *r *= s;
        }
        let f = if self.n_obj > 0 {
            rows[..self.n_obj].iter().map(|r| r * r).sum()
        } else {
            self.obj_scale * raw_f
        };
        Ok(Point {
            x: x.to_vec(),
            rows,
            f,
        })
    }

    fn jacobian(&self, pt: &Point) -> Result<Jacobian, String> {
        match &self.coloring {
            Some(c) => self.jacobian_colored(pt, c),
            None => self.jacobian_dense(pt),
        }
    }

    /// Probe the row supports at the start point and at a nearby point, and
    /// switch to grouped differencing. Scalar objectives keep the dense path
    /// because their gradient needs every column separately.
    fn detect_sparsity(&mut self, pt: &Point) -> Result<(), String> {
        if self.n_obj == 0 && matches!(self.problem.objective, Objective::Scalar(_)) {
            return Ok(());
        }
        let nf = self.free.len();
        let mut pattern: Vec<Vec<u32>> = self
            .jacobian_dense(pt)?
            .rows
            .into_iter()
            .map(|r| r.into_iter().map(|(j, _)| j).collect())
            .collect();
        let mut x = pt.x.clone();
        for j in 0..nf {
            let v = x[j] + 1e-3 * x[j].abs().max(1.0) * probe_offset(j);
            x[j] = v.clamp(self.lo[j], self.hi[j]);
        }
        if let Ok(probe) = self.evaluate(&x) {
            if let Ok(jac) = self.jacobian_dense(&probe) {
                for (row, extra) in pattern.iter_mut().zip(jac.rows) {
                    row.extend(extra.into_iter().map(|(j, _)| j));
                    row.sort_unstable();
                    row.dedup();
                }
            }
        }
        self.coloring = Some(Coloring::new(pattern, nf));
        Ok(())
    }

    /// Merge the dense support at `pt` into the pattern. Entries that vanish
    /// at both probe points (e.g. `|w|` at `w = 0`) are picked up here once
    /// the iterate moves. Returns whether the pattern grew.
    fn refresh_sparsity(&mut self, pt: &Point) -> Result<bool, String> {
        let Some(c) = &self.coloring else {
            return Ok(false);
        };
        let mut pattern = c.pattern.clone();
        let mut grew = false;
        for (row, extra) in pattern.iter_mut().zip(self.jacobian_dense(pt)?.rows) {
            let before = row.len();
            row.extend(extra.into_iter().map(|(j, _)| j));
            row.sort_unstable();
            row.dedup();
            grew |= row.len() != before;
        }
        if grew {
            self.coloring = Some(Coloring::new(pattern, self.free.len()));
        }
        Ok(grew)
    }

    fn jacobian_colored(&self, pt: &Point, c: &Coloring) -> Result<Jacobian, String> {
        let m = self.n_rows();
        let nf = self.free.len();
        let mut rows: Vec<Vec<(u32, f64)>> = c
            .pattern
            .iter()
            .map(|r| r.iter().map(|&j| (j, 0.0)).collect())
            .collect();
        let mut z = self.full(&pt.x);
        let mut plus = vec![0.0; m];
        let mut minus = vec![0.0; m];
        let mut denom = vec![0.0; nf];
        for group in &c.groups {
            for &j in group {
                let xj = pt.x[j];
                let h = self.fd_step * xj.abs().max(1.0);
                let (a, b) = (xj + h, xj - h);
                denom[j] = a - b;
                z[self.free[j]] = a;
            }
            self.raw_eval(&z, &mut plus);
            for &j in group {
                let xj = pt.x[j];
                let h = self.fd_step * xj.abs().max(1.0);
                z[self.free[j]] = xj - h;
            }
            self.raw_eval(&z, &mut minus);
            for &j in group {
                z[self.free[j]] = pt.x[j];
            }
            if let Some(i) = (0..m).find(|&i| !plus[i].is_finite() || !minus[i].is_finite()) {
                return Err(self.row_name(i));
            }
            for &j in group {
                for &(i, k) in &c.targets[j] {
                    let i = i as usize;
                    let v = (plus[i] - minus[i]) / denom[j] * self.row_scale[i];
                    rows[i][k as usize].1 = v;
                }
            }
        }
        let mut grad_f = vec![0.0; nf];
        for (i, row) in rows[..self.n_obj].iter().enumerate() {
            let w = 2.0 * pt.rows[i];
            for &(j, v) in row {
                grad_f[j as usize] += w * v;
            }
        }
        Ok(Jacobian { rows, grad_f })
    }

    fn jacobian_dense(&self, pt: &Point) -> Result<Jacobian, String> {
        let m = self.n_rows();
        let nf = self.free.len();
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); m];
        let mut grad_f = vec![0.0; nf];
        let mut z = self.full(&pt.x);
        let mut plus = vec![0.0; m];
        let mut minus = vec![0.0; m];
        for j in 0..nf {
            let idx = self.free[j];
            let xj = pt.x[j];
            let h = self.fd_step * xj.abs().max(1.0);
            let (a, b) = (xj + h, xj - h);
            z[idx] = a;
            let fp = self.raw_eval(&z, &mut plus);
            z[idx] = b;
            let fm = self.raw_eval(&z, &mut minus);
            z[idx] = xj;
            let denom = a - b;
            for i in 0..m {
                let d = plus[i] - minus[i];
                if d != 0.0 {
                    let v = d / denom * self.row_scale[i];
                    if !v.is_finite() {
                        return Err(self.row_name(i));
                    }
                    rows[i].push((j as u32, v));
                } else if !plus[i].is_finite() {
                    return Err(self.row_name(i));
                }
            }
            if self.n_obj == 0 {
                let g = (fp - fm) / denom * self.obj_scale;
                if !g.is_finite() {
                    return Err("objective".into());
                }
                grad_f[j] = g;
            }
        }
        if self.n_obj > 0 {
            for (i, row) in rows[..self.n_obj].iter().enumerate() {
                let w = 2.0 * pt.rows[i];
                for &(j, v) in row {
                    grad_f[j as usize] += w * v;
                }
            }
        }
        Ok(Jacobian { rows, grad_f })
    }

    /// Gradient-based scaling, fixed once from the starting point.
    fn set_scaling(&mut self, jac: &Jacobian) {
        let gmax = norm_inf(&jac.grad_f);
        let s_f = if gmax > GRADIENT_SCALE_TARGET {
            GRADIENT_SCALE_TARGET / gmax
        } else {
            1.0
        };
        self.obj_scale = s_f;
        let root = s_f.sqrt();
        for i in 0..self.n_obj {
            self.row_scale[i] = root;
        }
        for i in self.n_obj..self.n_rows() {
            let rmax = jac.rows[i].iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
            self.row_scale[i] = if rmax > GRADIENT_SCALE_TARGET {
                GRADIENT_SCALE_TARGET / rmax
            } else {
                1.0
            };
        }
    }

    fn eq_rows<'b>(&self, v: &'b [f64]) -> &'b [f64] {
        &v[self.n_obj..self.n_obj + self.n_eq]
    }

    fn ineq_rows<'b>(&self, v: &'b [f64]) -> &'b [f64] {
        &v[self.n_obj + self.n_eq..]
    }

    fn unscaled_violations(&self, pt: &Point) -> (f64, f64) {
        let o = self.n_obj;
        let e = o + self.n_eq;
        let eq = (o..e).fold(0.0f64, |m, i| m.max((pt.rows[i] / self.row_scale[i]).abs()));
        let ineq = (e..self.n_rows()).fold(0.0f64, |m, i| m.max(pt.rows[i] / self.row_scale[i]));
        (eq, ineq.max(0.0))
    }
}

struct Multipliers {
    lam: Vec<f64>,
    mu: Vec<f64>,
    rho: f64,
}

impl Multipliers {
    fn merit(&self, s: &Scaled, pt: &Point) -> f64 {
        let mut phi = pt.f;
        for (c, l) in s.eq_rows(&pt.rows).iter().zip(&self.lam) {
            phi += l * c + 0.5 * self.rho * c * c;
        }
        for (g, m) in s.ineq_rows(&pt.rows).iter().zip(&self.mu) {
            let t = (m + self.rho * g).max(0.0);
            phi += (t * t - m * m) / (2.0 * self.rho);
        }
        phi
    }

    /// Per-row first-order weights `w_i` with `grad = grad_f + sum w_i J_i`.
    fn row_weights(&self, s: &Scaled, pt: &Point) -> Vec<f64> {
        let mut w = vec![0.0; s.n_rows()];
        let (o, e) = (s.n_obj, s.n_obj + s.n_eq);
        for i in o..e {
            w[i] = self.lam[i - o] + self.rho * pt.rows[i];
        }
        for i in e..s.n_rows() {
            w[i] = (self.mu[i - e] + self.rho * pt.rows[i]).max(0.0);
        }
        w
    }

    /// Gauss-Newton curvature weights per row.
    fn curvature_weights(&self, s: &Scaled, pt: &Point) -> Vec<f64> {
        let mut w = vec![0.0; s.n_rows()];
        let (o, e) = (s.n_obj, s.n_obj + s.n_eq);
        for v in w[..o].iter_mut() {
            *v = 2.0;
        }
        for v in w[o..e].iter_mut() {
            *v = self.rho;
        }
        for i in e..s.n_rows() {
            if self.mu[i - e] + self.rho * pt.rows[i] > 0.0 {
                w[i] = self.rho;
            }
        }
        w
    }

    fn gradient(&self, s: &Scaled, pt: &Point, jac: &Jacobian) -> Vec<f64> {
        let mut g = jac.grad_f.clone();
        let w = self.row_weights(s, pt);
        for (i, row) in jac.rows.iter().enumerate().skip(s.n_obj) {
            if w[i] != 0.0 {
                for &(j, v) in row {
                    g[j as usize] += w[i] * v;
                }
            }
        }
        g
    }
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for i in 0..x.len() {
        let p = (x[i] - g[i]).clamp(lo[i], hi[i]);
        m = m.max((x[i] - p).abs());
    }
    m
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

struct InnerOutcome {
    pt: Point,
    jac: Jacobian,
    iterations: usize,
    stationarity: f64,
    /// No descent step could be found.
    stalled: bool,
}

enum InnerError {
    Numerical(String),
}

fn inner_gauss_newton(
    s: &Scaled,
    mult: &Multipliers,
    mut pt: Point,
    mut jac: Jacobian,
    tol: f64,
    max_iter: usize,
) -> Result<InnerOutcome, InnerError> {
    let nf = s.free.len();
    let mut phi = mult.merit(s, &pt);
    let mut grad = mult.gradient(s, &pt, &jac);
    let mut damping = 1e-4;
    let mut nu = 2.0;
    let mut iterations = 0;
    let mut pos = vec![usize::MAX; nf];

    loop {
        let scale = 1.0f64.max(norm_inf(&jac.grad_f));
        let pg = projected_gradient_norm(&pt.x, &grad, &s.lo, &s.hi) / scale;
        if pg <= tol || iterations >= max_iter {
            return Ok(InnerOutcome {
                pt,
                jac,
                iterations,
                stationarity: pg,
                stalled: false,
            });
        }
        iterations += 1;

        // Working set: free variables not pinned at a bound by the gradient.
        let mut work = Vec::with_capacity(nf);
        for i in 0..nf {
            let at_lo = pt.x[i] <= s.lo[i] && grad[i] > 0.0;
            let at_hi = pt.x[i] >= s.hi[i] && grad[i] < 0.0;
            if at_lo || at_hi {
                pos[i] = usize::MAX;
            } else {
                pos[i] = work.len();
                work.push(i);
            }
        }
        let w = work.len();
        let weights = mult.curvature_weights(s, &pt);
        let mut first: Vec<usize> = (0..w).collect();
        for (i, row) in jac.rows.iter().enumerate() {
            if weights[i] == 0.0 {
                continue;
            }
            let lo = row
                .iter()
                .map(|&(j, _)| pos[j as usize])
                .filter(|&p| p != usize::MAX)
                .min();
            if let Some(lo) = lo {
                for &(j, _) in row {
                    let p = pos[j as usize];
                    if p != usize::MAX && lo < first[p] {
                        first[p] = lo;
                    }
                }
            }
        }
        let mut h = Envelope::zeros(first);
        for (i, row) in jac.rows.iter().enumerate() {
            let wt = weights[i];
            if wt == 0.0 {
                continue;
            }
            for &(a, va) in row {
                let pa = pos[a as usize];
                if pa == usize::MAX || va == 0.0 {
                    continue;
                }
                for &(b, vb) in row {
                    let pb = pos[b as usize];
                    if pb == usize::MAX || pb > pa {
                        continue;
                    }
                    h.add(pa, pb, wt * va * vb);
                }
            }
        }
        let max_diag = (0..w).fold(0.0f64, |m, a| m.max(h.diag(a).abs()));
        let floor = 1e-10 * max_diag.max(1.0);
        let diag: Vec<f64> = (0..w).map(|a| h.diag(a).max(floor)).collect();
        let rhs: Vec<f64> = work.iter().map(|&i| -grad[i]).collect();

        let mut accepted = false;
        while !accepted {
            if damping > 1e20 {
                // No descent available at working precision.
                return Ok(InnerOutcome {
                    pt,
                    jac,
                    iterations,
                    stationarity: pg,
                    stalled: true,
                });
            }
            let mut a = h.clone();
            for k in 0..w {
                a.add(k, k, damping * diag[k]);
            }
            if !a.factor() {
                damping = (damping * nu).max(1e-8);
                nu *= 2.0;
                continue;
            }
            let mut step = rhs.clone();
            a.solve(&mut step);

            let mut x_new = pt.x.clone();
            for (k, &i) in work.iter().enumerate() {
                x_new[i] += step[k];
            }
            project(&mut x_new, &s.lo, &s.hi);
            let mut full_step = vec![0.0; nf];
            for &i in &work {
                full_step[i] = x_new[i] - pt.x[i];
            }
            // Predicted decrease of the local model -g.s - s.H.s / 2.
            let mut curvature = 0.0;
            for (i, row) in jac.rows.iter().enumerate() {
                if weights[i] != 0.0 {
                    let js: f64 = row.iter().map(|&(j, v)| v * full_step[j as usize]).sum();
                    curvature += weights[i] * js * js;
                }
            }
            let pred = -dot(&grad, &full_step) - 0.5 * curvature;
            if !(pred > 0.0) {
                damping = (damping * nu).max(1e-8);
                nu *= 2.0;
                continue;
            }
            let trial = match s.evaluate(&x_new) {
                Ok(p) => p,
                Err(_) => {
                    damping = (damping * nu).max(1e-8);
                    nu *= 2.0;
                    continue;
                }
            };
            let phi_new = mult.merit(s, &trial);
            let ratio = (phi - phi_new) / pred;
            if ratio > 1e-4 && phi_new.is_finite() {
                let new_jac = s.jacobian(&trial).map_err(InnerError::Numerical)?;
                grad = mult.gradient(s, &trial, &new_jac);
                let t = 2.0 * ratio - 1.0;
                damping *= (1.0 - t * t * t).max(1.0 / 3.0);
                nu = 2.0;
                pt = trial;
                jac = new_jac;
                phi = phi_new;
                accepted = true;
            } else {
                damping = (damping * nu).max(1e-8);
                nu *= 2.0;
            }
        }
    }
}

fn inner_lbfgs(
    s: &Scaled,
    mult: &Multipliers,
    memory: usize,
    mut pt: Point,
    mut jac: Jacobian,
    tol: f64,
    max_iter: usize,
) -> Result<InnerOutcome, InnerError> {
    let nf = s.free.len();
    let mut mem = LbfgsMemory::new(memory);
    let mut phi = mult.merit(s, &pt);
    let mut grad = mult.gradient(s, &pt, &jac);
    let mut iterations = 0;
    loop {
        let scale = 1.0f64.max(norm_inf(&jac.grad_f));
        let pg = projected_gradient_norm(&pt.x, &grad, &s.lo, &s.hi) / scale;
        if pg <= tol || iterations >= max_iter {
            return Ok(InnerOutcome {
                pt,
                jac,
                iterations,
                stationarity: pg,
                stalled: false,
            });
        }
        iterations += 1;
        let pinned: Vec<bool> = (0..nf)
            .map(|i| (pt.x[i] <= s.lo[i] && grad[i] > 0.0) || (pt.x[i] >= s.hi[i] && grad[i] < 0.0))
            .collect();
        let mut g_free = grad.clone();
        for i in 0..nf {
            if pinned[i] {
                g_free[i] = 0.0;
            }
        }
        let mut dir = mem.direction(&g_free);
        for i in 0..nf {
            if pinned[i] {
                dir[i] = 0.0;
            }
        }
        if dot(&dir, &g_free) >= 0.0 {
            dir = g_free.iter().map(|v| -v).collect();
            mem.clear();
        }
        let mut alpha = if mem.is_empty() {
            (1.0 / norm_inf(&dir).max(1e-300)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..60 {
            let mut x_new: Vec<f64> = pt.x.iter().zip(&dir).map(|(x, d)| x + alpha * d).collect();
            project(&mut x_new, &s.lo, &s.hi);
            let step: Vec<f64> = x_new.iter().zip(&pt.x).map(|(a, b)| a - b).collect();
            let slope = dot(&grad, &step);
            if slope >= 0.0 {
                alpha *= 0.5;
                continue;
            }
            if let Ok(trial) = s.evaluate(&x_new) {
                let phi_new = mult.merit(s, &trial);
                if phi_new <= phi + 1e-4 * slope {
                    accepted = Some((trial, phi_new, step));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, phi_new, step)) = accepted else {
            return Ok(InnerOutcome {
                pt,
                jac,
                iterations,
                stationarity: pg,
                stalled: true,
            });
        };
        let new_jac = s.jacobian(&trial).map_err(InnerError::Numerical)?;
        let new_grad = mult.gradient(s, &trial, &new_jac);
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        mem.push(step, y);
        pt = trial;
        jac = new_jac;
        grad = new_grad;
        phi = phi_new;
    }
}

fn failure(problem: &NlpProblem, z: Vec<f64>, name: String, start: Instant, outer: usize, inner: usize) -> SolveResult {
    SolveResult {
        status: SolveStatus::NumericalFailure,
        objective: f64::NAN,
        max_eq_violation: f64::NAN,
        max_ineq_violation: f64::NAN,
        outer_iterations: outer,
        inner_iterations: inner,
        wall_time: start.elapsed(),
        message: Some(format!("non-finite value in `{name}`")),
        solution: {
            debug_assert_eq!(z.len(), problem.dim);
            z
        },
    }
}

pub(crate) fn solve_augmented_lagrangian(
    problem: &NlpProblem,
    guess: &[f64],
    opts: &SolveOptions,
) -> SolveResult {
    let start = Instant::now();
    let mut s = Scaled::new(problem, guess, opts.fd_step);

    let x0 = s.x0();
    let pt = match s.evaluate(&x0) {
        Ok(p) => p,
        Err(name) => return failure(problem, s.full(&x0), name, start, 0, 0),
    };
    if let Err(name) = s.detect_sparsity(&pt) {
        return failure(problem, s.full(&x0), name, start, 0, 0);
    }
    let jac = match s.jacobian(&pt) {
        Ok(j) => j,
        Err(name) => return failure(problem, s.full(&x0), name, start, 0, 0),
    };
    s.set_scaling(&jac);
    let mut pt = s.evaluate(&x0).expect("finite at start");
    let mut jac = s.jacobian(&pt).expect("finite at start");

    let mut mult = Multipliers {
        lam: vec![0.0; s.n_eq],
        mu: vec![0.0; s.n_ineq],
        rho: opts.initial_penalty,
    };
    let mut inner_tol = 1e-2f64.max(opts.optimality_tol);
    let mut prev_infeas = f64::INFINITY;
    let mut stalled_at_cap = 0;
    let mut total_inner = 0;
    let mut status = SolveStatus::MaxIterations;
    let mut outer = 0;

    while outer < opts.max_outer_iterations {
        outer += 1;
        let budget = opts.max_inner_iterations;
        let outcome = match opts.inner {
            InnerMethod::GaussNewton => inner_gauss_newton(&s, &mult, pt, jac, inner_tol, budget),
            InnerMethod::Lbfgs { memory } => inner_lbfgs(&s, &mult, memory, pt, jac, inner_tol, budget),
        };
        let outcome = match outcome {
            Ok(o) => o,
            Err(InnerError::Numerical(name)) => {
                let z = s.full(&x0);
                return failure(problem, z, name, start, outer, total_inner);
            }
        };
        total_inner += outcome.iterations;
        pt = outcome.pt;
        jac = outcome.jac;
        if outcome.stalled {
            match s.refresh_sparsity(&pt) {
                Ok(true) => {
                    match s.jacobian(&pt) {
                        Ok(j) => jac = j,
                        Err(name) => return failure(problem, s.full(&pt.x), name, start, outer, total_inner),
                    }
                    continue;
                }
                Ok(false) => {}
                Err(name) => return failure(problem, s.full(&pt.x), name, start, outer, total_inner),
            }
        }

        // Infeasibility/complementarity measure in scaled units.
        let eq = s.eq_rows(&pt.rows);
        let ineq = s.ineq_rows(&pt.rows);
        let mut infeas = norm_inf(eq);
        for (g, m) in ineq.iter().zip(&mult.mu) {
            infeas = infeas.max(g.max(-m / mult.rho).abs());
        }
        let (veq, vineq) = s.unscaled_violations(&pt);

        // First-order multiplier update.
        for (l, c) in mult.lam.iter_mut().zip(eq) {
            *l += mult.rho * c;
        }
        for (m, g) in mult.mu.iter_mut().zip(ineq) {
            *m = (*m + mult.rho * g).max(0.0);
        }

        let feasible = veq <= opts.feasibility_tol && vineq <= opts.feasibility_tol;
        let complementary = infeas <= opts.feasibility_tol;
        if feasible && complementary && outcome.stationarity <= opts.optimality_tol {
            status = SolveStatus::Converged;
            break;
        }

        if infeas > 0.25 * prev_infeas {
            if mult.rho >= opts.max_penalty {
                stalled_at_cap += 1;
                if stalled_at_cap >= 5 && infeas > 0.9 * prev_infeas {
                    status = SolveStatus::Infeasible;
                    break;
                }
            }
            mult.rho = (mult.rho * opts.penalty_growth).min(opts.max_penalty);
        }
        prev_infeas = prev_infeas.min(infeas);
        inner_tol = (inner_tol * 0.1).max(opts.optimality_tol);
    }

    let solution = s.full(&pt.x);
    let (veq, vineq) = s.unscaled_violations(&pt);
    SolveResult {
        status,
        objective: problem.objective.value(&solution),
        max_eq_violation: veq,
        max_ineq_violation: vineq,
        outer_iterations: outer,
        inner_iterations: total_inner,
        wall_time: start.elapsed(),
        message: None,
        solution,
    }
}
