//! Line-oriented text format for libraries. Floats use Rust's shortest
//! round-trip exponent form, so export then import is bit-exact.

use std::fmt::Write as _;

use super::{LibraryEntry, Provenance, TrajectoryLibrary};
use crate::error::{Error, Result};
use crate::maneuvers::Side;
use crate::solver::{InnerMethod, SolveOptions, SolveStatus};
use crate::srbm::{Mat3, SrbmParams};
use crate::transcription::{HybridMode, ModeKind};

use super::Trajectory;

pub const FORMAT_HEADER: &str = "srbm-library";
pub const FORMAT_VERSION: &str = "v1";

const Z_PER_LINE: usize = 8;

fn side_str(s: Option<Side>) -> &'static str {
    match s {
        Some(Side::Left) => "left",
        Some(Side::Right) => "right",
        None => "none",
    }
}

impl TrajectoryLibrary {
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let w = &mut o;
        let _ = writeln!(w, "{FORMAT_HEADER} {FORMAT_VERSION}");
        let _ = writeln!(w, "parameter {}", self.parameter);
        let _ = writeln!(w, "length_scale {:e}", self.length_scale);
        let _ = write!(w, "gaps");
        for g in &self.gaps {
            let _ = write!(w, " {g:e}");
        }
        w.push('\n');

        let p = &self.provenance;
        let s = &p.solver;
        let _ = writeln!(w, "provenance");
        let _ = writeln!(w, "config_hash {}", p.config_hash);
        let _ = writeln!(w, "backend {}", p.backend);
        let _ = writeln!(w, "solver feasibility_tol {:e}", s.feasibility_tol);
        let _ = writeln!(w, "solver optimality_tol {:e}", s.optimality_tol);
        let _ = writeln!(w, "solver max_outer_iterations {}", s.max_outer_iterations);
        let _ = writeln!(w, "solver max_inner_iterations {}", s.max_inner_iterations);
        let _ = writeln!(w, "solver initial_penalty {:e}", s.initial_penalty);
        let _ = writeln!(w, "solver penalty_growth {:e}", s.penalty_growth);
        let _ = writeln!(w, "solver max_penalty {:e}", s.max_penalty);
        let _ = writeln!(w, "solver fd_step {:e}", s.fd_step);
        match s.inner {
            InnerMethod::GaussNewton => {
                let _ = writeln!(w, "solver inner gauss_newton");
            }
            InnerMethod::Lbfgs { memory } => {
                let _ = writeln!(w, "solver inner lbfgs {memory}");
            }
        }
        match &p.config {
            Some(text) => {
                let lines: Vec<&str> = text.lines().collect();
                let _ = writeln!(w, "config {}", lines.len());
                for l in lines {
                    let _ = writeln!(w, "| {l}");
                }
            }
            None => {
                let _ = writeln!(w, "config none");
            }
        }
        let _ = writeln!(w, "end provenance");

        let _ = writeln!(w, "entries {}", self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            write_entry(w, i, e);
        }
        let _ = writeln!(w, "end library");
        o
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text);
        let (n, first) = r.next_line("header")?;
        let mut head = first.split_whitespace();
        if head.next() != Some(FORMAT_HEADER) {
            return Err(Error::Parse {
                line: n,
                msg: format!("not a library file (expected `{FORMAT_HEADER} {FORMAT_VERSION}`)"),
            });
        }
        match head.next() {
            Some(FORMAT_VERSION) => {}
            found => {
                return Err(Error::Version {
                    found: found.unwrap_or("").to_string(),
                    expected: FORMAT_VERSION.to_string(),
                })
            }
        }

        let parameter = r.keyed("parameter")?.1.to_string();
        let length_scale = r.keyed_f64("length_scale")?;
        let (gn, gaps) = r.keyed("gaps")?;
        let gaps = parse_list(gn, gaps)?;

        r.expect("provenance")?;
        let config_hash = r.keyed("config_hash")?.1.to_string();
        let backend = r.keyed("backend")?.1.to_string();
        let mut solver = SolveOptions::default();
        solver.feasibility_tol = r.solver_f64("feasibility_tol")?;
        solver.optimality_tol = r.solver_f64("optimality_tol")?;
        solver.max_outer_iterations = r.solver_usize("max_outer_iterations")?;
        solver.max_inner_iterations = r.solver_usize("max_inner_iterations")?;
        solver.initial_penalty = r.solver_f64("initial_penalty")?;
        solver.penalty_growth = r.solver_f64("penalty_growth")?;
        solver.max_penalty = r.solver_f64("max_penalty")?;
        solver.fd_step = r.solver_f64("fd_step")?;
        let (n, inner) = r.keyed("solver inner")?;
        let parts: Vec<&str> = inner.split_whitespace().collect();
        solver.inner = match parts.as_slice() {
            ["gauss_newton"] => InnerMethod::GaussNewton,
            ["lbfgs", m] => InnerMethod::Lbfgs {
                memory: parse_num(n, m)?,
            },
            _ => return Err(Error::Parse { line: n, msg: format!("unknown inner method `{inner}`") }),
        };
        let (n, count) = r.keyed("config")?;
        let config = if count == "none" {
            None
        } else {
            let count: usize = parse_num(n, count)?;
            let mut lines = Vec::with_capacity(count);
            for _ in 0..count {
                let (n, l) = r.next_raw("config line")?;
                let body = l.strip_prefix("| ").or_else(|| l.strip_prefix('|')).ok_or_else(|| {
                    Error::Parse {
                        line: n,
                        msg: "config lines must start with `|`".into(),
                    }
                })?;
                lines.push(body);
            }
            Some(lines.join("\n") + "\n")
        };
        r.expect("end provenance")?;

        let (n, count) = r.keyed("entries")?;
        let count: usize = parse_num(n, count)?;
        let mut entries = Vec::with_capacity(count);
        for i in 0..count {
            entries.push(read_entry(&mut r, i)?);
        }
        r.expect("end library")?;
        if let Some((n, l)) = r.peek() {
            return Err(Error::Parse {
                line: n,
                msg: format!("unexpected content after end of library: `{l}`"),
            });
        }
        Ok(TrajectoryLibrary {
            parameter,
            length_scale,
            entries,
            gaps,
            provenance: Provenance {
                config_hash,
                backend,
                solver,
                config,
            },
        })
    }
}

fn write_entry(w: &mut String, i: usize, e: &LibraryEntry) {
    let tr = &e.trajectory;
    let _ = writeln!(w, "entry {i}");
    let _ = writeln!(w, "value {:e}", e.value);
    let _ = writeln!(w, "status {}", e.status);
    let _ = writeln!(w, "objective {:e}", e.objective);
    let _ = writeln!(w, "violations {:e} {:e}", e.max_eq_violation, e.max_ineq_violation);
    let _ = writeln!(w, "iterations {} {}", e.outer_iterations, e.inner_iterations);
    let _ = writeln!(w, "warm_started {}", e.warm_started);
    let p = tr.params();
    let _ = writeln!(w, "mass {:e}", p.mass);
    let _ = writeln!(w, "gravity {:e}", p.gravity);
    let _ = write!(w, "inertia");
    for r in 0..3 {
        for c in 0..3 {
            let _ = write!(w, " {:e}", p.inertia[(r, c)]);
        }
    }
    w.push('\n');
    let _ = writeln!(w, "modes {}", tr.modes().len());
    for (m, s) in tr.modes().iter().zip(tr.sides()) {
        let _ = writeln!(w, "mode {} {} {:e} {:e} {}", m.kind, m.knots, m.t_min, m.t_max, side_str(*s));
    }
    let _ = writeln!(w, "z {}", tr.z().len());
    for chunk in tr.z().chunks(Z_PER_LINE) {
        let line: Vec<String> = chunk.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(w, "{}", line.join(" "));
    }
    let _ = writeln!(w, "end entry");
}

fn read_entry(r: &mut Reader, i: usize) -> Result<LibraryEntry> {
    let section = format!("entry {i}");
    r.expect(&section)?;
    let value = r.keyed_f64("value")?;
    let (n, s) = r.keyed("status")?;
    let status = SolveStatus::parse(s).ok_or_else(|| Error::Parse {
        line: n,
        msg: format!("unknown status `{s}`"),
    })?;
    let objective = r.keyed_f64("objective")?;
    let (n, v) = r.keyed("violations")?;
    let v = parse_list(n, v)?;
    if v.len() != 2 {
        return Err(Error::Parse { line: n, msg: "expected 2 violation values".into() });
    }
    let (n, it) = r.keyed("iterations")?;
    let it: Vec<&str> = it.split_whitespace().collect();
    if it.len() != 2 {
        return Err(Error::Parse { line: n, msg: "expected outer and inner iteration counts".into() });
    }
    let (outer, inner) = (parse_num(n, it[0])?, parse_num(n, it[1])?);
    let (n, ws) = r.keyed("warm_started")?;
    let warm_started = parse_num(n, ws)?;
    let mass = r.keyed_f64("mass")?;
    let gravity = r.keyed_f64("gravity")?;
    let (n, j) = r.keyed("inertia")?;
    let j = parse_list(n, j)?;
    if j.len() != 9 {
        return Err(Error::Parse { line: n, msg: format!("inertia needs 9 values, got {}", j.len()) });
    }
    let params = SrbmParams {
        mass,
        gravity,
        inertia: Mat3::from_row_slice(&j),
    };
    let (n, count) = r.keyed("modes")?;
    let count: usize = parse_num(n, count)?;
    let mut modes = Vec::with_capacity(count);
    let mut sides = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, body) = r.keyed("mode")?;
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 5 {
            return Err(Error::Parse { line: n, msg: "mode needs kind, knots, t_min, t_max, side".into() });
        }
        let kind = ModeKind::parse(f[0]).ok_or_else(|| Error::Parse {
            line: n,
            msg: format!("unknown mode kind `{}`", f[0]),
        })?;
        modes.push(HybridMode::new(kind, parse_num(n, f[1])?, parse_num(n, f[2])?, parse_num(n, f[3])?));
        sides.push(match f[4] {
            "left" => Some(Side::Left),
            "right" => Some(Side::Right),
            "none" => None,
            other => return Err(Error::Parse { line: n, msg: format!("unknown side `{other}`") }),
        });
    }
    let (n, len) = r.keyed("z")?;
    let len: usize = parse_num(n, len)?;
    let mut z = Vec::with_capacity(len);
    while z.len() < len {
        let (n, l) = r.next_line(&format!("{section} decision vector"))?;
        for tok in l.split_whitespace() {
            z.push(parse_num(n, tok)?);
        }
        if z.len() > len {
            return Err(Error::Parse { line: n, msg: format!("decision vector longer than {len}") });
        }
    }
    let end_line = r.line_no();
    r.expect("end entry")?;
    let trajectory = Trajectory::new(modes, sides, params, z).map_err(|e| Error::Parse {
        line: end_line,
        msg: format!("{section}: {e}"),
    })?;
    Ok(LibraryEntry {
        value,
        trajectory,
        status,
        objective,
        max_eq_violation: v[0],
        max_ineq_violation: v[1],
        outer_iterations: outer,
        inner_iterations: inner,
        warm_started,
    })
}

fn parse_num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse `{s}`"),
    })
}

fn parse_list(line: usize, s: &str) -> Result<Vec<f64>> {
    s.split_whitespace().map(|t| parse_num(line, t)).collect()
}

/// Cursor over non-empty lines with 1-based line numbers.
struct Reader<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
    total: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        let total = text.lines().count();
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty())
            .collect();
        Self { lines, pos: 0, total }
    }

    fn line_no(&self) -> usize {
        self.lines.get(self.pos).map(|l| l.0).unwrap_or(self.total + 1)
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.lines.get(self.pos).copied()
    }

    fn next_raw(&mut self, section: &str) -> Result<(usize, &'a str)> {
        let l = self.peek().ok_or_else(|| Error::Parse {
            line: self.total + 1,
            msg: format!("unexpected end of file: missing section `{section}`"),
        })?;
        self.pos += 1;
        Ok(l)
    }

    fn next_line(&mut self, section: &str) -> Result<(usize, &'a str)> {
        self.next_raw(section).map(|(n, l)| (n, l.trim()))
    }

    fn expect(&mut self, exact: &str) -> Result<()> {
        let (n, l) = self.next_line(exact)?;
        if l != exact {
            return Err(Error::Parse {
                line: n,
                msg: format!("expected `{exact}`, found `{l}`"),
            });
        }
        Ok(())
    }

    /// Line starting with `key`; returns the remainder.
    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (n, l) = self.next_line(key)?;
        match l.strip_prefix(key) {
            Some(rest) if rest.is_empty() || rest.starts_with(' ') => Ok((n, rest.trim())),
            _ => Err(Error::Parse {
                line: n,
                msg: format!("expected `{key}`, found `{l}`"),
            }),
        }
    }

    fn keyed_f64(&mut self, key: &str) -> Result<f64> {
        let (n, v) = self.keyed(key)?;
        parse_num(n, v)
    }

    fn solver_f64(&mut self, key: &str) -> Result<f64> {
        self.keyed_f64(&format!("solver {key}"))
    }

    fn solver_usize(&mut self, key: &str) -> Result<usize> {
        let (n, v) = self.keyed(&format!("solver {key}"))?;
        parse_num(n, v)
    }
}
