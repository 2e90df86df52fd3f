//! Bounded-variable LP and binary MILP solver.
//!
//! [`solve_lp`] runs a two-phase primal simplex on a dense tableau in which
//! every row carries its own bounded slack, so equality and inequality rows
//! are handled uniformly. [`solve_milp`] adds best-bound branch and bound
//! over the binary variables.

mod branch;
mod simplex;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use branch::solve_milp;
pub use simplex::solve_lp;

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub binary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// `(variable index, coefficient)` pairs.
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A minimisation problem over bounded variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            cost,
            binary: false,
        });
        self.vars.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> usize {
        self.vars.push(Variable {
            name: name.into(),
            lower: 0.0,
            upper: 1.0,
            cost,
            binary: true,
        });
        self.vars.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, xi)| v.cost * xi).sum()
    }

    pub fn binaries(&self) -> impl Iterator<Item = usize> + '_ {
        self.vars.iter().enumerate().filter(|(_, v)| v.binary).map(|(j, _)| j)
    }

    pub fn validate(&self) -> Result<()> {
        for (j, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || !v.cost.is_finite() {
                return Err(Error::invalid(format!("variable {j} ({}) has NaN data", v.name)));
            }
            if v.lower > v.upper {
                return Err(Error::invalid(format!(
                    "variable {j} ({}) has lower bound {} above upper bound {}",
                    v.name, v.lower, v.upper
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(Error::invalid(format!("variable {j} ({}) has an empty domain", v.name)));
            }
            if v.binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(Error::invalid(format!(
                    "binary variable {j} ({}) has bounds outside [0, 1]",
                    v.name
                )));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(Error::invalid(format!("constraint {i} ({}) has a non-finite rhs", c.name)));
            }
            for &(j, a) in &c.terms {
                if j >= self.vars.len() {
                    return Err(Error::invalid(format!(
                        "constraint {i} ({}) references unknown variable {j}",
                        c.name
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::invalid(format!("constraint {i} ({}) has a non-finite coefficient", c.name)));
                }
            }
        }
        Ok(())
    }

    /// Largest row violation and bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max);
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lower - xi).max(xi - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Plain-text dump in CPLEX LP style for cross-checking with other solvers.
    pub fn to_lp_string(&self) -> String {
        fn term(out: &mut String, first: bool, a: f64, name: &str) {
            if a < 0.0 && first {
                let _ = write!(out, " -{} {}", -a, name);
            } else if a < 0.0 {
                let _ = write!(out, " - {} {}", -a, name);
            } else if first {
                let _ = write!(out, " {a} {name}");
            } else {
                let _ = write!(out, " + {a} {name}");
            }
        }
        let mut s = String::from("Minimize\n obj:");
        let mut first = true;
        for v in self.vars.iter().filter(|v| v.cost != 0.0) {
            term(&mut s, first, v.cost, &v.name);
            first = false;
        }
        if first {
            s.push_str(" 0");
        }
        s.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(s, " {}:", c.name);
            let mut first = true;
            for &(j, a) in &c.terms {
                term(&mut s, first, a, &self.vars[j].name);
                first = false;
            }
            if first {
                s.push_str(" 0 x_dummy");
            }
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(s, " {rel} {}", c.rhs);
        }
        s.push_str("Bounds\n");
        for v in self.vars.iter().filter(|v| !v.binary) {
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (true, true) => {
                    let _ = writeln!(s, " {} <= {} <= {}", v.lower, v.name, v.upper);
                }
                (true, false) => {
                    let _ = writeln!(s, " {} >= {}", v.name, v.lower);
                }
                (false, true) => {
                    let _ = writeln!(s, " -inf <= {} <= {}", v.name, v.upper);
                }
                (false, false) => {
                    let _ = writeln!(s, " {} free", v.name);
                }
            }
        }
        let bins: Vec<&str> = self.vars.iter().filter(|v| v.binary).map(|v| v.name.as_str()).collect();
        if !bins.is_empty() {
            s.push_str("Binaries\n");
            for b in bins {
                let _ = writeln!(s, " {b}");
            }
        }
        s.push_str("End\n");
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: SolveStatus,
    /// Empty unless a feasible point was found.
    pub x: Vec<f64>,
    pub objective: f64,
    pub nodes_explored: usize,
}

impl LpSolution {
    pub fn has_solution(&self) -> bool {
        !self.x.is_empty()
    }

    pub(crate) fn without_point(status: SolveStatus, nodes_explored: usize) -> Self {
        let objective = match status {
            SolveStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        };
        Self {
            status,
            x: Vec::new(),
            objective,
            nodes_explored,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    pub relative_gap: f64,
    pub max_nodes: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            integrality_tol: 1e-6,
            relative_gap: 1e-9,
            max_nodes: 100_000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.feasibility_tol > 0.0 && self.integrality_tol > 0.0 && self.relative_gap > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.max_nodes == 0 {
            return Err(Error::Config("max_nodes must be at least 1".into()));
        }
        Ok(())
    }
}
