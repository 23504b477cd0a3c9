//! Backend-neutral LP / MILP descriptions and a reference solver.
//!
//! A [`LinearProgramSpec`] is an immutable description of
//!
//! ```text
//! min / max  cᵀx
//! s.t.       aᵢᵀx {≤, =, ≥} bᵢ      for every constraint row
//!            lⱼ ≤ xⱼ ≤ uⱼ           (±∞ allowed)
//!            xⱼ ∈ {0, 1}            for binary columns
//! ```
//!
//! [`solve_lp`] runs a bounded-variable revised simplex and always returns a
//! basic (vertex) solution together with row duals. [`solve_milp`] wraps it in a
//! best-bound branch-and-bound. [`export_lp_text`] / [`parse_lp_text`] move
//! problems in and out of the common LP text format so that any external solver
//! can audit a model.

mod branch;
mod lp_format;
mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use branch::MilpStats;
pub use lp_format::{export_lp_text, parse_lp_text, LpParseError};
pub use simplex::Basis;

/// Optimization direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Sense of a single constraint row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

/// Integrality of a column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Binary,
}

/// One sparse constraint row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coefficients: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coefficients: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> Self {
        Constraint {
            coefficients,
            sense,
            rhs,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.sense {
            RowSense::Le => (act - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - act).max(0.0),
            RowSense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Backend-neutral LP / MILP.
///
/// Infinite bounds are `f64::INFINITY` / `f64::NEG_INFINITY`; large finite numbers
/// are never used as stand-ins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgramSpec {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub kinds: Vec<VarKind>,
    /// Optional column names, used by the LP text export.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
}

impl LinearProgramSpec {
    pub fn new(sense: Sense) -> Self {
        LinearProgramSpec {
            sense,
            objective: Vec::new(),
            constraints: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            kinds: Vec::new(),
            names: Vec::new(),
        }
    }

    /// Appends a column and returns its index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64, kind: VarKind) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.kinds.push(kind);
        self.objective.len() - 1
    }

    pub fn add_named_var(
        &mut self,
        name: impl Into<String>,
        cost: f64,
        lower: f64,
        upper: f64,
        kind: VarKind,
    ) -> usize {
        let n = self.num_vars();
        if self.names.len() < n {
            self.names.extend((self.names.len()..n).map(|j| format!("x{j}")));
        }
        self.names.push(name.into());
        self.add_var(cost, lower, upper, kind)
    }

    pub fn add_constraint(&mut self, coefficients: Vec<(usize, f64)>, sense: RowSense, rhs: f64) {
        self.constraints.push(Constraint::new(coefficients, sense, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn has_binaries(&self) -> bool {
        self.kinds.iter().any(|k| *k == VarKind::Binary)
    }

    pub fn var_name(&self, j: usize) -> String {
        self.names.get(j).cloned().unwrap_or_else(|| format!("x{j}"))
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Checks the structural invariants: consistent lengths, row indices in range,
    /// ordered bounds and binaries inside `[0, 1]`.
    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.kinds.len() != n {
            return Err(SolverError::InvalidSpec(format!(
                "column arrays disagree: objective {n}, lower {}, upper {}, kinds {}",
                self.lower.len(),
                self.upper.len(),
                self.kinds.len()
            )));
        }
        if !self.names.is_empty() && self.names.len() != n {
            return Err(SolverError::InvalidSpec(format!(
                "{} names for {n} columns",
                self.names.len()
            )));
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(SolverError::InvalidSpec(format!("column {j} has bounds [{lo}, {hi}]")));
            }
            if !self.objective[j].is_finite() {
                return Err(SolverError::InvalidSpec(format!("column {j} has non-finite cost")));
            }
            if self.kinds[j] == VarKind::Binary && (lo < 0.0 || hi > 1.0) {
                return Err(SolverError::InvalidSpec(format!(
                    "binary column {j} has bounds [{lo}, {hi}] outside [0, 1]"
                )));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(SolverError::InvalidSpec(format!("row {i} has non-finite rhs")));
            }
            for &(j, a) in &row.coefficients {
                if j >= n {
                    return Err(SolverError::InvalidSpec(format!(
                        "row {i} references column {j} but there are only {n}"
                    )));
                }
                if !a.is_finite() {
                    return Err(SolverError::InvalidSpec(format!("row {i} has a non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for row in &self.constraints {
            worst = worst.max(row.violation(x));
        }
        worst
    }

    /// Like [`max_violation`](Self::max_violation) but each row is first divided by
    /// its largest absolute coefficient.
    pub fn max_scaled_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for row in &self.constraints {
            let scale = row
                .coefficients
                .iter()
                .fold(0.0f64, |acc, &(_, a)| acc.max(a.abs()));
            let v = row.violation(x);
            worst = worst.max(if scale > 0.0 { v / scale } else { v });
        }
        worst
    }

    /// Dual objective `bᵀy + Σ dⱼ·xⱼ` for row duals `y` and the reduced costs they
    /// induce. Equal to the primal objective at an optimal basis.
    pub fn dual_objective(&self, x: &[f64], duals: &[f64]) -> f64 {
        let reduced = self.reduced_costs(duals);
        let rows: f64 = self
            .constraints
            .iter()
            .zip(duals)
            .map(|(row, y)| row.rhs * y)
            .sum();
        rows + reduced.iter().zip(x).map(|(d, v)| d * v).sum::<f64>()
    }

    /// `c - Aᵀy` in the problem's own objective sense.
    pub fn reduced_costs(&self, duals: &[f64]) -> Vec<f64> {
        let mut d = self.objective.clone();
        for (row, y) in self.constraints.iter().zip(duals) {
            for &(j, a) in &row.coefficients {
                d[j] -= a * y;
            }
        }
        d
    }
}

/// Outcome classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// Branch-and-bound stopped at its node limit. `primal` holds the incumbent, if any.
    NodeLimit,
}

/// Result of an LP or MILP solve.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    /// One dual per constraint (LP only), in the problem's objective sense: the
    /// reduced costs are `c - Aᵀy`.
    pub duals: Option<Vec<f64>>,
    /// True when every nonbasic column sits at one of its bounds.
    pub is_vertex: bool,
    /// Improving direction when `status` is `Unbounded`.
    pub ray: Option<Vec<f64>>,
    pub iterations: usize,
    /// Final basis, usable as a warm start for a re-solve with changed bounds.
    pub basis: Option<Basis>,
    /// Present for MILP solves.
    pub milp: Option<MilpStats>,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub(crate) fn without_solution(status: SolveStatus, iterations: usize) -> Self {
        SolveResult {
            status,
            primal: Vec::new(),
            objective: f64::NAN,
            duals: None,
            is_vertex: false,
            ray: None,
            iterations,
            basis: None,
            milp: None,
        }
    }
}

/// Tolerances and limits shared by the LP and MILP solvers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub integrality_tol: f64,
    /// Relative MILP gap at which branch-and-bound stops.
    pub gap_tol: f64,
    pub max_iterations: usize,
    pub node_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            integrality_tol: 1e-6,
            gap_tol: 1e-6,
            max_iterations: 200_000,
            node_limit: 200_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid problem: {0}")]
    InvalidSpec(String),
    #[error("numerical instability: {0}")]
    Numerical(String),
}

/// Solves a continuous LP. Binary columns are rejected; use [`solve_milp`].
pub fn solve_lp(spec: &LinearProgramSpec) -> Result<SolveResult, SolverError> {
    solve_lp_with(spec, &SolverOptions::default())
}

pub fn solve_lp_with(spec: &LinearProgramSpec, opts: &SolverOptions) -> Result<SolveResult, SolverError> {
    spec.validate()?;
    if spec.has_binaries() {
        return Err(SolverError::InvalidSpec(
            "solve_lp received binary columns; use solve_milp".into(),
        ));
    }
    simplex::solve(spec, &spec.lower, &spec.upper, None, opts)
}

/// Re-solves `spec` starting from a previous basis (e.g. after bound changes).
pub fn solve_lp_warm(
    spec: &LinearProgramSpec,
    lower: &[f64],
    upper: &[f64],
    basis: &Basis,
    opts: &SolverOptions,
) -> Result<SolveResult, SolverError> {
    simplex::solve(spec, lower, upper, Some(basis), opts)
}

/// Solves a mixed-binary program by best-bound branch-and-bound on the most
/// fractional binary. `gap_tol` is relative: the search stops once
/// `incumbent - bound <= gap_tol * max(1, |incumbent|)`.
pub fn solve_milp(spec: &LinearProgramSpec, gap_tol: f64) -> Result<SolveResult, SolverError> {
    let opts = SolverOptions {
        gap_tol,
        ..SolverOptions::default()
    };
    solve_milp_with(spec, &opts)
}

pub fn solve_milp_with(spec: &LinearProgramSpec, opts: &SolverOptions) -> Result<SolveResult, SolverError> {
    spec.validate()?;
    if !(opts.gap_tol >= 0.0) {
        return Err(SolverError::InvalidSpec(format!("gap tolerance {} must be >= 0", opts.gap_tol)));
    }
    branch::solve(spec, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_out_of_range_column() {
        let mut spec = LinearProgramSpec::new(Sense::Minimize);
        spec.add_var(1.0, 0.0, 1.0, VarKind::Continuous);
        spec.add_constraint(vec![(3, 1.0)], RowSense::Le, 1.0);
        assert!(matches!(spec.validate(), Err(SolverError::InvalidSpec(_))));
    }

    #[test]
    fn validate_rejects_wide_binary() {
        let mut spec = LinearProgramSpec::new(Sense::Minimize);
        spec.add_var(1.0, 0.0, 2.0, VarKind::Binary);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn solve_lp_refuses_binaries() {
        let mut spec = LinearProgramSpec::new(Sense::Minimize);
        spec.add_var(1.0, 0.0, 1.0, VarKind::Binary);
        assert!(solve_lp(&spec).is_err());
    }
}
