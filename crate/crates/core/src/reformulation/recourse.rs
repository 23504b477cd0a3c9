//! Second-stage LPs and the worst-case recourse-feasibility search.

use serde::{Deserialize, Serialize};

use crate::backend::{
    solve_lp_warm, solve_milp_with, Basis, LinearProgramSpec, RowSense, Sense, SolveStatus, SolverOptions, VarKind,
};
use crate::error::{Error, Result};
use crate::model::{BoxSet, Instance};

/// How to maximize the feasibility violation over the support vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeasibilityMethod {
    /// Solve the violation LP at every vertex.
    Enumerate,
    /// Dualize the violation LP and search the vertices with a MILP.
    Milp,
    /// Enumerate when the vertex count is at most the configured threshold, MILP otherwise.
    Auto,
}

fn recourse_lp(inst: &Instance, rhs: &[f64], with_violation: bool) -> LinearProgramSpec {
    let n2 = inst.n2();
    let mut spec = LinearProgramSpec::new(Sense::Minimize);
    for i in 0..n2 {
        let cost = if with_violation { 0.0 } else { inst.c2[i] };
        spec.add_var(cost, f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous);
    }
    let y = with_violation.then(|| spec.add_var(1.0, 0.0, f64::INFINITY, VarKind::Continuous));
    let a2 = &inst.recourse.a2;
    for l in 0..inst.num_rows() {
        let mut coeffs: Vec<(usize, f64)> = a2.row(l).iter().enumerate().filter(|e| *e.1 != 0.0).map(|(i, &v)| (i, v)).collect();
        if let Some(y) = y {
            coeffs.push((y, -1.0));
        }
        spec.add_constraint(coeffs, RowSense::Le, rhs[l]);
    }
    spec
}

/// Optimal recourse `min c₂ᵀx₂` at `(x₁, ξ)`; returns `(x₂, cost)`.
pub fn second_stage(x1: &[f64], xi: &[f64], inst: &Instance) -> Result<(Vec<f64>, f64)> {
    let rhs = inst.recourse.residual_rhs(x1, xi);
    let spec = recourse_lp(inst, &rhs, false);
    let res = crate::backend::solve_lp(&spec)?;
    match res.status {
        SolveStatus::Optimal => Ok((res.primal.clone(), res.objective)),
        SolveStatus::Infeasible => Err(Error::RecourseInfeasible { xi: xi.to_vec() }),
        SolveStatus::Unbounded => Err(Error::Unbounded(format!("recourse cost unbounded below at xi = {xi:?}"))),
        s => Err(Error::Numerical(format!("recourse LP ended with status {s:?}"))),
    }
}

/// Reusable recourse LP whose right-hand side changes with ξ. Successive solves
/// warm-start from the previous basis.
pub struct RecourseSolver<'a> {
    inst: &'a Instance,
    spec: LinearProgramSpec,
    basis: Option<Basis>,
    opts: SolverOptions,
    violation: bool,
}

impl<'a> RecourseSolver<'a> {
    /// Solver for the violation LP `min y s.t. A₁x₁ + A₂x₂ + A₃ξ ≤ b + 1y, y ≥ 0`.
    pub fn violation(inst: &'a Instance) -> Self {
        let rhs = vec![0.0; inst.num_rows()];
        RecourseSolver {
            inst,
            spec: recourse_lp(inst, &rhs, true),
            basis: None,
            opts: SolverOptions::default(),
            violation: true,
        }
    }

    /// Solver for the cost LP `min c₂ᵀx₂`.
    pub fn cost(inst: &'a Instance) -> Self {
        let rhs = vec![0.0; inst.num_rows()];
        RecourseSolver {
            inst,
            spec: recourse_lp(inst, &rhs, false),
            basis: None,
            opts: SolverOptions::default(),
            violation: false,
        }
    }

    /// Returns `(x₂, objective)` or the terminal status when not optimal.
    pub fn solve(&mut self, x1: &[f64], xi: &[f64]) -> Result<std::result::Result<(Vec<f64>, f64), SolveStatus>> {
        let rhs = self.inst.recourse.residual_rhs(x1, xi);
        for (row, r) in self.spec.constraints.iter_mut().zip(rhs) {
            row.rhs = r;
        }
        let res = match &self.basis {
            Some(b) => solve_lp_warm(&self.spec, &self.spec.lower, &self.spec.upper, b, &self.opts)?,
            None => crate::backend::solve_lp_with(&self.spec, &self.opts)?,
        };
        if res.is_optimal() {
            self.basis = res.basis.clone();
            let n2 = self.inst.n2();
            let obj = if self.violation { res.primal[n2].max(0.0) } else { res.objective };
            Ok(Ok((res.primal[..n2].to_vec(), obj)))
        } else {
            self.basis = None;
            Ok(Err(res.status))
        }
    }
}

/// Minimal uniform relaxation `y` of the recourse rows needed for a recourse
/// decision to exist at `(x₁, ξ)`. Zero exactly when the recourse is feasible.
pub fn feasibility_value(x1: &[f64], xi: &[f64], inst: &Instance) -> Result<f64> {
    match RecourseSolver::violation(inst).solve(x1, xi)? {
        Ok((_, v)) => Ok(v),
        Err(s) => Err(Error::Numerical(format!("violation LP ended with status {s:?}"))),
    }
}

/// Maximizes [`feasibility_value`] over the vertices of `support`.
pub fn feasibility_subproblem(
    x1: &[f64],
    support: &BoxSet,
    inst: &Instance,
    method: FeasibilityMethod,
    vertex_cap: usize,
    enumerate_threshold: usize,
    threads: usize,
) -> Result<(Vec<f64>, f64)> {
    let k = support.effective_dim();
    let count = if k < usize::BITS as usize - 1 { 1usize << k } else { usize::MAX };
    let method = match method {
        FeasibilityMethod::Auto if count <= enumerate_threshold.min(vertex_cap) => FeasibilityMethod::Enumerate,
        FeasibilityMethod::Auto => FeasibilityMethod::Milp,
        other => other,
    };
    match method {
        FeasibilityMethod::Enumerate => feasibility_by_enumeration_threaded(x1, support, inst, vertex_cap, threads),
        _ => feasibility_by_milp(x1, support, inst),
    }
}

/// Visits the vertices in Gray-code order so consecutive LPs differ in one coordinate.
pub fn feasibility_by_enumeration(
    x1: &[f64],
    support: &BoxSet,
    inst: &Instance,
    vertex_cap: usize,
) -> Result<(Vec<f64>, f64)> {
    feasibility_by_enumeration_threaded(x1, support, inst, vertex_cap, 1)
}

/// [`feasibility_by_enumeration`] with the Gray-code sequence cut into one
/// contiguous range per thread. Ties keep the earliest vertex in sequence order,
/// so the result does not depend on the thread count.
pub fn feasibility_by_enumeration_threaded(
    x1: &[f64],
    support: &BoxSet,
    inst: &Instance,
    vertex_cap: usize,
    threads: usize,
) -> Result<(Vec<f64>, f64)> {
    let free = support.free_coords();
    let k = free.len();
    if k >= usize::BITS as usize - 1 || (1usize << k) > vertex_cap {
        return Err(Error::CapExceeded {
            what: format!("enumerating 2^{k} support vertices"),
            needed: if k < 63 { 1usize << k } else { usize::MAX },
            cap: vertex_cap,
        });
    }
    let total = 1usize << k;
    let threads = threads.max(1).min(total);
    let chunk = total.div_ceil(threads);
    let scan = |start: usize, end: usize| -> Result<(Vec<f64>, f64)> {
        let mut solver = RecourseSolver::violation(inst);
        let gray = start ^ (start >> 1);
        let mut xi = support.vertex_from_bits(|_| false);
        for (b, &j) in free.iter().enumerate() {
            if gray >> b & 1 == 1 {
                xi[j] = support.upper()[j];
            }
        }
        let mut best = (xi.clone(), f64::NEG_INFINITY);
        for step in start..end {
            if step > start {
                // flip the coordinate given by the lowest set bit of `step`
                let j = free[step.trailing_zeros() as usize];
                xi[j] = if xi[j] == support.lower()[j] { support.upper()[j] } else { support.lower()[j] };
            }
            let v = match solver.solve(x1, &xi)? {
                Ok((_, v)) => v,
                Err(s) => return Err(Error::Numerical(format!("violation LP ended with status {s:?}"))),
            };
            if v > best.1 {
                best = (xi.clone(), v);
            }
        }
        Ok(best)
    };
    if threads == 1 {
        return scan(0, total);
    }
    let parts: Vec<Result<(Vec<f64>, f64)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let scan = &scan;
                s.spawn(move || scan(t * chunk, ((t + 1) * chunk).min(total)))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("vertex scan thread panicked")).collect()
    });
    let mut best: Option<(Vec<f64>, f64)> = None;
    for p in parts {
        let p = p?;
        if best.as_ref().is_none_or(|b| p.1 > b.1) {
            best = Some(p);
        }
    }
    Ok(best.expect("at least one range"))
}

/// Dual form: `max λᵀ(A₁x₁ + A₃ξ − b)` over `λ ≥ 0, A₂ᵀλ = 0, 1ᵀλ ≤ 1` and
/// `ξ = ξ̲ + ζ∘(ξ̄ − ξ̲)` with binary ζ. Each product `λₗζⱼ` is replaced by `w`
/// under its McCormick envelope, which is exact because `λₗ ∈ [0, 1]` and ζ is binary.
pub fn feasibility_by_milp(x1: &[f64], support: &BoxSet, inst: &Instance) -> Result<(Vec<f64>, f64)> {
    let (nl, n2, m) = (inst.num_rows(), inst.n2(), inst.m());
    let rec = &inst.recourse;
    let mut spec = LinearProgramSpec::new(Sense::Maximize);
    // λ
    let base = rec.residual_rhs(x1, support.lower());
    for &r in base.iter() {
        spec.add_var(-r, 0.0, 1.0, VarKind::Continuous);
    }
    // ζ for free coordinates
    let free = support.free_coords();
    let mut zeta = vec![usize::MAX; m];
    for &j in &free {
        zeta[j] = spec.add_var(0.0, 0.0, 1.0, VarKind::Binary);
    }
    for l in 0..nl {
        for &j in &free {
            let a = rec.a3.get(l, j);
            if a == 0.0 {
                continue;
            }
            let w = spec.add_var(a * support.width(j), 0.0, 1.0, VarKind::Continuous);
            spec.add_constraint(vec![(w, 1.0), (l, -1.0)], RowSense::Le, 0.0);
            spec.add_constraint(vec![(w, 1.0), (zeta[j], -1.0)], RowSense::Le, 0.0);
            spec.add_constraint(vec![(w, 1.0), (l, -1.0), (zeta[j], -1.0)], RowSense::Ge, -1.0);
        }
    }
    for i in 0..n2 {
        let coeffs: Vec<(usize, f64)> = (0..nl).filter(|&l| rec.a2.get(l, i) != 0.0).map(|l| (l, rec.a2.get(l, i))).collect();
        if !coeffs.is_empty() {
            spec.add_constraint(coeffs, RowSense::Eq, 0.0);
        }
    }
    spec.add_constraint((0..nl).map(|l| (l, 1.0)).collect(), RowSense::Le, 1.0);
    let opts = SolverOptions {
        gap_tol: 1e-9,
        ..SolverOptions::default()
    };
    let res = solve_milp_with(&spec, &opts)?;
    match res.status {
        SolveStatus::Optimal => {}
        SolveStatus::NodeLimit => {
            return Err(Error::NodeLimit("feasibility subproblem MILP".into()));
        }
        s => return Err(Error::Numerical(format!("feasibility MILP ended with status {s:?}"))),
    }
    let xi: Vec<f64> = (0..m)
        .map(|j| {
            if zeta[j] != usize::MAX && res.primal[zeta[j]] > 0.5 {
                support.upper()[j]
            } else {
                support.lower()[j]
            }
        })
        .collect();
    Ok((xi, res.objective.max(0.0)))
}
