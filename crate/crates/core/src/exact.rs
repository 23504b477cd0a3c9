//! Exact solution of small instances through the scenario MILP
//!
//! ```text
//! min  c₁ᵀx₁ + λε + (1/N) Σᵢ ηᵢ
//! s.t. c₂ᵀx₂ⁱˢ − λ‖ξⁱˢ − ξᵢ‖₁ ≤ ηᵢ,   A₁x₁ + A₂x₂ⁱˢ + A₃ξⁱˢ ≤ b
//! ```
//!
//! where, for each sample ξᵢ, the candidate points ξⁱˢ take every coordinate
//! independently from `{ξᵢⱼ, ξ̄ⱼ, ξ̲ⱼ}`. The inner supremum of the dual
//! reformulation is attained on this finite grid, so the MILP is exact.
//! Sizes grow like `N·3^m`; this is a reference tool for tiny instances only.

use serde::{Deserialize, Serialize};

use crate::backend::{solve_milp_with, LinearProgramSpec, RowSense, Sense, SolveStatus, SolverOptions, VarKind};
use crate::error::{Error, Result};
use crate::model::{dot, BoxSet, Instance, PolicyStructure};
use crate::reformulation::{solve_affine, AffineOptions, FirstStageDecision};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactOptions {
    /// Largest number of (sample, candidate point) scenarios accepted.
    pub scenario_cap: usize,
    pub gap_tol: f64,
    /// Worker threads for [`exact_value_curve`].
    pub threads: usize,
    pub solver: SolverOptions,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            scenario_cap: 2000,
            gap_tol: 1e-9,
            threads: 1,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub x1: FirstStageDecision,
    pub lambda: f64,
    pub eta: Vec<f64>,
    pub objective: f64,
    pub scenario_count: usize,
}

/// Candidate points for one sample with their 1-norm distance to it.
/// Coordinates sitting on a bound contribute two options instead of three.
pub fn candidate_points(support: &BoxSet, sample: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::with_capacity(sample.len()), 0.0)];
    for (j, &s) in sample.iter().enumerate() {
        let mut options = vec![s];
        for b in [support.upper()[j], support.lower()[j]] {
            if !options.contains(&b) {
                options.push(b);
            }
        }
        let mut next = Vec::with_capacity(out.len() * options.len());
        for (pt, d) in &out {
            for &v in &options {
                let mut p: Vec<f64> = pt.clone();
                p.push(v);
                next.push((p, d + (v - s).abs()));
            }
        }
        out = next;
    }
    out
}

/// Number of scenarios [`solve_exact`] would build, without building them.
pub fn exact_scenario_count(inst: &Instance) -> usize {
    inst.samples
        .points()
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(j, &s)| {
                    let (l, u) = (inst.support.lower()[j], inst.support.upper()[j]);
                    let mut k = 1;
                    if u != s {
                        k += 1;
                    }
                    if l != s && l != u {
                        k += 1;
                    }
                    k
                })
                .fold(1usize, |acc, k| acc.saturating_mul(k))
        })
        .fold(0usize, |acc, c| acc.saturating_add(c))
}

pub fn solve_exact(inst: &Instance, opts: &ExactOptions) -> Result<ExactSolution> {
    inst.validate()?;
    let count = exact_scenario_count(inst);
    if count > opts.scenario_cap {
        return Err(Error::CapExceeded {
            what: "exact scenario MILP".into(),
            needed: count,
            cap: opts.scenario_cap,
        });
    }
    let (n1, n2, nl) = (inst.n1(), inst.n2(), inst.num_rows());
    let n = inst.samples.len();
    let nb = inst.first_stage.n_binary;
    let rec = &inst.recourse;
    let mut spec = LinearProgramSpec::new(Sense::Minimize);
    for k in 0..n1 {
        if k < nb {
            spec.add_var(inst.c1[k], 0.0, 1.0, VarKind::Binary);
        } else {
            spec.add_var(inst.c1[k], f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous);
        }
    }
    let lambda = spec.add_var(inst.epsilon, 0.0, f64::INFINITY, VarKind::Continuous);
    let eta0 = spec.num_vars();
    for _ in 0..n {
        spec.add_var(1.0 / n as f64, f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous);
    }
    for r in 0..inst.first_stage.g.nrows() {
        let row = inst.first_stage.g.row(r);
        spec.add_constraint(sparse(row, 0), RowSense::Le, inst.first_stage.rhs[r]);
    }
    // rows free of x₁ with a single recourse coefficient become column bounds
    let singleton: Vec<Option<(usize, f64)>> = (0..nl)
        .map(|l| {
            if rec.a1.row(l).iter().any(|v| *v != 0.0) {
                return None;
            }
            let mut nz = rec.a2.row(l).iter().enumerate().filter(|e| *e.1 != 0.0);
            match (nz.next(), nz.next()) {
                (Some((i, &a)), None) => Some((i, a)),
                _ => None,
            }
        })
        .collect();
    for (i, sample) in inst.samples.points().iter().enumerate() {
        for (xi, dist) in candidate_points(&inst.support, sample) {
            let base = spec.num_vars();
            let mut lo = vec![f64::NEG_INFINITY; n2];
            let mut hi = vec![f64::INFINITY; n2];
            let mut rows = Vec::new();
            for l in 0..nl {
                let rhs = rec.b[l] - dot(rec.a3.row(l), &xi);
                match singleton[l] {
                    Some((k, a)) if a > 0.0 => hi[k] = hi[k].min(rhs / a),
                    Some((k, a)) => lo[k] = lo[k].max(rhs / a),
                    None => {
                        let mut coeffs = sparse(rec.a1.row(l), 0);
                        coeffs.extend(sparse(rec.a2.row(l), base));
                        if coeffs.is_empty() {
                            if rhs < 0.0 {
                                return Err(Error::Infeasible(format!("recourse row {l} cannot hold at xi = {xi:?}")));
                            }
                            continue;
                        }
                        rows.push((coeffs, rhs));
                    }
                }
            }
            for k in 0..n2 {
                if lo[k] > hi[k] {
                    return Err(Error::Infeasible(format!("recourse bounds conflict at xi = {xi:?}")));
                }
                spec.add_var(0.0, lo[k], hi[k], VarKind::Continuous);
            }
            for (coeffs, rhs) in rows {
                spec.add_constraint(coeffs, RowSense::Le, rhs);
            }
            let mut epi = sparse(&inst.c2, base);
            if dist != 0.0 {
                epi.push((lambda, -dist));
            }
            epi.push((eta0 + i, -1.0));
            spec.add_constraint(epi, RowSense::Le, 0.0);
        }
    }
    let solver = SolverOptions {
        gap_tol: opts.gap_tol,
        ..opts.solver.clone()
    };
    let res = solve_milp_with(&spec, &solver)?;
    match res.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(Error::Infeasible("no first-stage decision has feasible recourse on every candidate point".into())),
        SolveStatus::Unbounded => return Err(Error::Unbounded("exact scenario MILP".into())),
        SolveStatus::NodeLimit => return Err(Error::NodeLimit("exact scenario MILP".into())),
        SolveStatus::IterationLimit => return Err(Error::Numerical("exact scenario MILP iteration limit".into())),
    }
    Ok(ExactSolution {
        x1: FirstStageDecision::from_flat(&res.primal[..n1], nb),
        lambda: res.primal[lambda],
        eta: res.primal[eta0..eta0 + n].to_vec(),
        objective: res.objective,
        scenario_count: count,
    })
}

/// Exact optimal value at every radius of an ascending grid.
pub fn exact_value_curve(inst: &Instance, eps_grid: &[f64], opts: &ExactOptions) -> Result<Vec<f64>> {
    if eps_grid.iter().any(|e| !(*e >= 0.0)) || eps_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Input("epsilon grid must be ascending and nonnegative".into()));
    }
    let solve_one = |eps: f64| solve_exact(&inst.with_epsilon(eps), opts).map(|s| s.objective);
    let threads = opts.threads.max(1).min(eps_grid.len().max(1));
    if threads == 1 {
        return eps_grid.iter().map(|&e| solve_one(e)).collect();
    }
    let chunk = eps_grid.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = eps_grid
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|&e| solve_one(e)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("exact solve thread panicked"))
            .collect()
    })
}

/// Affine optimum minus exact optimum; `+∞` when no affine policy is feasible.
pub fn affine_gap(
    inst: &Instance,
    structure: &PolicyStructure,
    affine: &AffineOptions,
    exact: &ExactOptions,
) -> Result<f64> {
    let ex = solve_exact(inst, exact)?;
    match solve_affine(inst, structure, affine) {
        Ok(sol) => Ok(sol.objective - ex.objective),
        Err(Error::Infeasible(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn sparse(row: &[f64], offset: usize) -> Vec<(usize, f64)> {
    row.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(k, &v)| (offset + k, v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidates_dedupe_bound_coordinates() {
        let b = BoxSet::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        assert_eq!(candidate_points(&b, &[1.0, 1.0]).len(), 9);
        let on_bound = candidate_points(&b, &[0.0, 1.0]);
        assert_eq!(on_bound.len(), 6);
        assert!(on_bound.iter().any(|(p, d)| p == &vec![2.0, 0.0] && *d == 3.0));
    }
}
