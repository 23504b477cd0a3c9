//! Branch-and-bound over binary columns.

use serde::{Deserialize, Serialize};

use super::simplex::{self, Basis};
use super::{LinearProgramSpec, Sense, SolveResult, SolveStatus, SolverError, SolverOptions, VarKind};

/// One improvement of the incumbent during the search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncumbentRecord {
    pub node: usize,
    pub objective: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpStats {
    pub nodes: usize,
    pub lp_iterations: usize,
    /// Best bound on the optimum in the problem's own sense.
    pub best_bound: f64,
    /// Relative gap `|incumbent - bound| / max(1, |incumbent|)` at termination.
    pub gap: f64,
    pub incumbents: Vec<IncumbentRecord>,
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Parent LP value in minimization form.
    bound: f64,
    basis: Option<Basis>,
}

pub(crate) fn solve(spec: &LinearProgramSpec, opts: &SolverOptions) -> Result<SolveResult, SolverError> {
    let sign = match spec.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let binaries: Vec<usize> = (0..spec.num_vars())
        .filter(|&j| spec.kinds[j] == VarKind::Binary)
        .collect();
    let mut stats = MilpStats::default();
    let mut open = vec![Node {
        lower: spec.lower.clone(),
        upper: spec.upper.clone(),
        bound: f64::NEG_INFINITY,
        basis: None,
    }];
    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let gap_of = |inc: f64, bound: f64| (inc - bound).max(0.0) / inc.abs().max(1.0);
    // bound of the open set when the gap test ends the search early
    let mut closing_bound: Option<f64> = None;

    while !open.is_empty() {
        if stats.nodes >= opts.node_limit {
            break;
        }
        let idx = match incumbent {
            // depth-first until a first incumbent exists, best-bound afterwards
            None => open.len() - 1,
            Some((_, inc)) => {
                let (i, b) = open
                    .iter()
                    .enumerate()
                    .map(|(i, n)| (i, n.bound))
                    .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
                if gap_of(inc, b) <= opts.gap_tol {
                    closing_bound = Some(b);
                    open.clear();
                    break;
                }
                i
            }
        };
        let node = open.swap_remove(idx);
        if let Some((_, inc)) = &incumbent {
            if gap_of(*inc, node.bound) <= opts.gap_tol {
                continue;
            }
        }
        stats.nodes += 1;
        let res = match &node.basis {
            Some(b) => simplex::solve(spec, &node.lower, &node.upper, Some(b), opts)
                .or_else(|_| simplex::solve(spec, &node.lower, &node.upper, None, opts))?,
            None => simplex::solve(spec, &node.lower, &node.upper, None, opts)?,
        };
        stats.lp_iterations += res.iterations;
        match res.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                if stats.nodes == 1 {
                    let mut out = res;
                    stats.best_bound = sign * f64::NEG_INFINITY;
                    stats.gap = f64::INFINITY;
                    out.milp = Some(stats);
                    return Ok(out);
                }
                return Err(SolverError::Numerical("branch-and-bound node became unbounded".into()));
            }
            SolveStatus::IterationLimit | SolveStatus::NodeLimit => {
                return Err(SolverError::Numerical("node LP hit its iteration limit".into()));
            }
        }
        let value = sign * res.objective;
        if let Some((_, inc)) = &incumbent {
            if gap_of(*inc, value) <= opts.gap_tol {
                continue;
            }
        }
        let mut branch_on = None;
        let mut most = opts.integrality_tol;
        for &j in &binaries {
            let v = res.primal[j];
            let frac = (v - v.round()).abs();
            if frac > most {
                most = frac;
                branch_on = Some(j);
            }
        }
        match branch_on {
            None => {
                let mut x = res.primal.clone();
                let mut snapped = false;
                let (mut lo, mut hi) = (node.lower.clone(), node.upper.clone());
                for &j in &binaries {
                    let r = x[j].round();
                    snapped |= r != x[j];
                    x[j] = r;
                    lo[j] = r;
                    hi[j] = r;
                }
                if snapped {
                    // re-optimize the continuous part with the binaries fixed exactly
                    let polish = match &res.basis {
                        Some(b) => simplex::solve(spec, &lo, &hi, Some(b), opts),
                        None => simplex::solve(spec, &lo, &hi, None, opts),
                    };
                    if let Ok(p) = polish {
                        stats.lp_iterations += p.iterations;
                        if p.is_optimal() {
                            x = p.primal;
                            for &j in &binaries {
                                x[j] = lo[j];
                            }
                        }
                    }
                }
                let obj = sign * spec.objective_value(&x);
                if incumbent.as_ref().map_or(true, |(_, inc)| obj < *inc) {
                    stats.incumbents.push(IncumbentRecord {
                        node: stats.nodes,
                        objective: sign * obj,
                    });
                    incumbent = Some((x, obj));
                }
            }
            Some(j) => {
                let v = res.primal[j];
                let mut down = Node {
                    lower: node.lower.clone(),
                    upper: node.upper.clone(),
                    bound: value,
                    basis: res.basis.clone(),
                };
                down.upper[j] = 0.0;
                let mut up = Node {
                    lower: node.lower,
                    upper: node.upper,
                    bound: value,
                    basis: res.basis,
                };
                up.lower[j] = 1.0;
                // the child nearer the LP value is explored first under depth-first
                if v >= 0.5 {
                    open.push(down);
                    open.push(up);
                } else {
                    open.push(up);
                    open.push(down);
                }
            }
        }
    }

    let open_bound = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let hit_limit = !open.is_empty();
    match incumbent {
        Some((x, obj)) => {
            let bound = if hit_limit { open_bound.min(obj) } else { closing_bound.unwrap_or(obj).min(obj) };
            stats.best_bound = sign * bound;
            stats.gap = gap_of(obj, bound);
            let mut out = SolveResult::without_solution(
                if hit_limit { SolveStatus::NodeLimit } else { SolveStatus::Optimal },
                stats.lp_iterations,
            );
            out.objective = sign * obj;
            out.primal = x;
            out.milp = Some(stats);
            Ok(out)
        }
        None => {
            stats.best_bound = sign * open_bound;
            stats.gap = f64::INFINITY;
            let mut out = SolveResult::without_solution(
                if hit_limit { SolveStatus::NodeLimit } else { SolveStatus::Infeasible },
                stats.lp_iterations,
            );
            out.milp = Some(stats);
            Ok(out)
        }
    }
}
