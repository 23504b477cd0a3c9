//! Finite reformulation of the affine-policy problem and the two solution
//! algorithms: a cutting-plane loop over support vertices ([`solve_affine`]) and a
//! column-and-constraint generation loop on the refined set Ω that additionally
//! certifies recourse feasibility on every vertex of Ξ ([`solve_affine_refined`]).

mod master;
mod recourse;

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::backend::{export_lp_text, solve_milp_with, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::model::{dot, AffinePolicy, BoxSet, Instance, PolicyStructure, DEFAULT_VERTEX_CAP};
use crate::refinement::build_omega;
use crate::worst_case::DualCertificate;

pub use master::{build_master, MasterLayout};
pub use recourse::{
    feasibility_by_enumeration, feasibility_by_enumeration_threaded, feasibility_by_milp, feasibility_subproblem, feasibility_value, second_stage,
    FeasibilityMethod, RecourseSolver,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineOptions {
    /// Stopping tolerance on row and feasibility violations, in units of the
    /// normalized recourse rows (each row scaled to max-abs coefficient 1).
    pub rho: f64,
    /// Relative MILP gap for each master solve.
    pub gap_tol: f64,
    pub max_iterations: usize,
    /// Cap on explicit support-vertex enumeration.
    pub max_vertices: usize,
    pub feasibility_method: FeasibilityMethod,
    /// `Auto` enumerates vertices when there are at most this many.
    pub enumerate_threshold: usize,
    /// Worker threads for the per-row violation scan and the vertex enumeration.
    pub threads: usize,
    /// When set, every master problem is written there as `master_NNN.lp`.
    pub export_lp_dir: Option<PathBuf>,
    pub solver: SolverOptions,
}

impl Default for AffineOptions {
    fn default() -> Self {
        AffineOptions {
            rho: 1e-6,
            gap_tol: 1e-6,
            max_iterations: 1000,
            max_vertices: DEFAULT_VERTEX_CAP,
            feasibility_method: FeasibilityMethod::Auto,
            enumerate_threshold: 1 << 13,
            threads: 1,
            export_lp_dir: None,
            solver: SolverOptions {
                feasibility_tol: 1e-9,
                ..SolverOptions::default()
            },
        }
    }
}

/// One pass of the outer loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Master objective `L_P`.
    pub lower_bound: f64,
    /// Largest row violation `F_P`; `None` when the row scan was skipped.
    pub row_violation: Option<f64>,
    /// Largest recourse violation over Ξ's vertices `V^f_P` (refined mode).
    pub feasibility_violation: Option<f64>,
    pub row_vertices_added: usize,
    pub feasibility_vertex_added: bool,
    pub master_vars: usize,
    pub master_rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterState {
    /// Per recourse row, the vertices at which the policy is required to satisfy it.
    pub row_vertex_sets: Vec<Vec<Vec<f64>>>,
    /// Vertices of Ξ carrying their own recourse block (refined mode).
    pub feasibility_vertices: Vec<Vec<f64>>,
    pub iteration: usize,
    pub history: Vec<IterationRecord>,
    /// Rounds in which an unbounded master was cut off along its ray.
    pub ray_rounds: usize,
    #[serde(skip)]
    seen_rows: Vec<HashSet<Vec<u64>>>,
    #[serde(skip)]
    seen_feasibility: HashSet<Vec<u64>>,
}

fn key(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

impl MasterState {
    /// Every row starts with `initial_vertex`; refined mode also seeds one feasibility vertex.
    pub fn new(num_rows: usize, initial_vertex: Vec<f64>, initial_feasibility: Option<Vec<f64>>) -> Self {
        let mut st = MasterState {
            row_vertex_sets: vec![Vec::new(); num_rows],
            feasibility_vertices: Vec::new(),
            iteration: 0,
            history: Vec::new(),
            ray_rounds: 0,
            seen_rows: vec![HashSet::new(); num_rows],
            seen_feasibility: HashSet::new(),
        };
        for l in 0..num_rows {
            st.add_row_vertex(l, initial_vertex.clone());
        }
        if let Some(v) = initial_feasibility {
            st.add_feasibility_vertex(v);
        }
        st
    }

    /// Returns false (and changes nothing) when `v` is already in row `l`'s set.
    pub fn add_row_vertex(&mut self, l: usize, v: Vec<f64>) -> bool {
        if self.seen_rows[l].insert(key(&v)) {
            self.row_vertex_sets[l].push(v);
            true
        } else {
            false
        }
    }

    pub fn add_feasibility_vertex(&mut self, v: Vec<f64>) -> bool {
        if self.seen_feasibility.insert(key(&v)) {
            self.feasibility_vertices.push(v);
            true
        } else {
            false
        }
    }

    pub fn num_row_vertices(&self) -> usize {
        self.row_vertex_sets.iter().map(Vec::len).sum()
    }
}

/// First-stage decision split into its binary and continuous parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstStageDecision {
    pub binary: Vec<f64>,
    pub continuous: Vec<f64>,
}

impl FirstStageDecision {
    pub fn from_flat(x1: &[f64], n_binary: usize) -> Self {
        FirstStageDecision {
            binary: x1[..n_binary].iter().map(|v| v.round()).collect(),
            continuous: x1[n_binary..].to_vec(),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.binary.clone();
        v.extend_from_slice(&self.continuous);
        v
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineSolution {
    pub x1: FirstStageDecision,
    pub policy: AffinePolicy,
    pub theta: Vec<f64>,
    pub objective: f64,
    pub certificate: DualCertificate,
    /// Box over which the policy was certified (Ξ, or Ω in refined mode).
    pub ball_box: BoxSet,
    pub refined: bool,
    pub trace: MasterState,
}

impl AffineSolution {
    pub fn x1_vec(&self) -> Vec<f64> {
        self.x1.to_vec()
    }

    pub fn iterations(&self) -> usize {
        self.trace.iteration
    }

    pub fn lower_bounds(&self) -> Vec<f64> {
        self.trace.history.iter().map(|h| h.lower_bound).collect()
    }
}

/// Most violated vertex of recourse row `l` for the policy over `ball_box`:
/// with `g = row_l(A₂A + A₃)`, take `ξⱼ = upper` when `gⱼ > 0` and `lower` otherwise.
pub fn row_violation(
    inst: &Instance,
    l: usize,
    x1: &[f64],
    policy: &AffinePolicy,
    ball_box: &BoxSet,
) -> (Vec<f64>, f64) {
    let rec = &inst.recourse;
    let a2 = rec.a2.row(l);
    let m = ball_box.dim();
    let mut g = rec.a3.row(l).to_vec();
    for (i, &a) in a2.iter().enumerate() {
        if a != 0.0 {
            for (gj, s) in g.iter_mut().zip(policy.slope.row(i)) {
                *gj += a * s;
            }
        }
    }
    let constant = dot(rec.a1.row(l), x1) + dot(a2, &policy.intercept) - rec.b[l];
    let xi: Vec<f64> = (0..m)
        .map(|j| if g[j] > 0.0 { ball_box.upper()[j] } else { ball_box.lower()[j] })
        .collect();
    let value = constant + dot(&g, &xi);
    (xi, value)
}

/// [`row_violation`] for every row, optionally split across threads. Results are
/// in row order regardless of the thread count.
pub fn row_violations(
    inst: &Instance,
    x1: &[f64],
    policy: &AffinePolicy,
    ball_box: &BoxSet,
    threads: usize,
) -> Vec<(Vec<f64>, f64)> {
    let rows = inst.num_rows();
    let threads = threads.max(1).min(rows.max(1));
    if threads == 1 {
        return (0..rows).map(|l| row_violation(inst, l, x1, policy, ball_box)).collect();
    }
    let chunk = rows.div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                s.spawn(move || {
                    (t * chunk..((t + 1) * chunk).min(rows))
                        .map(|l| row_violation(inst, l, x1, policy, ball_box))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("row scan thread panicked")).collect()
    })
}

/// Cutting-plane solve of the affine-policy problem over the full support Ξ.
pub fn solve_affine(inst: &Instance, structure: &PolicyStructure, opts: &AffineOptions) -> Result<AffineSolution> {
    inst.validate()?;
    run(inst, structure, inst.support.clone(), false, opts)
}

/// Column-and-constraint generation over Ω = Ξ ∩ Ξᵃ (built from the samples, ε and β),
/// with recourse feasibility certified on every vertex of Ξ.
pub fn solve_affine_refined(
    inst: &Instance,
    structure: &PolicyStructure,
    beta: f64,
    opts: &AffineOptions,
) -> Result<AffineSolution> {
    inst.validate()?;
    let refined = build_omega(&inst.support, &inst.samples, inst.epsilon, beta)?;
    run(inst, structure, refined.omega, true, opts)
}

/// Solves the master MILP, first cutting off unbounded rays. Returns the
/// optimal master solution together with its layout.
fn solve_master(
    inst: &Instance,
    structure: &PolicyStructure,
    state: &mut MasterState,
    ball_box: &BoxSet,
    refined: bool,
    opts: &AffineOptions,
) -> Result<(Vec<f64>, f64, MasterLayout, usize, usize)> {
    let solver = SolverOptions {
        gap_tol: opts.gap_tol,
        ..opts.solver.clone()
    };
    loop {
        let (spec, layout) = build_master(inst, structure, state, ball_box, refined)?;
        if let Some(dir) = &opts.export_lp_dir {
            let path = dir.join(format!("master_{:03}.lp", state.iteration + state.ray_rounds));
            std::fs::write(&path, export_lp_text(&spec)).map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
        }
        let res = solve_milp_with(&spec, &solver)?;
        match res.status {
            SolveStatus::Optimal => {
                return Ok((res.primal, res.objective, layout, spec.num_vars(), spec.num_constraints()))
            }
            SolveStatus::Infeasible => {
                return Err(Error::Infeasible(
                    "no first-stage decision admits an affine policy feasible on the accumulated vertices".into(),
                ))
            }
            SolveStatus::NodeLimit => return Err(Error::NodeLimit("master problem".into())),
            SolveStatus::IterationLimit => return Err(Error::Numerical("master LP iteration limit".into())),
            SolveStatus::Unbounded => {
                let ray = res.ray.ok_or_else(|| Error::Numerical("unbounded master without a ray".into()))?;
                let added = ray_cuts(inst, structure, &layout, &ray, ball_box, state);
                state.ray_rounds += 1;
                if added == 0 {
                    return Err(Error::Unbounded(
                        "the affine-policy objective decreases without bound on the support".into(),
                    ));
                }
                if state.ray_rounds > opts.max_iterations {
                    return Err(Error::Numerical("too many rounds cutting off unbounded master rays".into()));
                }
            }
        }
    }
}

/// Adds, for every row whose homogeneous part increases along the ray at some
/// vertex, that vertex. Returns the number of vertices added.
fn ray_cuts(
    inst: &Instance,
    structure: &PolicyStructure,
    layout: &MasterLayout,
    ray: &[f64],
    ball_box: &BoxSet,
    state: &mut MasterState,
) -> usize {
    let scale = ray.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let dx1 = layout.x1(ray);
    let dpol = structure.assemble(layout.theta(ray));
    let rec = &inst.recourse;
    let mut added = 0;
    for l in 0..inst.num_rows() {
        let a2 = rec.a2.row(l);
        let mut g = vec![0.0; inst.m()];
        for (i, &a) in a2.iter().enumerate() {
            if a != 0.0 {
                for (gj, s) in g.iter_mut().zip(dpol.slope.row(i)) {
                    *gj += a * s;
                }
            }
        }
        let constant = dot(rec.a1.row(l), dx1) + dot(a2, &dpol.intercept);
        let xi: Vec<f64> = (0..inst.m())
            .map(|j| if g[j] > 0.0 { ball_box.upper()[j] } else { ball_box.lower()[j] })
            .collect();
        if constant + dot(&g, &xi) > 1e-9 * scale && state.add_row_vertex(l, xi) {
            added += 1;
        }
    }
    added
}

fn run(
    raw: &Instance,
    structure: &PolicyStructure,
    ball_box: BoxSet,
    refined: bool,
    opts: &AffineOptions,
) -> Result<AffineSolution> {
    structure.validate()?;
    if !(opts.rho >= 0.0) {
        return Err(Error::Input(format!("rho must be >= 0, got {}", opts.rho)));
    }
    let inst = raw.normalized();
    let mut state = MasterState::new(
        inst.num_rows(),
        ball_box.all_lower(),
        refined.then(|| inst.support.all_lower()),
    );
    let mut last_row_violation = None;
    loop {
        if state.iteration >= opts.max_iterations {
            return Err(Error::Numerical(format!(
                "no convergence within {} iterations",
                opts.max_iterations
            )));
        }
        let (x, objective, layout, master_vars, master_rows) =
            solve_master(&inst, structure, &mut state, &ball_box, refined, opts)?;
        state.iteration += 1;
        let x1 = FirstStageDecision::from_flat(layout.x1(&x), inst.first_stage.n_binary);
        let x1v = x1.to_vec();
        let theta = layout.theta(&x).to_vec();
        let policy = structure.assemble(&theta);
        let mut record = IterationRecord {
            iteration: state.iteration,
            lower_bound: objective,
            row_violation: None,
            feasibility_violation: None,
            row_vertices_added: 0,
            feasibility_vertex_added: false,
            master_vars,
            master_rows,
        };
        if refined {
            let (v, vf) = feasibility_subproblem(
                &x1v,
                &inst.support,
                &inst,
                opts.feasibility_method,
                opts.max_vertices,
                opts.enumerate_threshold,
                opts.threads,
            )?;
            record.feasibility_violation = Some(vf);
            if vf > opts.rho {
                if !state.add_feasibility_vertex(v) {
                    return Err(Error::Numerical(format!(
                        "feasibility vertex repeated with violation {vf:.3e} > rho"
                    )));
                }
                record.feasibility_vertex_added = true;
                record.row_violation = last_row_violation;
                state.history.push(record);
                continue;
            }
        }
        let viols = row_violations(&inst, &x1v, &policy, &ball_box, opts.threads);
        let worst = viols.iter().map(|v| v.1).fold(0.0f64, f64::max);
        record.row_violation = Some(worst);
        last_row_violation = Some(worst);
        if worst <= opts.rho {
            state.history.push(record);
            let mu = layout.mu(&x);
            let m = inst.m();
            let certificate = DualCertificate {
                mu0: mu[0],
                mu_plus: mu[1..1 + m].to_vec(),
                mu_minus: mu[1 + m..].to_vec(),
            };
            return Ok(AffineSolution {
                x1,
                policy,
                theta,
                objective,
                certificate,
                ball_box,
                refined,
                trace: state,
            });
        }
        for (l, (v, val)) in viols.into_iter().enumerate() {
            if val > opts.rho && state.add_row_vertex(l, v) {
                record.row_vertices_added += 1;
            }
        }
        let added = record.row_vertices_added;
        state.history.push(record);
        if added == 0 {
            return Err(Error::Numerical(format!(
                "row violation {worst:.3e} > rho at vertices already in the master"
            )));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Matrix;

    #[test]
    fn duplicate_vertices_are_not_added() {
        let mut st = MasterState::new(2, vec![0.0, 0.0], Some(vec![0.0, 0.0]));
        assert!(!st.add_row_vertex(0, vec![0.0, 0.0]));
        assert!(st.add_row_vertex(0, vec![1.0, 0.0]));
        assert!(!st.add_feasibility_vertex(vec![0.0, 0.0]));
        assert_eq!(st.num_row_vertices(), 3);
    }

    #[test]
    fn row_violation_follows_sign_rule() {
        // one row: x2 + ξ ≤ 1 with x2 = 0
        let support = BoxSet::new(vec![0.0], vec![2.0]).unwrap();
        let inst = Instance {
            c1: vec![0.0],
            c2: vec![0.0],
            first_stage: crate::model::FirstStageSpace {
                n_binary: 1,
                n_continuous: 0,
                g: Matrix::zeros(0, 1),
                rhs: vec![],
            },
            recourse: crate::model::RecourseData {
                a1: Matrix::zeros(1, 1),
                a2: Matrix::from_rows(vec![vec![1.0]], 1).unwrap(),
                a3: Matrix::from_rows(vec![vec![1.0]], 1).unwrap(),
                b: vec![1.0],
            },
            support: support.clone(),
            samples: crate::model::SampleSet::new(vec![vec![1.0]], &support).unwrap(),
            epsilon: 0.0,
        };
        let pol = AffinePolicy::zeros(1, 1);
        let (v, val) = row_violation(&inst, 0, &[0.0], &pol, &support);
        assert_eq!(v, vec![2.0]);
        assert_eq!(val, 1.0);
        // slope -1 cancels ξ: g = 0, all-lower vertex
        let pol = AffinePolicy {
            slope: Matrix::from_rows(vec![vec![-1.0]], 1).unwrap(),
            intercept: vec![0.0],
        };
        let (v, val) = row_violation(&inst, 0, &[0.0], &pol, &support);
        assert_eq!(v, vec![0.0]);
        assert_eq!(val, -1.0);
    }
}
