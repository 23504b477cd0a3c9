//! Out-of-sample evaluation, holdout selection of the radius, the pure robust
//! and sample-average modes, and the sample-size scaling harness.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::rng;
use crate::model::{dot, AffinePolicy, BoxSet, Instance, PolicyStructure, SampleSet};
use crate::reformulation::{solve_affine, solve_affine_refined, AffineOptions, AffineSolution, RecourseSolver};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// `fixed_cost` plus the average recourse cost; `+∞` if any scenario is infeasible.
    pub mean_cost: f64,
    /// Optimal recourse cost per scenario, `+∞` where the recourse is infeasible.
    pub per_scenario_costs: Vec<f64>,
    pub infeasible_count: usize,
    pub fixed_cost: f64,
    pub scenario_count: usize,
}

impl EvaluationReport {
    /// Average over the feasible scenarios only.
    pub fn feasible_mean(&self) -> f64 {
        let feas: Vec<f64> = self.per_scenario_costs.iter().copied().filter(|c| c.is_finite()).collect();
        if feas.is_empty() {
            return f64::INFINITY;
        }
        self.fixed_cost + feas.iter().sum::<f64>() / feas.len() as f64
    }

    /// One row per scenario: `scenario,recourse_cost,feasible`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,recourse_cost,feasible\n");
        for (i, c) in self.per_scenario_costs.iter().enumerate() {
            out.push_str(&format!("{i},{c:?},{}\n", c.is_finite()));
        }
        out
    }
}

/// Optimal recourse `(x₂, cost)` per scenario, `None` where infeasible. Scenarios
/// are split into contiguous chunks across `threads`; results keep scenario order.
pub fn recourse_solutions(
    x1: &[f64],
    inst: &Instance,
    scenarios: &SampleSet,
    threads: usize,
) -> Result<Vec<Option<(Vec<f64>, f64)>>> {
    let pts = scenarios.points();
    let solve_chunk = |chunk: &[Vec<f64>]| -> Result<Vec<Option<(Vec<f64>, f64)>>> {
        let mut solver = RecourseSolver::cost(inst);
        chunk
            .iter()
            .map(|xi| match solver.solve(x1, xi)? {
                Ok(sol) => Ok(Some(sol)),
                Err(crate::backend::SolveStatus::Infeasible) => Ok(None),
                Err(crate::backend::SolveStatus::Unbounded) => {
                    Err(Error::Unbounded(format!("recourse cost unbounded below at xi = {xi:?}")))
                }
                Err(s) => Err(Error::Numerical(format!("recourse LP ended with status {s:?}"))),
            })
            .collect()
    };
    let threads = threads.max(1).min(pts.len().max(1));
    if threads == 1 {
        return solve_chunk(pts);
    }
    let size = pts.len().div_ceil(threads);
    let parts: Vec<Result<Vec<_>>> = std::thread::scope(|s| {
        let handles: Vec<_> = pts.chunks(size).map(|c| s.spawn(move || solve_chunk(c))).collect();
        handles.into_iter().map(|h| h.join().expect("evaluation thread panicked")).collect()
    });
    let mut out = Vec::with_capacity(pts.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Sample-average cost of `x1` with the recourse re-optimized per scenario.
pub fn out_of_sample(x1: &[f64], inst: &Instance, scenarios: &SampleSet, threads: usize) -> Result<EvaluationReport> {
    if scenarios.dim() != inst.m() {
        return Err(Error::Input(format!(
            "evaluation scenarios have dimension {}, instance has {}",
            scenarios.dim(),
            inst.m()
        )));
    }
    if let Some((i, _)) = scenarios.points().iter().enumerate().find(|(_, p)| !inst.support.contains(p, 0.0)) {
        return Err(Error::Input(format!("evaluation scenario {i} lies outside the support")));
    }
    let sols = recourse_solutions(x1, inst, scenarios, threads)?;
    let costs: Vec<f64> = sols.iter().map(|s| s.as_ref().map_or(f64::INFINITY, |s| s.1)).collect();
    let infeasible_count = costs.iter().filter(|c| !c.is_finite()).count();
    let fixed_cost = inst.first_stage_cost(x1);
    let mean_cost = if infeasible_count > 0 {
        f64::INFINITY
    } else {
        fixed_cost + costs.iter().sum::<f64>() / costs.len() as f64
    };
    Ok(EvaluationReport {
        mean_cost,
        per_scenario_costs: costs,
        infeasible_count,
        fixed_cost,
        scenario_count: scenarios.len(),
    })
}

/// `c₁ᵀx₁ + max_{ξ ∈ box} c₂ᵀ(Aξ + a)`, by the sign of each coordinate of `Aᵀc₂`.
pub fn robust_mode_value(policy: &AffinePolicy, x1: &[f64], inst: &Instance, ball_box: &BoxSet) -> f64 {
    let d = policy.cost_direction(&inst.c2);
    let worst: f64 = d
        .iter()
        .enumerate()
        .map(|(j, &dj)| (dj * ball_box.upper()[j]).max(dj * ball_box.lower()[j]))
        .sum();
    inst.first_stage_cost(x1) + dot(&inst.c2, &policy.intercept) + worst
}

/// Pure robust mode: the radius is set to the 1-norm diameter of the support,
/// which admits every distribution on it.
pub fn solve_robust(inst: &Instance, structure: &PolicyStructure, opts: &AffineOptions) -> Result<AffineSolution> {
    solve_affine(&inst.with_epsilon(inst.support.l1_diameter()), structure, opts)
}

/// Sample-average mode: radius zero.
pub fn solve_saa(inst: &Instance, structure: &PolicyStructure, opts: &AffineOptions) -> Result<AffineSolution> {
    solve_affine(&inst.with_epsilon(0.0), structure, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutCandidate {
    pub epsilon: f64,
    /// Validation cost; `None` when the training solve failed.
    pub validation_cost: Option<f64>,
    pub infeasible_count: usize,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutResult {
    pub epsilon: f64,
    pub candidates: Vec<HoldoutCandidate>,
    pub train_size: usize,
    pub validation_size: usize,
}

impl HoldoutResult {
    /// One row per candidate: `epsilon,validation_cost,infeasible_count,selected`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,validation_cost,infeasible_count,selected\n");
        for c in &self.candidates {
            let cost = c.validation_cost.map_or("".to_string(), |v| format!("{v:?}"));
            out.push_str(&format!("{:?},{cost},{},{}\n", c.epsilon, c.infeasible_count, c.epsilon == self.epsilon));
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HoldoutOptions {
    /// Training share of the samples.
    pub split: f64,
    pub seed: u64,
    /// Train with the refined algorithm at this β; `None` trains over the full support.
    pub beta: Option<f64>,
    pub threads: usize,
    pub affine: AffineOptions,
}

impl Default for HoldoutOptions {
    fn default() -> Self {
        HoldoutOptions {
            split: 0.75,
            seed: 0,
            beta: Some(100.0),
            threads: 1,
            affine: AffineOptions::default(),
        }
    }
}

const TIE_TOL: f64 = 1e-9;

/// Shuffles the samples, trains at each radius on the first `split` share and
/// scores on the rest. The lowest validation cost wins; ties (relative 1e-9) go to the smaller radius.
pub fn holdout_select(
    inst: &Instance,
    structure: &PolicyStructure,
    eps_grid: &[f64],
    opts: &HoldoutOptions,
) -> Result<HoldoutResult> {
    let n = inst.samples.len();
    if n < 2 {
        return Err(Error::Input("holdout needs at least two samples".into()));
    }
    if eps_grid.is_empty() || eps_grid.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return Err(Error::Input("epsilon grid must be nonempty, finite and >= 0".into()));
    }
    if !(opts.split > 0.0 && opts.split < 1.0) {
        return Err(Error::Input(format!("split must lie in (0, 1), got {}", opts.split)));
    }
    let mut grid = eps_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng(opts.seed));
    let n_train = ((opts.split * n as f64).round() as usize).clamp(1, n - 1);
    let train = inst.samples.subset(&idx[..n_train]);
    let valid = inst.samples.subset(&idx[n_train..]);
    let mut candidates = Vec::with_capacity(grid.len());
    for &eps in &grid {
        let train_inst = inst.with_samples(train.clone()).with_epsilon(eps);
        let solved = match opts.beta {
            Some(beta) => solve_affine_refined(&train_inst, structure, beta, &opts.affine),
            None => solve_affine(&train_inst, structure, &opts.affine),
        };
        let cand = match solved {
            Ok(sol) => {
                let rep = out_of_sample(&sol.x1_vec(), inst, &valid, opts.threads)?;
                HoldoutCandidate {
                    epsilon: eps,
                    validation_cost: Some(rep.mean_cost),
                    infeasible_count: rep.infeasible_count,
                    note: None,
                }
            }
            Err(e @ (Error::Infeasible(_) | Error::Unbounded(_) | Error::NodeLimit(_))) => HoldoutCandidate {
                epsilon: eps,
                validation_cost: None,
                infeasible_count: 0,
                note: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        };
        candidates.push(cand);
    }
    let mut best: Option<(f64, f64)> = None;
    for c in &candidates {
        if let Some(v) = c.validation_cost {
            // costs within TIE_TOL of each other count as ties; the grid is ascending
            if best.is_none_or(|(bv, _)| v < bv - TIE_TOL * (1.0 + bv.abs())) {
                best = Some((v, c.epsilon));
            }
        }
    }
    let Some((_, epsilon)) = best else {
        return Err(Error::Infeasible("every candidate radius failed to solve on the training samples".into()));
    };
    Ok(HoldoutResult {
        epsilon,
        candidates,
        train_size: n_train,
        validation_size: n - n_train,
    })
}

/// Per coordinate, a two-component normal mixture truncated to the support box:
/// with probability 0.7 `N(c − s·k/2, (0.6·s)²)`, otherwise
/// `N(c + (7/6)·s·k, s²)`, where `c` is the center, `s` the scale and `k` the skew.
/// The untruncated mixture has mean `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSampler {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    pub skew: f64,
}

impl MixtureSampler {
    /// Centered in the box, scale a sixth of each width.
    pub fn for_box(support: &BoxSet, skew: f64) -> Self {
        MixtureSampler {
            center: support.center(),
            scale: (0..support.dim()).map(|j| support.width(j) / 6.0).collect(),
            skew,
        }
    }

    pub fn draw<R: Rng>(&self, rng: &mut R, support: &BoxSet, n: usize) -> SampleSet {
        let pts = (0..n).map(|_| self.point(rng, support)).collect();
        SampleSet::new(pts, support).expect("draws are truncated to the box")
    }

    fn point<R: Rng>(&self, rng: &mut R, support: &BoxSet) -> Vec<f64> {
        (0..support.dim())
            .map(|j| {
                let (l, u) = (support.lower()[j], support.upper()[j]);
                let (c, s) = (self.center[j], self.scale[j]);
                if l == u || s <= 0.0 {
                    return c.clamp(l, u);
                }
                let first = Normal::new(c - 0.5 * s * self.skew, 0.6 * s).expect("positive sd");
                let second = Normal::new(c + 7.0 / 6.0 * s * self.skew, s).expect("positive sd");
                for _ in 0..1000 {
                    let v = if rng.random::<f64>() < 0.7 {
                        first.sample(rng)
                    } else {
                        second.sample(rng)
                    };
                    if v >= l && v <= u {
                        return v;
                    }
                }
                c.clamp(l, u)
            })
            .collect()
    }
}

/// `n` samples sharing one mean (the box center) and one bounding box (the whole
/// box): both corners, then mirrored pairs `p, 2c − p` of points on a grid of
/// 1/64 of each width, plus the center when `n` is odd. On boxes with dyadic
/// bounds every value is exact, so the mean and hull match bit for bit across `n`.
pub fn matched_samples<R: Rng>(rng: &mut R, support: &BoxSet, n: usize) -> SampleSet {
    assert!(n >= 2, "matched samples need n >= 2");
    let m = support.dim();
    let c = support.center();
    let mut pts = vec![support.lower().to_vec(), support.upper().to_vec()];
    while pts.len() + 2 <= n {
        let p: Vec<f64> = (0..m)
            .map(|j| support.lower()[j] + support.width(j) * f64::from(rng.random_range(0..=64u32)) / 64.0)
            .collect();
        let q: Vec<f64> = (0..m).map(|j| 2.0 * c[j] - p[j]).collect();
        pts.push(p);
        pts.push(q);
    }
    if pts.len() < n {
        pts.push(c);
    }
    SampleSet::new(pts, support).expect("grid points lie in the box")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    /// Size of the last master problem.
    pub master_vars: usize,
    pub master_rows: usize,
    /// `(vars, rows)` of every master solved, in order.
    pub master_trace: Vec<(usize, usize)>,
    pub iterations: usize,
    /// Median wall time over the repeats.
    pub median_seconds: f64,
    pub objective: f64,
}

pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("n,master_vars,master_rows,iterations,median_seconds,objective\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:?}\n",
            r.n, r.master_vars, r.master_rows, r.iterations, r.median_seconds, r.objective
        ));
    }
    out
}

/// For each `n`, builds the instance with `family(n)` and solves it with the
/// refined algorithm `repeats` times.
pub fn scaling_experiment(
    family: impl Fn(usize) -> Result<(Instance, PolicyStructure)>,
    n_list: &[usize],
    repeats: usize,
    beta: f64,
    opts: &AffineOptions,
) -> Result<Vec<ScalingRow>> {
    let repeats = repeats.max(1);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let (inst, structure) = family(n)?;
        let mut times = Vec::with_capacity(repeats);
        let mut last = None;
        for _ in 0..repeats {
            let start = Instant::now();
            let sol = solve_affine_refined(&inst, &structure, beta, opts)?;
            times.push(start.elapsed().as_secs_f64());
            last = Some(sol);
        }
        let sol = last.expect("at least one repeat");
        times.sort_by(f64::total_cmp);
        let trace: Vec<(usize, usize)> = sol.trace.history.iter().map(|h| (h.master_vars, h.master_rows)).collect();
        let &(master_vars, master_rows) = trace.last().expect("at least one master solve");
        rows.push(ScalingRow {
            n,
            master_vars,
            master_rows,
            master_trace: trace,
            iterations: sol.iterations(),
            median_seconds: times[times.len() / 2],
            objective: sol.objective,
        });
    }
    Ok(rows)
}
