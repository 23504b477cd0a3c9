//! Bounded-variable revised simplex.
//!
//! Every row `aᵢᵀx ⋈ bᵢ` becomes `aᵢᵀx + sᵢ = bᵢ` with the slack's bounds encoding
//! the sense (`≤` → `s ≥ 0`, `≥` → `s ≤ 0`, `=` → `s = 0`). Phase 1 adds one
//! artificial per violated row. The basis inverse is kept as a dense matrix,
//! updated by elementary row operations and periodically rebuilt from the
//! "kernel" of non-unit basic columns.
//!
//! Pricing is Dantzig with a Harris two-pass ratio test; after a run of
//! degenerate pivots the solver falls back to Bland's rule until progress resumes.
//! A dual simplex is used for warm starts after bound changes.

use serde::{Deserialize, Serialize};

use super::{LinearProgramSpec, RowSense, Sense, SolveResult, SolveStatus, SolverError, SolverOptions};

const PIVOT_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 80;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column held at zero.
    Free,
}

/// Snapshot of a simplex basis over structural columns followed by row slacks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub(crate) status: Vec<VarStatus>,
    pub(crate) num_structural: usize,
}

impl Basis {
    pub fn num_structural(&self) -> usize {
        self.num_structural
    }

    pub fn num_rows(&self) -> usize {
        self.status.len() - self.num_structural
    }

    pub fn num_basic(&self) -> usize {
        self.status.iter().filter(|s| **s == VarStatus::Basic).count()
    }
}

enum PrimalOutcome {
    Optimal,
    Unbounded { entering: usize, dir: f64, alpha: Vec<f64> },
    IterationLimit,
}

enum DualOutcome {
    Feasible,
    Infeasible,
    IterationLimit,
}

struct Work<'a> {
    m: usize,
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    row_scale: Vec<f64>,
    cost_scale: f64,
    /// +1 for minimize, -1 for maximize (costs are stored negated).
    sense: f64,
    b: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    art_sign: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
    opts: &'a SolverOptions,
}

pub(crate) fn solve(
    spec: &LinearProgramSpec,
    lower: &[f64],
    upper: &[f64],
    warm: Option<&Basis>,
    opts: &SolverOptions,
) -> Result<SolveResult, SolverError> {
    let mut work = Work::new(spec, lower, upper, opts);
    if work.lo.iter().zip(&work.hi).any(|(l, h)| l > h) {
        return Ok(SolveResult::without_solution(SolveStatus::Infeasible, 0));
    }
    if let Some(basis) = warm {
        if basis.num_structural == work.n && basis.num_rows() == work.m {
            match work.try_warm(basis)? {
                Some(res) => return Ok(res),
                None => work = Work::new(spec, lower, upper, opts),
            }
        }
    }
    work.cold()
}

impl<'a> Work<'a> {
    fn new(spec: &LinearProgramSpec, lower: &[f64], upper: &[f64], opts: &'a SolverOptions) -> Self {
        let n = spec.num_vars();
        let m = spec.num_constraints();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut row_scale = vec![1.0; m];
        let mut b = vec![0.0; m];
        let mut lo = Vec::with_capacity(n + 2 * m);
        let mut hi = Vec::with_capacity(n + 2 * m);
        lo.extend_from_slice(lower);
        hi.extend_from_slice(upper);
        for (i, row) in spec.constraints.iter().enumerate() {
            let amax = row.coefficients.iter().fold(0.0f64, |acc, &(_, a)| acc.max(a.abs()));
            let s = if amax > 0.0 { 1.0 / amax } else { 1.0 };
            row_scale[i] = s;
            b[i] = row.rhs * s;
            for &(j, a) in &row.coefficients {
                if a != 0.0 {
                    cols[j].push((i, a * s));
                }
            }
        }
        // merge duplicate entries in a column
        for col in cols.iter_mut() {
            col.sort_by_key(|e| e.0);
            col.dedup_by(|later, earlier| {
                if later.0 == earlier.0 {
                    earlier.1 += later.1;
                    true
                } else {
                    false
                }
            });
        }
        for row in &spec.constraints {
            let (l, h) = match row.sense {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
                RowSense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            hi.push(h);
        }
        for _ in 0..m {
            lo.push(0.0);
            hi.push(0.0);
        }
        let cmax = spec.objective.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        let cost_scale = if cmax > 0.0 { 1.0 / cmax } else { 1.0 };
        let sign = match spec.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; n + 2 * m];
        for j in 0..n {
            cost[j] = sign * spec.objective[j] * cost_scale;
        }
        Work {
            m,
            n,
            cols,
            row_scale,
            cost_scale,
            sense: sign,
            b,
            lo,
            hi,
            cost,
            art_sign: vec![1.0; m],
            x: vec![0.0; n + 2 * m],
            status: vec![VarStatus::AtLower; n + 2 * m],
            basis: vec![0; m],
            binv: vec![0.0; m * m],
            iterations: 0,
            since_refactor: 0,
            opts,
        }
    }

    fn total(&self) -> usize {
        self.n + 2 * self.m
    }

    /// Unit column description (row, sign) for slack and artificial columns.
    fn unit(&self, j: usize) -> (usize, f64) {
        if j < self.n + self.m {
            (j - self.n, 1.0)
        } else {
            let i = j - self.n - self.m;
            (i, self.art_sign[i])
        }
    }

    fn col_dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            self.cols[j].iter().map(|&(i, a)| a * y[i]).sum()
        } else {
            let (i, s) = self.unit(j);
            s * y[i]
        }
    }

    /// `B⁻¹ aⱼ`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        let mut accumulate = |i: usize, a: f64| {
            for (p, out) in alpha.iter_mut().enumerate() {
                *out += a * self.binv[p * m + i];
            }
        };
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                accumulate(i, a);
            }
        } else {
            let (i, s) = self.unit(j);
            accumulate(i, s);
        }
        alpha
    }

    /// `c_Bᵀ B⁻¹`.
    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for p in 0..m {
            let c = self.cost[self.basis[p]];
            if c != 0.0 {
                let row = &self.binv[p * m..(p + 1) * m];
                for (yi, r) in y.iter_mut().zip(row) {
                    *yi += c * r;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        self.cost[j] - self.col_dot(j, y)
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtLower => self.lo[j],
            VarStatus::AtUpper => self.hi[j],
            VarStatus::Free => 0.0,
            VarStatus::Basic => self.x[j],
        }
    }

    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut rhs = self.b.clone();
        for j in 0..self.total() {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v == 0.0 {
                continue;
            }
            if j < self.n {
                for &(i, a) in &self.cols[j] {
                    rhs[i] -= a * v;
                }
            } else {
                let (i, s) = self.unit(j);
                rhs[i] -= s * v;
            }
        }
        for p in 0..m {
            let row = &self.binv[p * m..(p + 1) * m];
            self.x[self.basis[p]] = row.iter().zip(&rhs).map(|(a, r)| a * r).sum();
        }
    }

    /// Rebuilds `B⁻¹` from scratch. Unit (slack / artificial) basics are handled
    /// implicitly, so only the structural kernel is inverted densely.
    fn refactor(&mut self) -> Result<(), SolverError> {
        let m = self.m;
        let mut owner: Vec<Option<(usize, f64)>> = vec![None; m];
        let mut structural = Vec::new();
        for p in 0..m {
            let j = self.basis[p];
            if j >= self.n {
                let (row, sign) = self.unit(j);
                if owner[row].is_some() {
                    return Err(SolverError::Numerical("two unit columns share a basis row".into()));
                }
                owner[row] = Some((p, sign));
            } else {
                structural.push(p);
            }
        }
        let free_rows: Vec<usize> = (0..m).filter(|&i| owner[i].is_none()).collect();
        let k = structural.len();
        if free_rows.len() != k {
            return Err(SolverError::Numerical("basis is not square".into()));
        }
        let mut row_index = vec![usize::MAX; m];
        for (a, &i) in free_rows.iter().enumerate() {
            row_index[i] = a;
        }
        // kernel K[a][b] = A[free_rows[a], basis[structural[b]]]
        let mut kern = vec![0.0; k * k];
        for (bcol, &p) in structural.iter().enumerate() {
            for &(i, a) in &self.cols[self.basis[p]] {
                let ai = row_index[i];
                if ai != usize::MAX {
                    kern[ai * k + bcol] = a;
                }
            }
        }
        let kinv = invert_dense(kern, k)?;
        self.binv.iter_mut().for_each(|v| *v = 0.0);
        // x_S = K⁻¹ v_R : row `bcol` of K⁻¹ maps onto position structural[bcol]
        for (bcol, &p) in structural.iter().enumerate() {
            for (a, &i) in free_rows.iter().enumerate() {
                self.binv[p * m + i] = kinv[bcol * k + a];
            }
        }
        for (row, own) in owner.iter().enumerate() {
            if let Some((p, sign)) = *own {
                self.binv[p * m + row] = sign;
            }
        }
        for (bcol, &ps) in structural.iter().enumerate() {
            for &(i, a) in &self.cols[self.basis[ps]] {
                if let Some((p, sign)) = owner[i] {
                    let f = sign * a;
                    for (ai, &r) in free_rows.iter().enumerate() {
                        self.binv[p * m + r] -= f * kinv[bcol * k + ai];
                    }
                }
            }
        }
        self.since_refactor = 0;
        self.recompute_basic_values();
        Ok(())
    }

    fn pivot(&mut self, r: usize, entering: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        {
            let row = &mut self.binv[r * m..(r + 1) * m];
            for v in row.iter_mut() {
                *v /= piv;
            }
        }
        let pivot_row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        for p in 0..m {
            if p == r || alpha[p] == 0.0 {
                continue;
            }
            let f = alpha[p];
            let row = &mut self.binv[p * m..(p + 1) * m];
            for (v, pr) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
        }
        self.basis[r] = entering;
        self.status[entering] = VarStatus::Basic;
        self.since_refactor += 1;
    }

    fn maybe_refactor(&mut self) -> Result<(), SolverError> {
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    /// Status for a column leaving the basis at its upper or lower bound.
    fn leave_status(&self, j: usize, at_upper: bool) -> VarStatus {
        if at_upper {
            VarStatus::AtUpper
        } else if self.lo[j].is_finite() {
            VarStatus::AtLower
        } else {
            VarStatus::Free
        }
    }

    fn can_increase(&self, j: usize) -> bool {
        match self.status[j] {
            VarStatus::AtLower => self.hi[j] > self.lo[j],
            VarStatus::Free => true,
            _ => false,
        }
    }

    fn can_decrease(&self, j: usize) -> bool {
        match self.status[j] {
            VarStatus::AtUpper => self.hi[j] > self.lo[j],
            VarStatus::Free => true,
            _ => false,
        }
    }

    fn primal(&mut self) -> Result<PrimalOutcome, SolverError> {
        let tol_d = self.opts.optimality_tol;
        let tol_p = self.opts.feasibility_tol;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Ok(PrimalOutcome::IterationLimit);
            }
            self.maybe_refactor()?;
            let y = self.duals();
            // pricing
            let mut entering = None;
            let mut best = 0.0;
            for j in 0..self.total() {
                if self.status[j] == VarStatus::Basic {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                let score = if d < -tol_d && self.can_increase(j) {
                    -d
                } else if d > tol_d && self.can_decrease(j) {
                    d
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, if d < 0.0 { 1.0 } else { -1.0 }));
                    break;
                }
                if score > best {
                    best = score;
                    entering = Some((j, if d < 0.0 { 1.0 } else { -1.0 }));
                }
            }
            let Some((q, dir)) = entering else {
                return Ok(PrimalOutcome::Optimal);
            };
            let alpha = self.ftran(q);
            let flip = self.hi[q] - self.lo[q];
            // ratio test: basic p moves by -dir * alpha[p] * t
            let mut leave: Option<(usize, f64, bool)> = None;
            if bland {
                let mut best_t = f64::INFINITY;
                for p in 0..self.m {
                    let rate = -dir * alpha[p];
                    let j = self.basis[p];
                    let (t, up) = if rate < -PIVOT_TOL && self.lo[j].is_finite() {
                        ((self.x[j] - self.lo[j]).max(0.0) / -rate, false)
                    } else if rate > PIVOT_TOL && self.hi[j].is_finite() {
                        ((self.hi[j] - self.x[j]).max(0.0) / rate, true)
                    } else {
                        continue;
                    };
                    let better = match leave {
                        None => true,
                        Some((lp, _, _)) => t < best_t - 1e-12 || (t <= best_t + 1e-12 && j < self.basis[lp]),
                    };
                    if better {
                        best_t = t;
                        leave = Some((p, t, up));
                    }
                }
            } else {
                let mut relaxed = f64::INFINITY;
                for p in 0..self.m {
                    let rate = -dir * alpha[p];
                    let j = self.basis[p];
                    if rate < -PIVOT_TOL && self.lo[j].is_finite() {
                        relaxed = relaxed.min((self.x[j] - self.lo[j] + tol_p) / -rate);
                    } else if rate > PIVOT_TOL && self.hi[j].is_finite() {
                        relaxed = relaxed.min((self.hi[j] - self.x[j] + tol_p) / rate);
                    }
                }
                if relaxed.is_finite() {
                    let mut best_mag = 0.0;
                    for p in 0..self.m {
                        let rate = -dir * alpha[p];
                        let j = self.basis[p];
                        let (t, up) = if rate < -PIVOT_TOL && self.lo[j].is_finite() {
                            ((self.x[j] - self.lo[j]) / -rate, false)
                        } else if rate > PIVOT_TOL && self.hi[j].is_finite() {
                            ((self.hi[j] - self.x[j]) / rate, true)
                        } else {
                            continue;
                        };
                        if t <= relaxed && rate.abs() > best_mag {
                            best_mag = rate.abs();
                            leave = Some((p, t.max(0.0), up));
                        }
                    }
                }
            }
            let step_basis = leave.map(|l| l.1).unwrap_or(f64::INFINITY);
            self.iterations += 1;
            if flip.is_finite() && flip <= step_basis {
                // bound flip, basis unchanged
                let t = flip;
                for p in 0..self.m {
                    let j = self.basis[p];
                    self.x[j] -= dir * alpha[p] * t;
                }
                self.status[q] = if dir > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
                self.x[q] = self.nonbasic_value(q);
                degenerate_run = 0;
                bland = false;
                continue;
            }
            let Some((r, t, up)) = leave else {
                return Ok(PrimalOutcome::Unbounded { entering: q, dir, alpha });
            };
            for p in 0..self.m {
                let j = self.basis[p];
                self.x[j] -= dir * alpha[p] * t;
            }
            self.x[q] += dir * t;
            let leaving = self.basis[r];
            self.x[leaving] = if up { self.hi[leaving] } else { self.lo[leaving] };
            self.status[leaving] = self.leave_status(leaving, up);
            self.pivot(r, q, &alpha);
            if t * alpha[r].abs() < 1e-12 {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_RUN_BEFORE_BLAND {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
        }
    }

    fn dual(&mut self) -> Result<DualOutcome, SolverError> {
        let tol_p = self.opts.feasibility_tol;
        let tol_d = self.opts.optimality_tol;
        let m = self.m;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Ok(DualOutcome::IterationLimit);
            }
            self.maybe_refactor()?;
            // leaving row: largest bound violation
            let mut leave = None;
            let mut worst = tol_p;
            for p in 0..m {
                let j = self.basis[p];
                let v = if self.x[j] < self.lo[j] - tol_p {
                    self.lo[j] - self.x[j]
                } else if self.x[j] > self.hi[j] + tol_p {
                    self.x[j] - self.hi[j]
                } else {
                    continue;
                };
                if v > worst {
                    worst = v;
                    leave = Some(p);
                }
            }
            let Some(r) = leave else {
                return Ok(DualOutcome::Feasible);
            };
            let jr = self.basis[r];
            let below = self.x[jr] < self.lo[jr];
            let target = if below { self.lo[jr] } else { self.hi[jr] };
            let s = if below { 1.0 } else { -1.0 };
            let y = self.duals();
            let rho: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            let mut relaxed = f64::INFINITY;
            for j in 0..self.total() {
                if self.status[j] == VarStatus::Basic || self.hi[j] <= self.lo[j] {
                    continue;
                }
                let a = self.col_dot(j, &rho);
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let ok = match self.status[j] {
                    VarStatus::AtLower => a * s < 0.0,
                    VarStatus::AtUpper => a * s > 0.0,
                    VarStatus::Free => true,
                    VarStatus::Basic => false,
                };
                if !ok {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                relaxed = relaxed.min((d.abs() + tol_d) / a.abs());
                cands.push((j, a, d));
            }
            if cands.is_empty() {
                return Ok(DualOutcome::Infeasible);
            }
            let mut q = None;
            let mut best_mag = 0.0;
            for &(j, a, d) in &cands {
                if d.abs() / a.abs() <= relaxed && a.abs() > best_mag {
                    best_mag = a.abs();
                    q = Some(j);
                }
            }
            let q = q.expect("relaxed ratio admits at least one candidate");
            let alpha = self.ftran(q);
            if alpha[r].abs() <= PIVOT_TOL {
                return Err(SolverError::Numerical("dual simplex pivot vanished after ftran".into()));
            }
            let theta = (self.x[jr] - target) / alpha[r];
            for p in 0..m {
                let j = self.basis[p];
                self.x[j] -= theta * alpha[p];
            }
            self.x[q] += theta;
            self.x[jr] = target;
            self.status[jr] = if below { self.leave_status(jr, false) } else { VarStatus::AtUpper };
            self.iterations += 1;
            self.pivot(r, q, &alpha);
        }
    }

    /// Moves nonbasic free columns into the basis where a degenerate pivot exists,
    /// so the reported point is a vertex whenever the polyhedron has one.
    fn pivot_in_free_columns(&mut self) -> Result<(), SolverError> {
        for q in 0..self.n {
            if self.status[q] != VarStatus::Free {
                continue;
            }
            let alpha = self.ftran(q);
            let mut best: Option<(usize, f64, f64, bool)> = None;
            for dir in [1.0, -1.0] {
                for p in 0..self.m {
                    let rate = -dir * alpha[p];
                    let j = self.basis[p];
                    let (t, up) = if rate < -PIVOT_TOL && self.lo[j].is_finite() {
                        ((self.x[j] - self.lo[j]).max(0.0) / -rate, false)
                    } else if rate > PIVOT_TOL && self.hi[j].is_finite() {
                        ((self.hi[j] - self.x[j]).max(0.0) / rate, true)
                    } else {
                        continue;
                    };
                    if best.map_or(true, |b| t < b.2) {
                        best = Some((p, dir, t, up));
                    }
                }
            }
            let Some((r, dir, t, up)) = best else { continue };
            for p in 0..self.m {
                let j = self.basis[p];
                self.x[j] -= dir * alpha[p] * t;
            }
            self.x[q] += dir * t;
            let leaving = self.basis[r];
            self.x[leaving] = if up { self.hi[leaving] } else { self.lo[leaving] };
            self.status[leaving] = self.leave_status(leaving, up);
            self.pivot(r, q, &alpha);
            self.maybe_refactor()?;
        }
        Ok(())
    }

    fn cold(mut self) -> Result<SolveResult, SolverError> {
        let (n, m) = (self.n, self.m);
        for j in 0..n {
            self.status[j] = if self.lo[j].is_finite() {
                VarStatus::AtLower
            } else if self.hi[j].is_finite() {
                VarStatus::AtUpper
            } else {
                VarStatus::Free
            };
            self.x[j] = self.nonbasic_value(j);
        }
        let mut resid = self.b.clone();
        for j in 0..n {
            let v = self.x[j];
            if v != 0.0 {
                for &(i, a) in &self.cols[j] {
                    resid[i] -= a * v;
                }
            }
        }
        let phase2_cost = std::mem::replace(&mut self.cost, vec![0.0; n + 2 * m]);
        let mut any_art = false;
        for i in 0..m {
            let s = n + i;
            let art = n + m + i;
            let r = resid[i];
            if r >= self.lo[s] && r <= self.hi[s] {
                self.basis[i] = s;
                self.status[s] = VarStatus::Basic;
                self.x[s] = r;
                self.status[art] = VarStatus::AtLower;
                self.binv[i * m + i] = 1.0;
            } else {
                let sv = if r < self.lo[s] { self.lo[s] } else { self.hi[s] };
                self.status[s] = if r < self.lo[s] { VarStatus::AtLower } else { VarStatus::AtUpper };
                self.x[s] = sv;
                let e = r - sv;
                self.art_sign[i] = e.signum();
                self.hi[art] = f64::INFINITY;
                self.cost[art] = 1.0;
                self.basis[i] = art;
                self.status[art] = VarStatus::Basic;
                self.x[art] = e.abs();
                self.binv[i * m + i] = self.art_sign[i];
                any_art = true;
            }
        }
        if any_art {
            match self.primal()? {
                PrimalOutcome::IterationLimit => {
                    return Ok(SolveResult::without_solution(SolveStatus::IterationLimit, self.iterations))
                }
                PrimalOutcome::Unbounded { .. } => {
                    return Err(SolverError::Numerical("phase 1 reported an unbounded ray".into()))
                }
                PrimalOutcome::Optimal => {}
            }
            self.refactor()?;
            let infeas: f64 = (n + m..n + 2 * m).map(|j| self.x[j].max(0.0)).sum();
            let bmax = self.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if infeas > self.opts.feasibility_tol * (1.0 + bmax) {
                return Ok(SolveResult::without_solution(SolveStatus::Infeasible, self.iterations));
            }
            for j in n + m..n + 2 * m {
                self.hi[j] = 0.0;
            }
        }
        self.cost = phase2_cost;
        self.finish_phase2()
    }

    fn finish_phase2(mut self) -> Result<SolveResult, SolverError> {
        match self.primal()? {
            PrimalOutcome::IterationLimit => {
                Ok(SolveResult::without_solution(SolveStatus::IterationLimit, self.iterations))
            }
            PrimalOutcome::Unbounded { entering, dir, alpha } => {
                let mut ray = vec![0.0; self.n];
                if entering < self.n {
                    ray[entering] = dir;
                }
                for p in 0..self.m {
                    let j = self.basis[p];
                    if j < self.n {
                        ray[j] = -dir * alpha[p];
                    }
                }
                let mut res = SolveResult::without_solution(SolveStatus::Unbounded, self.iterations);
                res.primal = self.x[..self.n].to_vec();
                res.ray = Some(ray);
                Ok(res)
            }
            PrimalOutcome::Optimal => {
                self.pivot_in_free_columns()?;
                self.refactor()?;
                // clean-up pass after the final refactor
                if let PrimalOutcome::Unbounded { .. } = self.primal()? {
                    return Err(SolverError::Numerical("unbounded after optimal refactor".into()));
                }
                Ok(self.extract())
            }
        }
    }

    fn try_warm(&mut self, basis: &Basis) -> Result<Option<SolveResult>, SolverError> {
        let (n, m) = (self.n, self.m);
        let mut pos = 0;
        for j in 0..n + m {
            let mut st = basis.status[j];
            if st == VarStatus::Basic {
                if pos >= m {
                    return Ok(None);
                }
                self.basis[pos] = j;
                pos += 1;
            } else {
                st = match st {
                    VarStatus::AtLower if !self.lo[j].is_finite() => {
                        if self.hi[j].is_finite() {
                            VarStatus::AtUpper
                        } else {
                            VarStatus::Free
                        }
                    }
                    VarStatus::AtUpper if !self.hi[j].is_finite() => {
                        if self.lo[j].is_finite() {
                            VarStatus::AtLower
                        } else {
                            VarStatus::Free
                        }
                    }
                    VarStatus::Free if self.lo[j].is_finite() => VarStatus::AtLower,
                    VarStatus::Free if self.hi[j].is_finite() => VarStatus::AtUpper,
                    other => other,
                };
            }
            self.status[j] = st;
        }
        if pos != m {
            return Ok(None);
        }
        for j in n + m..n + 2 * m {
            self.status[j] = VarStatus::AtLower;
        }
        if self.refactor().is_err() {
            return Ok(None);
        }
        // restore dual feasibility by flipping boxed columns; give up otherwise
        let y = self.duals();
        let tol_d = self.opts.optimality_tol;
        let mut flipped = false;
        for j in 0..n + m {
            if self.status[j] == VarStatus::Basic || self.hi[j] <= self.lo[j] {
                continue;
            }
            let d = self.reduced_cost(j, &y);
            match self.status[j] {
                VarStatus::AtLower if d < -tol_d => {
                    if self.hi[j].is_finite() {
                        self.status[j] = VarStatus::AtUpper;
                        flipped = true;
                    } else {
                        return Ok(None);
                    }
                }
                VarStatus::AtUpper if d > tol_d => {
                    if self.lo[j].is_finite() {
                        self.status[j] = VarStatus::AtLower;
                        flipped = true;
                    } else {
                        return Ok(None);
                    }
                }
                VarStatus::Free if d.abs() > tol_d => return Ok(None),
                _ => {}
            }
        }
        if flipped {
            self.recompute_basic_values();
        }
        match self.dual() {
            Ok(DualOutcome::Feasible) => {}
            Ok(DualOutcome::Infeasible) => {
                return Ok(Some(SolveResult::without_solution(SolveStatus::Infeasible, self.iterations)))
            }
            Ok(DualOutcome::IterationLimit) => {
                return Ok(Some(SolveResult::without_solution(SolveStatus::IterationLimit, self.iterations)))
            }
            Err(_) => return Ok(None),
        }
        Ok(self.finish_warm().ok())
    }

    fn finish_warm(&mut self) -> Result<SolveResult, SolverError> {
        match self.primal()? {
            PrimalOutcome::IterationLimit => {
                Ok(SolveResult::without_solution(SolveStatus::IterationLimit, self.iterations))
            }
            PrimalOutcome::Unbounded { .. } => Err(SolverError::Numerical(
                "warm-started re-solve turned unbounded".into(),
            )),
            PrimalOutcome::Optimal => {
                self.refactor()?;
                if let PrimalOutcome::Unbounded { .. } = self.primal()? {
                    return Err(SolverError::Numerical("unbounded after optimal refactor".into()));
                }
                Ok(self.extract())
            }
        }
    }

    fn extract(&self) -> SolveResult {
        let (n, m) = (self.n, self.m);
        let mut primal = self.x[..n].to_vec();
        // snap nonbasic columns exactly onto their bounds
        for j in 0..n {
            if self.status[j] != VarStatus::Basic {
                primal[j] = self.nonbasic_value(j);
            }
        }
        let y = self.duals();
        let sign = 1.0 / self.cost_scale;
        let flip = self.sense;
        let duals: Vec<f64> = (0..m).map(|i| flip * y[i] * self.row_scale[i] * sign).collect();
        let objective_min: f64 = (0..n).map(|j| self.cost[j] * primal[j]).sum::<f64>() * sign;
        let is_vertex = (0..n + m).all(|j| self.status[j] != VarStatus::Free);
        let mut status: Vec<VarStatus> = self.status[..n + m].to_vec();
        // artificials still basic are replaced by their row slack
        for p in 0..m {
            let j = self.basis[p];
            if j >= n + m {
                status[n + (j - n - m)] = VarStatus::Basic;
            }
        }
        SolveResult {
            status: SolveStatus::Optimal,
            primal,
            objective: flip * objective_min,
            duals: Some(duals),
            is_vertex,
            ray: None,
            iterations: self.iterations,
            basis: Some(Basis {
                status,
                num_structural: n,
            }),
            milp: None,
        }
    }
}

/// Gauss-Jordan inverse with partial pivoting. `a` is row-major `k×k`.
fn invert_dense(mut a: Vec<f64>, k: usize) -> Result<Vec<f64>, SolverError> {
    let mut inv = vec![0.0; k * k];
    for i in 0..k {
        inv[i * k + i] = 1.0;
    }
    for c in 0..k {
        let mut piv = c;
        let mut best = a[c * k + c].abs();
        for r in c + 1..k {
            let v = a[r * k + c].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < SINGULAR_TOL {
            return Err(SolverError::Numerical(format!("singular basis (pivot {best:.3e})")));
        }
        if piv != c {
            for col in 0..k {
                a.swap(c * k + col, piv * k + col);
                inv.swap(c * k + col, piv * k + col);
            }
        }
        let d = a[c * k + c];
        for col in 0..k {
            a[c * k + col] /= d;
            inv[c * k + col] /= d;
        }
        for r in 0..k {
            if r == c {
                continue;
            }
            let f = a[r * k + c];
            if f == 0.0 {
                continue;
            }
            for col in 0..k {
                a[r * k + col] -= f * a[c * k + col];
                inv[r * k + col] -= f * inv[c * k + col];
            }
        }
    }
    Ok(inv)
}
