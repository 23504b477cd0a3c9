//! Master MILP over `(x₁, θ, μ)` plus, in refined mode, one recourse block per
//! accumulated feasibility vertex.

use crate::backend::{LinearProgramSpec, RowSense, Sense, VarKind};
use crate::error::{Error, Result};
use crate::model::{dot, BoxSet, Instance, PolicyEntry, PolicyStructure};
use crate::worst_case::c3_vector;

use super::MasterState;

/// Column offsets of the master variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterLayout {
    pub n1: usize,
    pub theta: usize,
    pub num_theta: usize,
    pub mu: usize,
    pub m: usize,
    /// First column of the refined-mode recourse blocks.
    pub blocks: usize,
    pub n2: usize,
    pub num_blocks: usize,
}

impl MasterLayout {
    pub fn num_vars(&self) -> usize {
        self.blocks + self.n2 * self.num_blocks
    }

    pub fn x1<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[..self.n1]
    }

    pub fn theta<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.theta..self.theta + self.num_theta]
    }

    pub fn mu<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.mu..self.mu + 2 * self.m + 1]
    }
}

/// Coefficients of the policy-vertex row `l` at ξ, in parameter space:
/// `[A₂(Aξ + a)]ₗ = Σₚ coef·θₚ`.
pub(crate) fn row_policy_coefficients(
    inst: &Instance,
    structure: &PolicyStructure,
    l: usize,
    xi: &[f64],
) -> Vec<(usize, f64)> {
    let a2 = inst.recourse.a2.row(l);
    structure.pull_back(|e| match e {
        PolicyEntry::Slope { row, col } => a2[row] * xi[col],
        PolicyEntry::Intercept { row } => a2[row],
    })
}

pub fn build_master(
    inst: &Instance,
    structure: &PolicyStructure,
    state: &MasterState,
    ball_box: &BoxSet,
    refined: bool,
) -> Result<(LinearProgramSpec, MasterLayout)> {
    let (n1, n2, m) = (inst.n1(), inst.n2(), inst.m());
    if structure.n2 != n2 || structure.m != m {
        return Err(Error::Input(format!(
            "policy structure is {}x{}, instance needs {}x{}",
            structure.n2, structure.m, n2, m
        )));
    }
    if ball_box.dim() != m || state.row_vertex_sets.len() != inst.num_rows() {
        return Err(Error::Input("master state does not match the instance".into()));
    }
    let xi_mean = inst.samples.mean();
    let c3 = c3_vector(inst.epsilon, ball_box, &xi_mean)?;
    let num_blocks = if refined { state.feasibility_vertices.len() } else { 0 };
    let mut spec = LinearProgramSpec::new(Sense::Minimize);
    let nb = inst.first_stage.n_binary;
    for k in 0..n1 {
        if k < nb {
            spec.add_named_var(format!("u{k}"), inst.c1[k], 0.0, 1.0, VarKind::Binary);
        } else {
            spec.add_named_var(format!("y{}", k - nb), inst.c1[k], f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous);
        }
    }
    let theta = spec.num_vars();
    let c2 = &inst.c2;
    let mut theta_cost = vec![0.0; structure.parameter_count];
    for (p, v) in structure.pull_back(|e| match e {
        PolicyEntry::Slope { row, col } => c2[row] * xi_mean[col],
        PolicyEntry::Intercept { row } => c2[row],
    }) {
        theta_cost[p] = v;
    }
    for (p, &c) in theta_cost.iter().enumerate() {
        spec.add_named_var(format!("theta{p}"), c, f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous);
    }
    let mu = spec.num_vars();
    spec.add_named_var("mu0", c3[0], 0.0, f64::INFINITY, VarKind::Continuous);
    for j in 0..m {
        spec.add_named_var(format!("mup{j}"), c3[1 + j], 0.0, f64::INFINITY, VarKind::Continuous);
    }
    for j in 0..m {
        spec.add_named_var(format!("mum{j}"), c3[1 + m + j], 0.0, f64::INFINITY, VarKind::Continuous);
    }
    let blocks = spec.num_vars();
    for q in 0..num_blocks {
        for i in 0..n2 {
            spec.add_named_var(format!("xf{q}_{i}"), 0.0, f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous);
        }
    }

    // X₁
    let g = &inst.first_stage.g;
    for r in 0..g.nrows() {
        let coeffs = sparse(g.row(r), 0);
        spec.add_constraint(coeffs, RowSense::Le, inst.first_stage.rhs[r]);
    }
    // M(A): μ⁰ + μ⁺ⱼ ≥ (Aᵀc₂)ⱼ and μ⁰ + μ⁻ⱼ ≥ −(Aᵀc₂)ⱼ
    let mut direction: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for &(e, p, c) in &structure.terms {
        if let PolicyEntry::Slope { row, col } = e {
            if c2[row] != 0.0 && c != 0.0 {
                direction[col].push((p, c2[row] * c));
            }
        }
    }
    for (j, dir) in direction.iter().enumerate() {
        let merged = merge(dir);
        let mut up = vec![(mu, 1.0), (mu + 1 + j, 1.0)];
        up.extend(merged.iter().map(|&(p, v)| (theta + p, -v)));
        spec.add_constraint(up, RowSense::Ge, 0.0);
        let mut down = vec![(mu, 1.0), (mu + 1 + m + j, 1.0)];
        down.extend(merged.iter().map(|&(p, v)| (theta + p, v)));
        spec.add_constraint(down, RowSense::Ge, 0.0);
    }
    // policy feasibility at accumulated vertices
    for (l, set) in state.row_vertex_sets.iter().enumerate() {
        let a1 = inst.recourse.a1.row(l);
        let a3 = inst.recourse.a3.row(l);
        for xi in set {
            let mut coeffs = sparse(a1, 0);
            coeffs.extend(
                row_policy_coefficients(inst, structure, l, xi)
                    .into_iter()
                    .map(|(p, v)| (theta + p, v)),
            );
            spec.add_constraint(coeffs, RowSense::Le, inst.recourse.b[l] - dot(a3, xi));
        }
    }
    // recourse blocks at feasibility vertices
    for q in 0..num_blocks {
        let xi = &state.feasibility_vertices[q];
        for l in 0..inst.num_rows() {
            let mut coeffs = sparse(inst.recourse.a1.row(l), 0);
            coeffs.extend(sparse(inst.recourse.a2.row(l), blocks + q * n2));
            spec.add_constraint(coeffs, RowSense::Le, inst.recourse.b[l] - dot(inst.recourse.a3.row(l), xi));
        }
    }
    let layout = MasterLayout {
        n1,
        theta,
        num_theta: structure.parameter_count,
        mu,
        m,
        blocks,
        n2,
        num_blocks,
    };
    debug_assert_eq!(layout.num_vars(), spec.num_vars());
    Ok((spec, layout))
}

fn sparse(row: &[f64], offset: usize) -> Vec<(usize, f64)> {
    row.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(k, &v)| (offset + k, v))
        .collect()
}

fn merge(terms: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut t = terms.to_vec();
    t.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(t.len());
    for (p, v) in t {
        match out.last_mut() {
            Some(last) if last.0 == p => last.1 += v,
            _ => out.push((p, v)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out
}
