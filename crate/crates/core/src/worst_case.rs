//! Worst-case expectation of an affine cost over a 1-Wasserstein ball.
//!
//! For `x₂(ξ) = Aξ + a` the cost `c₂ᵀx₂(ξ)` is affine in ξ with slope
//! `d = Aᵀc₂`. Over all distributions on a box within distance ε of the
//! empirical distribution, the worst-case expectation only depends on the
//! sample mean ξ̃:
//!
//! ```text
//! max  c₂ᵀ(Aξ̃ + a) + dᵀ(q⁺ − q⁻)
//! s.t. 1ᵀ(q⁺ + q⁻) ≤ ε,   0 ≤ q⁺ ≤ ξ̄ − ξ̃,   0 ≤ q⁻ ≤ ξ̃ − ξ̲
//! ```
//!
//! Its LP dual is `min c₃ᵀμ` over
//! `M(A) = {μ ≥ 0 : μ⁰·1 + μ⁺ ≥ d, μ⁰·1 + μ⁻ ≥ −d}` with `c₃ = (ε, ξ̄ − ξ̃, ξ̃ − ξ̲)`.

use serde::{Deserialize, Serialize};

use crate::backend::{solve_lp, LinearProgramSpec, RowSense, Sense, VarKind};
use crate::error::{Error, Result};
use crate::model::{dot, AffinePolicy, BoxSet, SampleSet};

/// Tolerance used when checking that the sample mean lies in the ball's box.
const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseSolution {
    pub value: f64,
    pub q_plus: Vec<f64>,
    pub q_minus: Vec<f64>,
}

/// A point `μ = (μ⁰, μ⁺, μ⁻)` of the dual set `M(A)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub mu0: f64,
    pub mu_plus: Vec<f64>,
    pub mu_minus: Vec<f64>,
}

impl DualCertificate {
    /// Largest violation of the `M(A)` inequalities (and nonnegativity) for slope `d`.
    pub fn violation(&self, direction: &[f64]) -> f64 {
        let mut worst = (-self.mu0).max(0.0);
        for (j, &d) in direction.iter().enumerate() {
            worst = worst
                .max(d - self.mu0 - self.mu_plus[j])
                .max(-d - self.mu0 - self.mu_minus[j])
                .max(-self.mu_plus[j])
                .max(-self.mu_minus[j]);
        }
        worst
    }

    pub fn as_vector(&self) -> Vec<f64> {
        let mut v = vec![self.mu0];
        v.extend_from_slice(&self.mu_plus);
        v.extend_from_slice(&self.mu_minus);
        v
    }
}

fn check_mean(ball_box: &BoxSet, xi_mean: &[f64]) -> Result<()> {
    if xi_mean.len() != ball_box.dim() {
        return Err(Error::Input(format!(
            "sample mean has length {}, box has dimension {}",
            xi_mean.len(),
            ball_box.dim()
        )));
    }
    if !ball_box.contains(xi_mean, MEMBERSHIP_TOL) {
        return Err(Error::Input("sample mean lies outside the ball's support box".into()));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::Input(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    Ok(())
}

/// `c₃ = (ε, ξ̄ − ξ̃, ξ̃ − ξ̲)`, clamped at zero against round-off.
pub fn c3_vector(epsilon: f64, ball_box: &BoxSet, xi_mean: &[f64]) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    check_mean(ball_box, xi_mean)?;
    let mut c3 = vec![epsilon];
    c3.extend(ball_box.upper().iter().zip(xi_mean).map(|(u, x)| (u - x).max(0.0)));
    c3.extend(xi_mean.iter().zip(ball_box.lower()).map(|(x, l)| (x - l).max(0.0)));
    Ok(c3)
}

/// Value of the affine cost at the sample mean, `c₂ᵀ(Aξ̃ + a)`.
pub fn nominal_value(policy: &AffinePolicy, c2: &[f64], xi_mean: &[f64]) -> f64 {
    dot(c2, &policy.evaluate(xi_mean))
}

/// Solves the aggregated worst-case LP with the backend simplex.
pub fn worst_case_lp(
    policy: &AffinePolicy,
    c2: &[f64],
    ball_box: &BoxSet,
    xi_mean: &[f64],
    epsilon: f64,
) -> Result<WorstCaseSolution> {
    check_epsilon(epsilon)?;
    check_mean(ball_box, xi_mean)?;
    let m = ball_box.dim();
    let d = policy.cost_direction(c2);
    let mut spec = LinearProgramSpec::new(Sense::Maximize);
    for j in 0..m {
        spec.add_var(d[j], 0.0, (ball_box.upper()[j] - xi_mean[j]).max(0.0), VarKind::Continuous);
    }
    for j in 0..m {
        spec.add_var(-d[j], 0.0, (xi_mean[j] - ball_box.lower()[j]).max(0.0), VarKind::Continuous);
    }
    spec.add_constraint((0..2 * m).map(|k| (k, 1.0)).collect(), RowSense::Le, epsilon);
    let res = solve_lp(&spec)?;
    if !res.is_optimal() {
        return Err(Error::Numerical(format!("worst-case LP ended with status {:?}", res.status)));
    }
    Ok(WorstCaseSolution {
        value: nominal_value(policy, c2, xi_mean) + res.objective,
        q_plus: res.primal[..m].to_vec(),
        q_minus: res.primal[m..].to_vec(),
    })
}

/// Fractional-knapsack solution of the same LP: returns the optimal increment
/// over the nominal value. Budget goes to the largest `|dⱼ|` first (lowest index
/// on ties), capped by the slack in the improving direction.
pub fn worst_case_greedy(direction: &[f64], slack_up: &[f64], slack_down: &[f64], epsilon: f64) -> f64 {
    let mut order: Vec<usize> = (0..direction.len()).filter(|&j| direction[j] != 0.0).collect();
    order.sort_by(|&a, &b| direction[b].abs().total_cmp(&direction[a].abs()).then(a.cmp(&b)));
    let mut budget = epsilon;
    let mut gain = 0.0;
    for j in order {
        if budget <= 0.0 {
            break;
        }
        let cap = if direction[j] > 0.0 { slack_up[j] } else { slack_down[j] };
        let take = cap.max(0.0).min(budget);
        gain += direction[j].abs() * take;
        budget -= take;
    }
    gain
}

/// Worst-case expectation computed in closed form (nominal value + greedy increment).
pub fn worst_case_value(
    policy: &AffinePolicy,
    c2: &[f64],
    ball_box: &BoxSet,
    xi_mean: &[f64],
    epsilon: f64,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_mean(ball_box, xi_mean)?;
    let d = policy.cost_direction(c2);
    let up: Vec<f64> = ball_box.upper().iter().zip(xi_mean).map(|(u, x)| u - x).collect();
    let down: Vec<f64> = xi_mean.iter().zip(ball_box.lower()).map(|(x, l)| x - l).collect();
    Ok(nominal_value(policy, c2, xi_mean) + worst_case_greedy(&d, &up, &down, epsilon))
}

/// Per-sample formulation with one displacement pair `(q⁺ᵢ, q⁻ᵢ)` per sample and
/// an averaged budget. Mostly useful as a cross-check of [`worst_case_lp`].
pub fn samplewise_worst_case(
    policy: &AffinePolicy,
    c2: &[f64],
    ball_box: &BoxSet,
    samples: &SampleSet,
    epsilon: f64,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    let m = ball_box.dim();
    let n = samples.len();
    let d = policy.cost_direction(c2);
    let inv_n = 1.0 / n as f64;
    let mut spec = LinearProgramSpec::new(Sense::Maximize);
    let mut budget = Vec::with_capacity(2 * m * n);
    for (i, xi) in samples.points().iter().enumerate() {
        if !ball_box.contains(xi, MEMBERSHIP_TOL) {
            return Err(Error::Input(format!("sample {i} lies outside the ball's support box")));
        }
        for j in 0..m {
            let k = spec.add_var(inv_n * d[j], 0.0, (ball_box.upper()[j] - xi[j]).max(0.0), VarKind::Continuous);
            budget.push((k, inv_n));
        }
        for j in 0..m {
            let k = spec.add_var(-inv_n * d[j], 0.0, (xi[j] - ball_box.lower()[j]).max(0.0), VarKind::Continuous);
            budget.push((k, inv_n));
        }
    }
    spec.add_constraint(budget, RowSense::Le, epsilon);
    let res = solve_lp(&spec)?;
    if !res.is_optimal() {
        return Err(Error::Numerical(format!("per-sample worst-case LP ended with status {:?}", res.status)));
    }
    let empirical: f64 = samples
        .points()
        .iter()
        .map(|xi| nominal_value(policy, c2, xi))
        .sum::<f64>()
        * inv_n;
    Ok(empirical + res.objective)
}

/// Solves the dual `min c₃ᵀμ` over `M(A)` and returns the value
/// `c₂ᵀ(Aξ̃ + a) + c₃ᵀμ*` with the minimizing certificate.
pub fn dual_value(
    policy: &AffinePolicy,
    c2: &[f64],
    ball_box: &BoxSet,
    xi_mean: &[f64],
    epsilon: f64,
) -> Result<(f64, DualCertificate)> {
    let c3 = c3_vector(epsilon, ball_box, xi_mean)?;
    let m = ball_box.dim();
    let d = policy.cost_direction(c2);
    let mut spec = LinearProgramSpec::new(Sense::Minimize);
    for &c in &c3 {
        spec.add_var(c, 0.0, f64::INFINITY, VarKind::Continuous);
    }
    for j in 0..m {
        spec.add_constraint(vec![(0, 1.0), (1 + j, 1.0)], RowSense::Ge, d[j]);
        spec.add_constraint(vec![(0, 1.0), (1 + m + j, 1.0)], RowSense::Ge, -d[j]);
    }
    let res = solve_lp(&spec)?;
    if !res.is_optimal() {
        return Err(Error::Numerical(format!("dual worst-case LP ended with status {:?}", res.status)));
    }
    let cert = DualCertificate {
        mu0: res.primal[0],
        mu_plus: res.primal[1..1 + m].to_vec(),
        mu_minus: res.primal[1 + m..].to_vec(),
    };
    Ok((nominal_value(policy, c2, xi_mean) + res.objective, cert))
}
