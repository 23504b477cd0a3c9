//! Data-driven uncertainty set Ω = Ξ ∩ Ξᵃ.
//!
//! Ξᵃ inflates the sample bounding box `[ξˡ, ξᵘ]` by `εΔ` in every coordinate,
//! with `Δ = max(N, β)`. Every distribution in the Wasserstein ball puts at most
//! `1/Δ` probability outside Ω: moving mass `p` beyond distance `εΔ` of every
//! sample costs more than `p·εΔ`, so `p ≤ 1/Δ` within budget ε.

use serde::{Deserialize, Serialize};

use crate::backend::{solve_lp, LinearProgramSpec, RowSense, Sense, VarKind};
use crate::error::{Error, Result};
use crate::model::{BoxSet, SampleSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinedSet {
    pub omega: BoxSet,
    pub xi_a: BoxSet,
    pub delta: f64,
    /// Upper bound `1/Δ` on the worst-case probability of leaving Ω.
    pub guarantee: f64,
    pub sample_box: BoxSet,
}

/// `1 / max(N, β)`.
pub fn guarantee_level(n: usize, beta: f64) -> f64 {
    1.0 / (n as f64).max(beta)
}

pub fn build_omega(support: &BoxSet, samples: &SampleSet, epsilon: f64, beta: f64) -> Result<RefinedSet> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Input(format!("beta must be finite and > 0, got {beta}")));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::Input(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    let delta = (samples.len() as f64).max(beta);
    let sample_box = samples.bounding_box();
    let pad = epsilon * delta;
    let xi_a = BoxSet::new(
        sample_box.lower().iter().map(|l| l - pad).collect(),
        sample_box.upper().iter().map(|u| u + pad).collect(),
    )?;
    let omega = support.intersect(&xi_a)?;
    Ok(RefinedSet {
        omega,
        xi_a,
        delta,
        guarantee: 1.0 / delta,
        sample_box,
    })
}

/// Finitely supported distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn empirical(samples: &SampleSet) -> Self {
        let w = 1.0 / samples.len() as f64;
        DiscreteDistribution {
            atoms: samples.points().to_vec(),
            weights: vec![w; samples.len()],
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Probability of atoms outside `bx` (with tolerance `tol`).
    pub fn mass_outside(&self, bx: &BoxSet, tol: f64) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .filter(|(a, _)| !bx.contains(a, tol))
            .map(|(_, w)| w)
            .sum()
    }
}

/// Distribution that moves mass `1/Δ` of an extreme sample to the boundary of Ξᵃ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeWitness {
    pub distribution: DiscreteDistribution,
    pub sample: usize,
    pub coord: usize,
    /// +1 when moved towards the upper bound, -1 towards the lower bound.
    pub direction: f64,
    pub displacement: f64,
    pub moved_mass: f64,
    /// Mass placed on the boundary of Ξᵃ (zero when nothing moved).
    pub escape_mass: f64,
    /// `moved_mass · displacement`, the cost of the constructed transport plan.
    pub transport_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum WitnessOutcome {
    Witness(EscapeWitness),
    /// Ξ does not extend beyond Ξᵃ in any direction, so no mass can leave Ω.
    NotTight(String),
}

/// Builds the extremal distribution for the `1/Δ` bound. The direction is the
/// first coordinate (upper side before lower side) along which Ξ reaches strictly
/// past Ξᵃ; the moved sample is the lowest-index sample attaining the extreme.
pub fn escape_witness(support: &BoxSet, samples: &SampleSet, epsilon: f64, beta: f64) -> Result<WitnessOutcome> {
    let refined = build_omega(support, samples, epsilon, beta)?;
    let m = support.dim();
    let mut choice = None;
    'outer: for j in 0..m {
        if support.upper()[j] > refined.xi_a.upper()[j] {
            choice = Some((j, 1.0));
            break 'outer;
        }
        if support.lower()[j] < refined.xi_a.lower()[j] {
            choice = Some((j, -1.0));
            break 'outer;
        }
    }
    let Some((j, dir)) = choice else {
        return Ok(WitnessOutcome::NotTight(
            "the support does not extend beyond the inflated sample box; the escape bound is not attained".into(),
        ));
    };
    let target = if dir > 0.0 { refined.sample_box.upper()[j] } else { refined.sample_box.lower()[j] };
    let i = samples
        .points()
        .iter()
        .position(|p| p[j] == target)
        .expect("sample box bound is attained by a sample");
    let start = samples.points()[i][j];
    let room = if dir > 0.0 { support.upper()[j] - start } else { start - support.lower()[j] };
    let displacement = (epsilon * refined.delta).min(room);
    let mut dist = DiscreteDistribution::empirical(samples);
    let moved_mass = refined.guarantee;
    let escape_mass = if displacement > 0.0 { moved_mass } else { 0.0 };
    if displacement > 0.0 {
        dist.weights[i] -= moved_mass;
        let mut atom = samples.points()[i].clone();
        atom[j] = start + dir * displacement;
        dist.atoms.push(atom);
        dist.weights.push(moved_mass);
    }
    Ok(WitnessOutcome::Witness(EscapeWitness {
        distribution: dist,
        sample: i,
        coord: j,
        direction: dir,
        displacement,
        moved_mass: if displacement > 0.0 { moved_mass } else { 0.0 },
        escape_mass,
        transport_cost: if displacement > 0.0 { moved_mass * displacement } else { 0.0 },
    }))
}

/// Exact 1-Wasserstein distance (1-norm ground cost) between two discrete
/// distributions of equal mass, by the transportation LP.
pub fn wasserstein1(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    let (np, nq) = (p.atoms.len(), q.atoms.len());
    if (p.total_mass() - q.total_mass()).abs() > 1e-9 {
        return Err(Error::Input("distributions carry different total mass".into()));
    }
    let mut spec = LinearProgramSpec::new(Sense::Minimize);
    for a in &p.atoms {
        for b in &q.atoms {
            let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
            spec.add_var(d, 0.0, f64::INFINITY, VarKind::Continuous);
        }
    }
    for s in 0..np {
        spec.add_constraint((0..nq).map(|t| (s * nq + t, 1.0)).collect(), RowSense::Eq, p.weights[s]);
    }
    for t in 0..nq {
        spec.add_constraint((0..np).map(|s| (s * nq + t, 1.0)).collect(), RowSense::Eq, q.weights[t]);
    }
    let res = solve_lp(&spec)?;
    if !res.is_optimal() {
        return Err(Error::Numerical(format!("transportation LP ended with status {:?}", res.status)));
    }
    Ok(res.objective)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guarantee_uses_the_larger_of_n_and_beta() {
        assert_eq!(guarantee_level(20, 100.0), 0.01);
        assert_eq!(guarantee_level(200, 100.0), 0.005);
        assert_eq!(guarantee_level(50, 50.0), 1.0 / 50.0);
    }

    #[test]
    fn zero_radius_gives_sample_hull() {
        let support = BoxSet::new(vec![0.0, 0.0], vec![10.0, 10.0]).unwrap();
        let s = SampleSet::new(vec![vec![1.0, 2.0], vec![3.0, 5.0]], &support).unwrap();
        let r = build_omega(&support, &s, 0.0, 100.0).unwrap();
        assert_eq!(r.omega, BoxSet::new(vec![1.0, 2.0], vec![3.0, 5.0]).unwrap());
    }

    #[test]
    fn large_radius_recovers_support() {
        let support = BoxSet::new(vec![0.0], vec![10.0]).unwrap();
        let s = SampleSet::new(vec![vec![4.0]], &support).unwrap();
        let r = build_omega(&support, &s, 1.0, 100.0).unwrap();
        assert_eq!(r.omega, support);
        assert!(matches!(escape_witness(&support, &s, 1.0, 100.0).unwrap(), WitnessOutcome::NotTight(_)));
    }
}
