//! Seeded random instances: a capacity-planning family for the solve paths and
//! raw `(policy, box, samples)` tuples for the worst-case machinery.
//!
//! Capacity planning: facility `f` is opened (`y_f`) and sized (`cap_f ≤ U·y_f`)
//! before demand ξ is seen; afterwards shipments `s_fj ≥ 0` and shortages
//! `z_j ≥ 0` (optionally `z_j ≤ S`) cover the demand.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{
    AffinePolicy, BoxSet, FirstStageSpace, Instance, Matrix, PolicyEntry, PolicyStructure, RecourseData, SampleSet,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityParams {
    pub facilities: usize,
    /// Number of demand points, which is also the uncertainty dimension.
    pub demands: usize,
    pub samples: usize,
    /// Upper bound on every shortage; `None` gives complete recourse.
    pub shortage_cap: Option<f64>,
    pub epsilon: f64,
}

impl Default for CapacityParams {
    fn default() -> Self {
        CapacityParams {
            facilities: 2,
            demands: 3,
            samples: 10,
            shortage_cap: None,
            epsilon: 0.1,
        }
    }
}

/// Column layout of the capacity family's recourse vector.
pub fn ship_index(demands: usize, f: usize, j: usize) -> usize {
    f * demands + j
}

pub fn shortage_index(facilities: usize, demands: usize, j: usize) -> usize {
    facilities * demands + j
}

pub fn capacity_instance<R: Rng>(p: &CapacityParams, rng: &mut R) -> Instance {
    let (nf, nj) = (p.facilities, p.demands);
    let lower: Vec<f64> = (0..nj).map(|_| rng.random_range(2.0..5.0)).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + rng.random_range(2.0..6.0)).collect();
    let support = BoxSet::new(lower, upper).expect("generated box is valid");
    let size = 1.5 * support.upper().iter().sum::<f64>() / nf as f64;

    let n1 = 2 * nf;
    let mut c1 = Vec::with_capacity(n1);
    for _ in 0..nf {
        c1.push(rng.random_range(5.0..10.0));
    }
    for _ in 0..nf {
        c1.push(rng.random_range(1.0..2.0));
    }
    // cap_f − U·y_f ≤ 0, −cap_f ≤ 0
    let mut g = Vec::new();
    for f in 0..nf {
        let mut r = vec![0.0; n1];
        r[f] = -size;
        r[nf + f] = 1.0;
        g.push(r);
        let mut r = vec![0.0; n1];
        r[nf + f] = -1.0;
        g.push(r);
    }
    let first_stage = FirstStageSpace {
        n_binary: nf,
        n_continuous: nf,
        g: Matrix::from_rows(g, n1).expect("rows have n1 entries"),
        rhs: vec![0.0; 2 * nf],
    };

    let n2 = nf * nj + nj;
    let mut c2 = Vec::with_capacity(n2);
    for _ in 0..nf * nj {
        c2.push(rng.random_range(1.0..3.0));
    }
    for _ in 0..nj {
        c2.push(rng.random_range(8.0..15.0));
    }
    let (mut a1, mut a2, mut a3, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut push = |r1: Vec<f64>, r2: Vec<f64>, r3: Vec<f64>, rhs: f64| {
        a1.push(r1);
        a2.push(r2);
        a3.push(r3);
        b.push(rhs);
    };
    for f in 0..nf {
        let mut r1 = vec![0.0; n1];
        r1[nf + f] = -1.0;
        let mut r2 = vec![0.0; n2];
        for j in 0..nj {
            r2[ship_index(nj, f, j)] = 1.0;
        }
        push(r1, r2, vec![0.0; nj], 0.0);
    }
    for j in 0..nj {
        let mut r2 = vec![0.0; n2];
        for f in 0..nf {
            r2[ship_index(nj, f, j)] = -1.0;
        }
        r2[shortage_index(nf, nj, j)] = -1.0;
        let mut r3 = vec![0.0; nj];
        r3[j] = 1.0;
        push(vec![0.0; n1], r2, r3, 0.0);
    }
    for k in 0..n2 {
        let mut r2 = vec![0.0; n2];
        r2[k] = -1.0;
        push(vec![0.0; n1], r2, vec![0.0; nj], 0.0);
    }
    if let Some(s) = p.shortage_cap {
        for j in 0..nj {
            let mut r2 = vec![0.0; n2];
            r2[shortage_index(nf, nj, j)] = 1.0;
            push(vec![0.0; n1], r2, vec![0.0; nj], s);
        }
    }
    let recourse = RecourseData {
        a1: Matrix::from_rows(a1, n1).expect("consistent widths"),
        a2: Matrix::from_rows(a2, n2).expect("consistent widths"),
        a3: Matrix::from_rows(a3, nj).expect("consistent widths"),
        b,
    };
    let samples = uniform_samples(rng, &support, p.samples);
    Instance {
        c1,
        c2,
        first_stage,
        recourse,
        support,
        samples,
        epsilon: p.epsilon,
    }
}

/// Policy where shipments to `j` and the shortage at `j` react to ξⱼ only.
pub fn local_structure(facilities: usize, demands: usize) -> PolicyStructure {
    let n2 = facilities * demands + demands;
    let mut terms = Vec::new();
    let mut p = 0;
    for f in 0..facilities {
        for j in 0..demands {
            terms.push((PolicyEntry::Slope { row: ship_index(demands, f, j), col: j }, p, 1.0));
            p += 1;
        }
    }
    for j in 0..demands {
        terms.push((PolicyEntry::Slope { row: shortage_index(facilities, demands, j), col: j }, p, 1.0));
        p += 1;
    }
    for i in 0..n2 {
        terms.push((PolicyEntry::Intercept { row: i }, p, 1.0));
        p += 1;
    }
    PolicyStructure {
        n2,
        m: demands,
        parameter_count: p,
        terms,
    }
}

pub fn random_box<R: Rng>(rng: &mut R, m: usize) -> BoxSet {
    let lower: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
    let upper = lower.iter().map(|l| l + rng.random_range(0.1..6.0)).collect();
    BoxSet::new(lower, upper).expect("generated box is valid")
}

pub fn uniform_samples<R: Rng>(rng: &mut R, support: &BoxSet, n: usize) -> SampleSet {
    let pts = (0..n)
        .map(|_| {
            (0..support.dim())
                .map(|j| support.lower()[j] + rng.random::<f64>() * support.width(j))
                .collect()
        })
        .collect();
    SampleSet::new(pts, support).expect("samples drawn inside the box")
}

pub fn random_policy<R: Rng>(rng: &mut R, n2: usize, m: usize) -> AffinePolicy {
    let mut pol = AffinePolicy::zeros(n2, m);
    for i in 0..n2 {
        for j in 0..m {
            pol.slope.set(i, j, rng.random_range(-2.0..2.0));
        }
        pol.intercept[i] = rng.random_range(-3.0..3.0);
    }
    pol
}

/// Inputs of a worst-case expectation evaluation.
#[derive(Clone, Debug)]
pub struct WorstCaseTuple {
    pub policy: AffinePolicy,
    pub c2: Vec<f64>,
    pub support: BoxSet,
    pub samples: SampleSet,
    pub epsilon: f64,
}

/// `m ∈ [1, m_max]`, `N ∈ [1, n_max]`, `n₂ ∈ [1, 4]`, ε ∈ [0, 3). Some samples
/// are snapped onto the box boundary so that zero slack occurs.
pub fn worst_case_tuple<R: Rng>(rng: &mut R, m_max: usize, n_max: usize) -> WorstCaseTuple {
    let m = rng.random_range(1..=m_max);
    let n = rng.random_range(1..=n_max);
    let n2 = rng.random_range(1..=4);
    let support = random_box(rng, m);
    let mut pts: Vec<Vec<f64>> = uniform_samples(rng, &support, n).points().to_vec();
    for p in pts.iter_mut() {
        for (j, v) in p.iter_mut().enumerate() {
            match rng.random_range(0..8) {
                0 => *v = support.lower()[j],
                1 => *v = support.upper()[j],
                _ => {}
            }
        }
    }
    let samples = SampleSet::new(pts, &support).expect("points stay in the box");
    WorstCaseTuple {
        policy: random_policy(rng, n2, m),
        c2: (0..n2).map(|_| rng.random_range(-3.0..3.0)).collect(),
        support,
        samples,
        epsilon: rng.random_range(0.0..3.0),
    }
}
