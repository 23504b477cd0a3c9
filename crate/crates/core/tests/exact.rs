use drlp::backend::{solve_lp, LinearProgramSpec, RowSense, Sense, VarKind};
use drlp::exact::{affine_gap, exact_scenario_count, exact_value_curve, solve_exact, ExactOptions};
use drlp::generate::{capacity_instance, rng, CapacityParams};
use drlp::model::{dot, BoxSet, FirstStageSpace, Instance, Matrix, PolicyStructure, RecourseData, SampleSet};
use drlp::reformulation::{solve_affine, AffineOptions};
use drlp::Error;

fn tiny(seed: u64, m: usize, n: usize, eps: f64) -> Instance {
    let p = CapacityParams {
        facilities: 2,
        demands: m,
        samples: n,
        shortage_cap: None,
        epsilon: eps,
    };
    capacity_instance(&p, &mut rng(seed))
}

/// SAA value by enumerating the binaries and solving one LP per pattern.
fn saa_oracle(inst: &Instance) -> f64 {
    let nb = inst.first_stage.n_binary;
    let (n1, n2) = (inst.n1(), inst.n2());
    let n = inst.samples.len();
    let mut best = f64::INFINITY;
    for bits in 0..(1u32 << nb) {
        let mut spec = LinearProgramSpec::new(Sense::Minimize);
        for k in 0..n1 {
            let (lo, hi) = if k < nb {
                let v = f64::from((bits >> k) & 1);
                (v, v)
            } else {
                (f64::NEG_INFINITY, f64::INFINITY)
            };
            spec.add_var(inst.c1[k], lo, hi, VarKind::Continuous);
        }
        for _ in 0..n {
            for i in 0..n2 {
                spec.add_var(inst.c2[i] / n as f64, f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous);
            }
        }
        let g = &inst.first_stage.g;
        for r in 0..g.nrows() {
            spec.add_constraint((0..n1).map(|k| (k, g.get(r, k))).collect(), RowSense::Le, inst.first_stage.rhs[r]);
        }
        for (s, xi) in inst.samples.points().iter().enumerate() {
            let rec = &inst.recourse;
            for l in 0..inst.num_rows() {
                let mut c: Vec<(usize, f64)> = (0..n1).map(|k| (k, rec.a1.get(l, k))).collect();
                c.extend((0..n2).map(|i| (n1 + s * n2 + i, rec.a2.get(l, i))));
                spec.add_constraint(c, RowSense::Le, rec.b[l] - dot(rec.a3.row(l), xi));
            }
        }
        let res = solve_lp(&spec).unwrap();
        if res.is_optimal() {
            best = best.min(res.objective);
        }
    }
    best
}

fn scale(v: f64) -> f64 {
    1.0 + v.abs()
}

#[test]
fn zero_radius_matches_saa() {
    for seed in 0..8 {
        let inst = tiny(seed, 1 + seed as usize % 3, 3, 0.0);
        let ex = solve_exact(&inst, &ExactOptions::default()).unwrap();
        let saa = saa_oracle(&inst);
        assert!((ex.objective - saa).abs() <= 1e-6 * scale(saa), "seed {seed}: {} vs {saa}", ex.objective);
    }
}

/// min c·u + sup E[max(ξ − 3u, 0)] with ξ ∈ [0, 4] and one sample at 1.
fn single_coordinate(c: f64, eps: f64) -> Instance {
    let support = BoxSet::new(vec![0.0], vec![4.0]).unwrap();
    Instance {
        c1: vec![c],
        c2: vec![1.0],
        first_stage: FirstStageSpace {
            n_binary: 1,
            n_continuous: 0,
            g: Matrix::zeros(0, 1),
            rhs: vec![],
        },
        recourse: RecourseData {
            a1: Matrix::from_rows(vec![vec![-3.0], vec![0.0]], 1).unwrap(),
            a2: Matrix::from_rows(vec![vec![-1.0], vec![-1.0]], 1).unwrap(),
            a3: Matrix::from_rows(vec![vec![1.0], vec![0.0]], 1).unwrap(),
            b: vec![0.0, 0.0],
        },
        samples: SampleSet::new(vec![vec![1.0]], &support).unwrap(),
        support,
        epsilon: eps,
    }
}

/// `min_u min_λ≥0 c·u + λε + max_k (f_k − λ d_k)` over the three candidate points,
/// evaluated at every breakpoint of the convex piecewise-linear function of λ.
fn single_coordinate_oracle(c: f64, eps: f64) -> f64 {
    let pts = [1.0f64, 0.0, 4.0];
    let mut best = f64::INFINITY;
    for u in [0.0, 1.0] {
        let lines: Vec<(f64, f64)> = pts.iter().map(|&x| ((x - 3.0 * u).max(0.0), (x - 1.0f64).abs())).collect();
        let mut cands = vec![0.0];
        for a in &lines {
            for b in &lines {
                if a.1 != b.1 {
                    let l = (a.0 - b.0) / (a.1 - b.1);
                    if l >= 0.0 {
                        cands.push(l);
                    }
                }
            }
        }
        for l in cands {
            let inner = lines.iter().map(|(f, d)| f - l * d).fold(f64::NEG_INFINITY, f64::max);
            best = best.min(c * u + l * eps + inner);
        }
    }
    best
}

#[test]
fn single_coordinate_matches_breakpoint_oracle() {
    for &(c, eps) in &[(0.9, 0.3), (0.2, 0.0), (2.0, 0.5), (1.4, 1.2), (5.0, 4.0)] {
        let ex = solve_exact(&single_coordinate(c, eps), &ExactOptions::default()).unwrap();
        let or = single_coordinate_oracle(c, eps);
        assert!((ex.objective - or).abs() <= 1e-9, "c {c} eps {eps}: {} vs {or}", ex.objective);
    }
    // closed form: min(1 + ε, c + ε/3) while ε ≤ 3
    let ex = solve_exact(&single_coordinate(0.9, 0.3), &ExactOptions::default()).unwrap();
    assert!((ex.objective - 1.0).abs() <= 1e-9);
    assert_eq!(ex.x1.binary, vec![1.0]);
    let recon = 0.9 + ex.lambda * 0.3 + ex.eta[0];
    assert!((recon - ex.objective).abs() <= 1e-9);
}

#[test]
fn exact_never_exceeds_affine() {
    for seed in 0..10 {
        let m = 1 + seed as usize % 3;
        let inst = tiny(50 + seed, m, 1 + seed as usize % 5, 0.4);
        let ex = solve_exact(&inst, &ExactOptions::default()).unwrap();
        let af = solve_affine(&inst, &PolicyStructure::identity(inst.n2(), m), &AffineOptions::default()).unwrap();
        assert!(ex.objective <= af.objective + 1e-5 * scale(af.objective), "seed {seed}");
    }
}

#[test]
fn value_curve_is_nondecreasing_and_concave() {
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    for seed in 0..4 {
        let inst = tiny(80 + seed, 2, 3, 0.0);
        let v = exact_value_curve(&inst, &grid, &ExactOptions::default()).unwrap();
        let s = scale(v[4]);
        for k in 0..4 {
            assert!(v[k + 1] >= v[k] - 1e-6 * s);
        }
        for k in 1..4 {
            assert!(v[k] >= 0.5 * (v[k - 1] + v[k + 1]) - 1e-6 * s, "seed {seed}: {v:?}");
        }
        let par = exact_value_curve(&inst, &grid, &ExactOptions { threads: 3, ..ExactOptions::default() }).unwrap();
        assert_eq!(v, par);
    }
}

#[test]
fn curve_is_flat_beyond_the_diameter() {
    let inst = tiny(90, 2, 2, 0.0);
    let d = inst.support.l1_diameter();
    let v = exact_value_curve(&inst, &[d, 2.0 * d], &ExactOptions::default()).unwrap();
    assert!((v[0] - v[1]).abs() <= 1e-6 * scale(v[0]));
}

#[test]
fn scenario_count_follows_candidate_grid() {
    let inst = tiny(1, 3, 4, 0.1);
    assert_eq!(exact_scenario_count(&inst), 4 * 27);
    let support = inst.support.clone();
    let mut pts = inst.samples.points().to_vec();
    pts[0][0] = support.lower()[0];
    pts[1][1] = support.upper()[1];
    pts[1][2] = support.upper()[2];
    let inst = inst.with_samples(SampleSet::new(pts, &support).unwrap());
    assert_eq!(exact_scenario_count(&inst), 18 + 12 + 27 + 27);
    assert_eq!(solve_exact(&inst, &ExactOptions::default()).unwrap().scenario_count, 84);
}

#[test]
fn cap_is_enforced() {
    let inst = tiny(2, 3, 5, 0.1);
    let res = solve_exact(&inst, &ExactOptions { scenario_cap: 100, ..ExactOptions::default() });
    assert!(matches!(res, Err(Error::CapExceeded { needed: 135, cap: 100, .. })));
}

fn two_coordinate(rows_a2: Vec<Vec<f64>>, rows_a3: Vec<Vec<f64>>, n2: usize) -> Instance {
    let support = BoxSet::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let l = rows_a2.len();
    Instance {
        c1: vec![0.0],
        c2: vec![1.0; n2],
        first_stage: FirstStageSpace {
            n_binary: 1,
            n_continuous: 0,
            g: Matrix::zeros(0, 1),
            rhs: vec![],
        },
        recourse: RecourseData {
            a1: Matrix::zeros(l, 1),
            a2: Matrix::from_rows(rows_a2, n2).unwrap(),
            a3: Matrix::from_rows(rows_a3, 2).unwrap(),
            b: vec![0.0; l],
        },
        samples: SampleSet::new(vec![vec![0.5, 0.5], vec![0.2, 0.7]], &support).unwrap(),
        support,
        epsilon: 0.3,
    }
}

#[test]
fn determined_recourse_has_zero_gap() {
    // x₂ = ξ₁ + ξ₂ is forced
    let inst = two_coordinate(vec![vec![1.0], vec![-1.0]], vec![vec![-1.0, -1.0], vec![1.0, 1.0]], 1);
    let gap = affine_gap(&inst, &PolicyStructure::identity(1, 2), &AffineOptions::default(), &ExactOptions::default()).unwrap();
    assert!(gap.abs() <= 1e-7, "{gap}");
}

#[test]
fn corner_coupling_has_positive_gap() {
    // x₂ ≥ max(ξ₁, ξ₂) is convex but not affine in ξ
    let inst = two_coordinate(vec![vec![-1.0], vec![-1.0]], vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1);
    let gap = affine_gap(&inst, &PolicyStructure::identity(1, 2), &AffineOptions::default(), &ExactOptions::default()).unwrap();
    assert!(gap > 1e-3, "{gap}");
}
