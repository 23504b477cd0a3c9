use drlp::backend::{solve_lp, LinearProgramSpec, RowSense, Sense, VarKind};
use drlp::evaluation::{
    holdout_select, matched_samples, out_of_sample, robust_mode_value, scaling_experiment, solve_robust, solve_saa,
    HoldoutOptions,
};
use drlp::generate::{capacity_instance, random_policy, rng, CapacityParams};
use drlp::model::{dot, AffinePolicy, Instance, PolicyStructure, SampleSet};
use drlp::reformulation::AffineOptions;
use drlp::uc::{build_uc_instance, toy_system, ToyProfile};
use drlp::worst_case::worst_case_lp;

fn instance(seed: u64, m: usize, n: usize) -> Instance {
    let p = CapacityParams {
        facilities: 2,
        demands: m,
        samples: n,
        shortage_cap: None,
        epsilon: 0.4,
    };
    capacity_instance(&p, &mut rng(seed))
}

fn identity(inst: &Instance) -> PolicyStructure {
    PolicyStructure::identity(inst.n2(), inst.m())
}

/// Recourse LP built directly from the instance matrices.
fn recourse_oracle(inst: &Instance, x1: &[f64], xi: &[f64]) -> f64 {
    let mut spec = LinearProgramSpec::new(Sense::Minimize);
    for k in 0..inst.n2() {
        spec.add_var(inst.c2[k], f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous);
    }
    let r = &inst.recourse;
    for l in 0..inst.num_rows() {
        let rhs = r.b[l] - dot(r.a1.row(l), x1) - dot(r.a3.row(l), xi);
        spec.add_constraint((0..inst.n2()).map(|k| (k, r.a2.get(l, k))).collect(), RowSense::Le, rhs);
    }
    solve_lp(&spec).unwrap().objective
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn single_scenario_at_the_sample_mean_matches_the_recourse_lp() {
    for seed in 0..6 {
        let inst = instance(seed, 3, 5);
        let x1 = solve_saa(&inst, &identity(&inst), &AffineOptions::default()).unwrap().x1_vec();
        let mean = inst.samples.mean();
        let scen = SampleSet::new(vec![mean.clone()], &inst.support).unwrap();
        let rep = out_of_sample(&x1, &inst, &scen, 1).unwrap();
        let expect = inst.first_stage_cost(&x1) + recourse_oracle(&inst, &x1, &mean);
        assert!(close(rep.mean_cost, expect, 1e-9), "{} vs {expect}", rep.mean_cost);
        assert_eq!(rep.infeasible_count, 0);
    }
}

#[test]
fn duplicating_scenarios_leaves_the_mean_unchanged() {
    let inst = instance(7, 3, 6);
    let x1 = solve_saa(&inst, &identity(&inst), &AffineOptions::default()).unwrap().x1_vec();
    let once = out_of_sample(&x1, &inst, &inst.samples, 1).unwrap();
    let mut pts = inst.samples.points().to_vec();
    pts.extend_from_slice(inst.samples.points());
    pts.extend_from_slice(inst.samples.points());
    let thrice = out_of_sample(&x1, &inst, &SampleSet::new(pts, &inst.support).unwrap(), 3).unwrap();
    assert!(close(once.mean_cost, thrice.mean_cost, 1e-12));
}

#[test]
fn mean_over_concatenation_is_the_weighted_mean() {
    let inst = instance(8, 2, 4);
    let x1 = solve_saa(&inst, &identity(&inst), &AffineOptions::default()).unwrap().x1_vec();
    let a = drlp::generate::uniform_samples(&mut rng(1), &inst.support, 9);
    let b = drlp::generate::uniform_samples(&mut rng(2), &inst.support, 4);
    let ra = out_of_sample(&x1, &inst, &a, 1).unwrap();
    let rb = out_of_sample(&x1, &inst, &b, 2).unwrap();
    let mut pts = a.points().to_vec();
    pts.extend_from_slice(b.points());
    let rab = out_of_sample(&x1, &inst, &SampleSet::new(pts, &inst.support).unwrap(), 1).unwrap();
    let expect = (9.0 * ra.mean_cost + 4.0 * rb.mean_cost) / 13.0;
    assert!(close(rab.mean_cost, expect, 1e-12), "{} vs {expect}", rab.mean_cost);
}

#[test]
fn robust_value_is_the_box_maximum_and_dominates_every_ball() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let inst = instance(seed, 1 + seed as usize % 4, 5);
        let pol = random_policy(&mut r, inst.n2(), inst.m());
        let x1 = vec![1.0, 0.0, 3.0, 0.0];
        let v = robust_mode_value(&pol, &x1, &inst, &inst.support);
        // oracle: maximize c₂ᵀ(Aξ + a) over the box as an LP
        let mut spec = LinearProgramSpec::new(Sense::Maximize);
        let d = pol.cost_direction(&inst.c2);
        for j in 0..inst.m() {
            spec.add_var(d[j], inst.support.lower()[j], inst.support.upper()[j], VarKind::Continuous);
        }
        let lp = solve_lp(&spec).unwrap().objective + dot(&inst.c2, &pol.intercept) + inst.first_stage_cost(&x1);
        assert!(close(v, lp, 1e-9), "seed {seed}: {v} vs {lp}");
        for eps in [0.0, 0.5, 3.0, 100.0] {
            let wc = worst_case_lp(&pol, &inst.c2, &inst.support, &inst.samples.mean(), eps).unwrap().value;
            assert!(inst.first_stage_cost(&x1) + wc <= v + 1e-9 * (1.0 + v.abs()));
        }
    }
}

#[test]
fn static_policy_robust_value_is_the_intercept_cost() {
    let inst = instance(3, 3, 4);
    let mut pol = AffinePolicy::zeros(inst.n2(), inst.m());
    pol.intercept = (0..inst.n2()).map(|k| k as f64 * 0.5).collect();
    let x1 = vec![1.0, 1.0, 2.0, 2.0];
    let v = robust_mode_value(&pol, &x1, &inst, &inst.support);
    assert_eq!(v, inst.first_stage_cost(&x1) + dot(&inst.c2, &pol.intercept));
}

#[test]
fn robust_mode_objective_matches_its_own_box_value() {
    let inst = instance(5, 2, 5);
    let sol = solve_robust(&inst, &identity(&inst), &AffineOptions::default()).unwrap();
    let v = robust_mode_value(&sol.policy, &sol.x1_vec(), &inst, &inst.support);
    assert!(close(sol.objective, v, 1e-7), "{} vs {v}", sol.objective);
}

#[test]
fn holdout_picks_from_the_grid() {
    let inst = instance(9, 2, 12);
    let st = identity(&inst);
    let opts = HoldoutOptions {
        beta: None,
        ..HoldoutOptions::default()
    };
    let grid = [0.3, 0.01, 1.0];
    let res = holdout_select(&inst, &st, &grid, &opts).unwrap();
    assert!(grid.contains(&res.epsilon));
    assert_eq!((res.train_size, res.validation_size), (9, 3));
    let best = res.candidates.iter().filter_map(|c| c.validation_cost).fold(f64::INFINITY, f64::min);
    let chosen = res.candidates.iter().find(|c| c.epsilon == res.epsilon).unwrap();
    assert_eq!(chosen.validation_cost, Some(best));

    let single = holdout_select(&inst, &st, &[0.2], &opts).unwrap();
    assert_eq!(single.epsilon, 0.2);
    assert_eq!(single.candidates.len(), 1);

    let dup = holdout_select(&inst, &st, &[0.2, 0.2, 0.2], &opts).unwrap();
    assert_eq!(dup.epsilon, 0.2);
    assert_eq!(dup.candidates.len(), 1);

    assert!(holdout_select(&inst, &st, &[], &opts).is_err());
    assert!(holdout_select(&inst, &st, &[-1.0], &opts).is_err());
}

#[test]
fn matched_samples_fix_master_sizes_and_objective_across_n() {
    let sys = toy_system(ToyProfile::Tiny, 7);
    let support = sys.support();
    let family = |n: usize| build_uc_instance(&sys, &matched_samples(&mut rng(1), &support, n), 0.01);
    let rows = scaling_experiment(family, &[10, 100], 1, 1000.0, &AffineOptions::default()).unwrap();
    assert_eq!(rows[0].master_trace, rows[1].master_trace);
    assert_eq!(rows[0].iterations, rows[1].iterations);
    assert_eq!(rows[0].objective, rows[1].objective);
}
