use drlp::evaluation::{recourse_solutions, MixtureSampler};
use drlp::generate::rng;
use drlp::io::samples_csv;
use drlp::model::SampleSet;
use drlp::reformulation::{solve_affine, solve_affine_refined, AffineOptions};
use drlp::uc::{
    balance_residuals, build_uc_instance, emit_uc, ingest_uc, parse_uc_system, sample_header, toy_system, Bus,
    Generator, ToyProfile, UcLayout, UcSystem, CURTAILMENT_COST, SHEDDING_COST,
};
use drlp::Error;

fn one_bus(demand: f64) -> UcSystem {
    UcSystem {
        periods: 1,
        buses: vec![Bus {
            demand: vec![demand],
            forecast: vec![0.0],
            renewable_capacity: 0.0,
            sheddable: true,
        }],
        generators: vec![Generator {
            bus: 0,
            no_load_cost: 40.0,
            startup_cost: 100.0,
            shutdown_cost: 5.0,
            marginal_cost: 20.0,
            min_output: 10.0,
            max_output: 80.0,
            ramp_up: 30.0,
            ramp_down: 30.0,
            startup_ramp: 60.0,
            shutdown_ramp: 60.0,
            min_up: 1,
            min_down: 1,
        }],
        lines: vec![],
        shedding_cost: SHEDDING_COST,
        curtailment_cost: CURTAILMENT_COST,
        initial_on: vec![],
    }
}

/// Deterministic single-period cost: either stay off and shed everything, or
/// start up and serve up to the start-up ramp, shedding the rest.
fn one_bus_oracle(sys: &UcSystem) -> f64 {
    let g = &sys.generators[0];
    let d = sys.buses[0].demand[0];
    let off = sys.shedding_cost * d;
    if d < g.min_output {
        return off;
    }
    let x = d.min(g.max_output).min(g.startup_ramp);
    let on = g.no_load_cost + g.startup_cost + g.marginal_cost * x + sys.shedding_cost * (d - x);
    off.min(on)
}

#[test]
fn zero_forecast_error_reduces_to_deterministic_uc() {
    for demand in [0.0, 5.0, 10.0, 45.0, 60.0, 75.0] {
        let sys = one_bus(demand);
        let samples = SampleSet::new(vec![vec![0.0]; 3], &sys.support()).unwrap();
        let (inst, st) = build_uc_instance(&sys, &samples, 0.05).unwrap();
        let sol = solve_affine(&inst, &st, &AffineOptions::default()).unwrap();
        let expect = one_bus_oracle(&sys);
        assert!((sol.objective - expect).abs() <= 1e-6 * (1.0 + expect), "demand {demand}: {} vs {expect}", sol.objective);
    }
}

#[test]
fn certified_dispatch_balances_on_fresh_scenarios() {
    let sys = toy_system(ToyProfile::Tiny, 3);
    let support = sys.support();
    let sampler = MixtureSampler::for_box(&support, 1.0);
    let train = sampler.draw(&mut rng(1), &support, 12);
    let (inst, st) = build_uc_instance(&sys, &train, 0.01).unwrap();
    let sol = solve_affine_refined(&inst, &st, 100.0, &AffineOptions::default()).unwrap();
    let fresh = sampler.draw(&mut rng(2), &support, 60);
    let sols = recourse_solutions(&sol.x1_vec(), &inst, &fresh, 1).unwrap();
    for (s, xi) in sols.iter().zip(fresh.points()) {
        let (x2, _) = s.as_ref().expect("recourse is certified on the whole support");
        for r in balance_residuals(&sys, x2, xi) {
            assert!(r.abs() <= 1e-6, "residual {r}");
        }
    }
    // the policy itself balances as well: its intercepts and tied slopes track total error
    for xi in fresh.points().iter().take(10) {
        let x2 = sol.policy.evaluate(xi);
        for r in balance_residuals(&sys, &x2, xi) {
            assert!(r.abs() <= 1e-6, "policy residual {r}");
        }
    }
}

#[test]
fn penalty_costs_sit_on_curtailment_and_shedding_columns() {
    let sys = toy_system(ToyProfile::Small, 4);
    let lay = UcLayout::of(&sys);
    let samples = SampleSet::new(vec![vec![0.0; sys.uncertainty_dim()]; 2], &sys.support()).unwrap();
    let (inst, _) = build_uc_instance(&sys, &samples, 0.0).unwrap();
    assert_eq!(inst.n2(), lay.n2());
    assert_eq!(inst.n1(), lay.n1());
    for i in 0..sys.num_buses() {
        for t in 0..sys.periods {
            assert_eq!(inst.c2[lay.shed(i, t)], 3500.0);
            assert_eq!(inst.c2[lay.curtail(i, t)], 20.0);
        }
    }
    for (g, gen) in sys.generators.iter().enumerate() {
        assert_eq!(inst.c2[lay.dispatch(g, 2)], gen.marginal_cost);
        assert_eq!(inst.c1[lay.startup(g, 1)], gen.startup_cost);
    }
}

#[test]
fn system_and_samples_round_trip() {
    let sys = toy_system(ToyProfile::Small, 11);
    let support = sys.support();
    let samples = MixtureSampler::for_box(&support, 0.5).draw(&mut rng(3), &support, 7);
    let csv = samples_csv(&samples, &sample_header(&sys));
    assert!(csv.starts_with("bus0_t0,bus0_t1"));
    let (back, back_samples) = ingest_uc(&emit_uc(&sys), &csv).unwrap();
    assert_eq!(back, sys);
    assert_eq!(back_samples, samples);
}

#[test]
fn malformed_inputs_are_rejected_with_locations() {
    let sys = toy_system(ToyProfile::Tiny, 1);
    let text = emit_uc(&sys);

    let broken = text.replacen("\"periods\": 4", "\"periods\": \"four\"", 1);
    let err = parse_uc_system(&broken).unwrap_err();
    assert!(matches!(err, Error::Input(_)), "{err}");

    let mut bad = sys.clone();
    bad.generators[0].bus = 9;
    assert!(parse_uc_system(&emit_uc(&bad)).unwrap_err().to_string().contains("generators[0]"));

    let header = sample_header(&sys).join(",");
    let short = format!("{header}\n0,0,0,0,0,0,0\n");
    assert!(ingest_uc(&text, &short).unwrap_err().to_string().contains("line 2"));

    // bus 0 carries no renewable, so any nonzero error there is outside the support
    let mut row = vec!["0".to_string(); 8];
    row[0] = "0.5".into();
    let outside = format!("{header}\n{}\n", row.join(","));
    let err = ingest_uc(&text, &outside).unwrap_err().to_string();
    assert!(err.contains("coordinate 0"), "{err}");
}

#[test]
fn tied_policy_shares_one_slope_per_variable_and_period() {
    let sys = toy_system(ToyProfile::Small, 2);
    let samples = SampleSet::new(vec![vec![0.0; sys.uncertainty_dim()]; 2], &sys.support()).unwrap();
    let (inst, st) = build_uc_instance(&sys, &samples, 0.0).unwrap();
    let lay = UcLayout::of(&sys);
    assert_eq!(st.parameter_count, 2 * inst.n2());
    let theta: Vec<f64> = (0..st.parameter_count).map(|p| 1.0 + p as f64).collect();
    let pol = st.assemble(&theta);
    for k in 0..inst.n2() {
        let t = lay.period_of(k);
        for i in 0..sys.num_buses() {
            for s in 0..sys.periods {
                let v = pol.slope.get(k, sys.xi_index(i, s));
                assert_eq!(v, if s == t { theta[2 * k] } else { 0.0 });
            }
        }
        assert_eq!(pol.intercept[k], theta[2 * k + 1]);
    }
}

#[test]
fn toy_systems_and_compilation_are_deterministic() {
    for profile in [ToyProfile::Tiny, ToyProfile::Small] {
        let a = toy_system(profile, 5);
        assert_eq!(a, toy_system(profile, 5));
        assert_ne!(a, toy_system(profile, 6));
        let samples = SampleSet::new(vec![vec![0.0; a.uncertainty_dim()]], &a.support()).unwrap();
        let (i1, s1) = build_uc_instance(&a, &samples, 0.1).unwrap();
        let (i2, s2) = build_uc_instance(&a, &samples, 0.1).unwrap();
        assert_eq!(i1, i2);
        assert_eq!(s1, s2);
    }
}
