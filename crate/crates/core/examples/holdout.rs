//! Radius selection by holdout, then out-of-sample comparison against the
//! sample-average and pure robust modes.

use drlp::evaluation::{holdout_select, out_of_sample, solve_robust, solve_saa, HoldoutOptions};
use drlp::generate::{capacity_instance, rng, uniform_samples, CapacityParams};
use drlp::model::PolicyStructure;
use drlp::reformulation::{solve_affine, AffineOptions};

fn main() -> drlp::Result<()> {
    let p = CapacityParams {
        facilities: 2,
        demands: 3,
        samples: 16,
        shortage_cap: None,
        epsilon: 0.0,
    };
    let inst = capacity_instance(&p, &mut rng(8));
    let st = PolicyStructure::identity(inst.n2(), inst.m());
    let opts = HoldoutOptions {
        beta: None,
        ..HoldoutOptions::default()
    };
    let res = holdout_select(&inst, &st, &[0.0, 0.1, 0.5, 1.0, 2.0], &opts)?;
    print!("{}", res.to_csv());
    let fresh = uniform_samples(&mut rng(99), &inst.support, 400);
    let aff = AffineOptions::default();
    let dro = solve_affine(&inst.with_epsilon(res.epsilon), &st, &aff)?;
    let saa = solve_saa(&inst, &st, &aff)?;
    let rob = solve_robust(&inst, &st, &aff)?;
    for (name, sol) in [("dro", &dro), ("saa", &saa), ("robust", &rob)] {
        let rep = out_of_sample(&sol.x1_vec(), &inst, &fresh, 2)?;
        println!("{name:<7} in-sample {:>10.4}  out-of-sample {:>10.4}", sol.objective, rep.mean_cost);
    }
    Ok(())
}
