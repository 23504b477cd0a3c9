//! Exact scenario MILP on a tiny instance, its value as a function of the
//! radius, and the gap to the affine-policy optimum.

use drlp::exact::{affine_gap, exact_scenario_count, exact_value_curve, ExactOptions};
use drlp::generate::{capacity_instance, rng, CapacityParams};
use drlp::model::PolicyStructure;
use drlp::reformulation::AffineOptions;

fn main() -> drlp::Result<()> {
    let p = CapacityParams {
        facilities: 2,
        demands: 2,
        samples: 4,
        shortage_cap: None,
        epsilon: 0.5,
    };
    let inst = capacity_instance(&p, &mut rng(5));
    println!("scenarios: {}", exact_scenario_count(&inst));
    let grid = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0];
    let curve = exact_value_curve(&inst, &grid, &ExactOptions::default())?;
    for (e, v) in grid.iter().zip(&curve) {
        println!("eps {e:<5} exact {v:.6}");
    }
    let st = PolicyStructure::identity(inst.n2(), inst.m());
    let gap = affine_gap(&inst, &st, &AffineOptions::default(), &ExactOptions::default())?;
    println!("affine minus exact at eps {}: {gap:.6}", inst.epsilon);
    Ok(())
}
