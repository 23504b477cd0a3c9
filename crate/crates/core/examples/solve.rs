//! Cutting-plane solve of a small facility-sizing instance over the full support.

use drlp::generate::{capacity_instance, rng, CapacityParams};
use drlp::model::PolicyStructure;
use drlp::reformulation::{solve_affine, AffineOptions};

fn main() -> drlp::Result<()> {
    let p = CapacityParams {
        facilities: 2,
        demands: 3,
        samples: 10,
        shortage_cap: Some(1.0),
        epsilon: 0.2,
    };
    let inst = capacity_instance(&p, &mut rng(1));
    let sol = solve_affine(&inst, &PolicyStructure::identity(inst.n2(), inst.m()), &AffineOptions::default())?;
    for h in &sol.trace.history {
        println!(
            "iter {:>2}  lower bound {:>10.4}  row violation {:>9.2e}  vertices +{}",
            h.iteration,
            h.lower_bound,
            h.row_violation.unwrap_or(0.0),
            h.row_vertices_added
        );
    }
    println!("open {:?}, sizes {:?}", sol.x1.binary, sol.x1.continuous);
    println!("objective {:.6}", sol.objective);
    Ok(())
}
