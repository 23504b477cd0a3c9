//! Column-and-constraint generation on the data-driven set Ω: the worst case is
//! taken over Ω while recourse feasibility is certified on every support vertex.

use drlp::generate::{capacity_instance, local_structure, rng, CapacityParams};
use drlp::refinement::build_omega;
use drlp::reformulation::{solve_affine, solve_affine_refined, AffineOptions};

fn main() -> drlp::Result<()> {
    let p = CapacityParams {
        facilities: 2,
        demands: 5,
        samples: 20,
        shortage_cap: Some(1.0),
        epsilon: 0.002,
    };
    let inst = capacity_instance(&p, &mut rng(3));
    let st = local_structure(2, 5);
    let omega = build_omega(&inst.support, &inst.samples, inst.epsilon, 100.0)?;
    println!("support  lower {:?}\n         upper {:?}", inst.support.lower(), inst.support.upper());
    println!("omega    lower {:?}\n         upper {:?}", omega.omega.lower(), omega.omega.upper());
    println!("escape probability <= {}", omega.guarantee);
    let plain = solve_affine(&inst, &st, &AffineOptions::default())?;
    let refined = solve_affine_refined(&inst, &st, 100.0, &AffineOptions::default())?;
    println!("plain objective   {:.6} ({} iterations)", plain.objective, plain.iterations());
    println!("refined objective {:.6} ({} iterations, {} certified vertices)",
        refined.objective,
        refined.iterations(),
        refined.trace.feasibility_vertices.len()
    );
    Ok(())
}
