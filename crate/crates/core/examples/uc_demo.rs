//! Toy unit commitment: commit generators day-ahead under renewable forecast
//! errors, then re-dispatch on fresh scenarios.

use drlp::cli::uc_error_sampler;
use drlp::evaluation::{out_of_sample, recourse_solutions};
use drlp::generate::rng;
use drlp::reformulation::{solve_affine_refined, AffineOptions};
use drlp::uc::{balance_residuals, build_uc_instance, toy_system, ToyProfile, UcLayout};

fn main() -> drlp::Result<()> {
    let sys = toy_system(ToyProfile::Tiny, 7);
    let support = sys.support();
    let sampler = uc_error_sampler(&sys);
    let history = sampler.draw(&mut rng(7), &support, 30);
    let (inst, st) = build_uc_instance(&sys, &history, 0.01)?;
    println!("first stage {} ({} binary), recourse {}, rows {}", inst.n1(), inst.first_stage.n_binary, inst.n2(), inst.num_rows());
    let sol = solve_affine_refined(&inst, &st, 100.0, &AffineOptions::default())?;
    let lay = UcLayout::of(&sys);
    for g in 0..sys.num_generators() {
        let on: String = (0..sys.periods).map(|t| if sol.x1.binary[lay.on(g, t)] > 0.5 { '#' } else { '.' }).collect();
        println!("generator {g}: {on}");
    }
    let fresh = sampler.draw(&mut rng(8), &support, 200);
    let rep = out_of_sample(&sol.x1_vec(), &inst, &fresh, 2)?;
    let worst = recourse_solutions(&sol.x1_vec(), &inst, &fresh, 2)?
        .iter()
        .zip(fresh.points())
        .filter_map(|(s, xi)| s.as_ref().map(|s| balance_residuals(&sys, &s.0, xi)))
        .flatten()
        .fold(0.0f64, |a, r| a.max(r.abs()));
    println!("objective {:.2}, out-of-sample mean {:.2}, infeasible {}, max residual {worst:.1e}", sol.objective, rep.mean_cost, rep.infeasible_count);
    Ok(())
}
