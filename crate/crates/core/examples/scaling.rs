//! Master problem size and solve time as the number of samples grows.

use drlp::evaluation::{matched_samples, scaling_csv, scaling_experiment};
use drlp::generate::rng;
use drlp::reformulation::AffineOptions;
use drlp::uc::{build_uc_instance, toy_system, ToyProfile};

fn main() -> drlp::Result<()> {
    let sys = toy_system(ToyProfile::Tiny, 7);
    let support = sys.support();
    let family = |n: usize| build_uc_instance(&sys, &matched_samples(&mut rng(1), &support, n), 0.01);
    let rows = scaling_experiment(family, &[10, 100, 1000, 10000], 3, 10000.0, &AffineOptions::default())?;
    print!("{}", scaling_csv(&rows));
    Ok(())
}
