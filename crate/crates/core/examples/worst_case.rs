//! Worst-case expected recourse cost of a fixed affine policy, with the dual
//! multipliers that certify it.

use drlp::generate::{rng, worst_case_tuple};
use drlp::worst_case::{dual_value, samplewise_worst_case, worst_case_lp};

fn main() -> drlp::Result<()> {
    let t = worst_case_tuple(&mut rng(42), 4, 20);
    let mean = t.samples.mean();
    println!("m = {}, N = {}, epsilon = {:.3}", t.support.dim(), t.samples.len(), t.epsilon);
    for eps in [0.0, t.epsilon, 2.0 * t.epsilon] {
        let wc = worst_case_lp(&t.policy, &t.c2, &t.support, &mean, eps)?;
        let per = samplewise_worst_case(&t.policy, &t.c2, &t.support, &t.samples, eps)?;
        let (dual, mu) = dual_value(&t.policy, &t.c2, &t.support, &mean, eps)?;
        println!(
            "eps {eps:.3}: aggregated {:.6}  per-sample {:.6}  dual {:.6}  mu0 {:.4}",
            wc.value, per, dual, mu.mu0
        );
    }
    Ok(())
}
