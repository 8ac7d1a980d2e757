//! Scalar spike-and-slab MMSE shrinkage `E[W | αW + V = z]` and the
//! shrinkage variance `β = E[Var(W | z)]` used by the sparse gain.

use plmmse::sparse::{compute_beta, BetaMethod, ScalarSpikeSlab, SpikeSlabPrior};

fn main() -> plmmse::Result<()> {
    let (p, s1, s2, alpha, sv2) = (0.2, 25.0, 0.01, 1.0, 1.0);
    let prior = ScalarSpikeSlab::new(p, s1, s2)?;
    println!("{:>6} {:>10} {:>10}", "z", "shrink", "linear");
    let linear = alpha * prior.variance() / (alpha * alpha * prior.variance() + sv2);
    for k in -8..=8 {
        let z = k as f64;
        println!("{z:>6.1} {:>10.4} {:>10.4}", prior.shrink(z, alpha, sv2), linear * z);
    }
    let stats = compute_beta(&SpikeSlabPrior::homogeneous(1, p, s1, s2)?, alpha, sv2, BetaMethod::Quadrature { nodes: 512 })?;
    println!("beta = {:.5}, sigma_w^2 = {:.5}", stats.beta[0], stats.sigma_w_sq[0]);
    Ok(())
}
