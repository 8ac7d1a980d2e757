//! Builds the worst-case joint law for given second-order statistics and
//! `E[X|Z]`, then checks that fitted nonlinear challengers do not beat the
//! partially linear estimator on it.

use plmmse::harness::SeedTree;
use plmmse::minimax::{build_worst_case, constraint_report, demo_scenario, minimax_check, sample_worst_case, Challenger};

fn main() -> plmmse::Result<()> {
    let seeds = SeedTree::new(1);
    let (target, sampler) = demo_scenario(2, 2, 2, 0.5, &seeds.child(0))?;
    let c = build_worst_case(target, sampler, 50_000, &seeds.child(1))?;
    let train = sample_worst_case(&c, 20_000, &seeds.child(2))?;
    let mut rng = seeds.stream(7, 0);
    let mut challengers = vec![Challenger::joint_linear(&train)?];
    for k in 0..3 {
        challengers.push(Challenger::random_features(format!("features_{k}"), &train, 32, &mut rng)?);
    }
    let report = minimax_check(&c, &challengers, 100_000, &seeds.child(3))?;
    println!("{:<12} {:>10} {:>10}", "estimator", "mse", "excess");
    println!("{:<12} {:>10.4} {:>10}", "plmmse", report.plmmse.mean, "-");
    for r in &report.challengers {
        println!("{:<12} {:>10.4} {:>10.4}", r.name, r.mse.mean, r.excess.mean);
    }
    let check = constraint_report(&c, &sample_worst_case(&c, 100_000, &seeds.child(4))?)?;
    println!(
        "covariance error: X {:.2}%, XY {:.2}%; E[X|Z] residuals within 3 SE: {}",
        100.0 * check.cov_xx_error,
        100.0 * check.cov_xy_error,
        check.residuals_within(3.0)
    );
    Ok(())
}
