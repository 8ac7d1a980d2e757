//! Binary `X = ±1` seen through two Gaussian channels. Prints the MSE of the
//! naive convex combinations of the linear and nonlinear single-channel
//! estimates against the partially linear combiner.
//!
//! ```text
//! cargo run --release --example toy_combiner -- [sigma_u2] [sigma_v2]
//! ```

use plmmse::estimator::{toy_mse_curves, ScalarToyConfig};
use plmmse::harness::{parse_grid, SeedTree};

fn main() -> plmmse::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let cfg = ScalarToyConfig::new(args.first().copied().unwrap_or(1.0), args.get(1).copied().unwrap_or(1.0))?;
    let alphas = parse_grid("0:0.1:1")?;
    let curves = toy_mse_curves(&cfg, &alphas, 100_000, SeedTree::new(1))?;
    println!("gamma = {:.4}, Var(E[X|Z]) = {:.4}", curves.gamma, curves.xhat_variance);
    println!("{:>6} {:>10} {:>10}", "alpha", "naive", "excess");
    for ((a, n), g) in alphas.iter().zip(&curves.naive).zip(&curves.naive_minus_plmmse) {
        println!("{a:>6.2} {:>10.5} {:>10.5}", n.mean, g.mean);
    }
    println!("plmmse {:>10.5} +- {:.5}", curves.plmmse.mean, curves.plmmse.se);
    println!("relative gap to the best naive weight: {:.1}%", 100.0 * curves.relative_gap());
    Ok(())
}
