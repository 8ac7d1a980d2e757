//! Sparse Hadamard-domain signal observed through a circular blur and a weak
//! identity channel: MSE of the denoiser, the linear estimator from `Y`, and
//! the partially linear combination across an input SNR sweep.

use plmmse::sparse::{sparse_experiment, SparseExperimentConfig};

fn main() -> plmmse::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let cfg = SparseExperimentConfig {
        p: args.first().copied().unwrap_or(0.5),
        z_snr_db: args.get(1).copied().unwrap_or(0.0),
        mc_count: 200,
        ..Default::default()
    };
    let res = sparse_experiment(&cfg)?;
    println!("m = {}, p = {:.3}, beta = {:.4e}, sigma_w^2 = {:.4e}", cfg.m, cfg.p, res.stats.beta[0], res.stats.sigma_w_sq[0]);
    println!("{:>8} {:>12} {:>12} {:>12}", "snr_db", "z_only", "y_linear", "plmmse");
    for pt in &res.points {
        println!(
            "{:>8.1} {:>12.5} {:>12.5} {:>12.5}",
            pt.snr_db,
            pt.z_only_mse().mean,
            pt.y_linear_mse().mean,
            pt.plmmse_mse().mean
        );
    }
    Ok(())
}
