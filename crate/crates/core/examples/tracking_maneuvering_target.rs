//! Maneuvering target observed in position and acceleration: squared errors
//! of the recursive PLMMSE filter, a Kalman filter on both channels, and a
//! two-model IMM across the acceleration noise grid.
//!
//! `cargo run --release --example tracking_maneuvering_target -- [runs] [steps] [mixture]`

use plmmse::tracking::{tracking_experiment, FilterKind, TrackingConfig, UNoise};

fn main() -> plmmse::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cfg = TrackingConfig {
        mc_runs: args.first().and_then(|a| a.parse().ok()).unwrap_or(20),
        steps: args.get(1).and_then(|a| a.parse().ok()).unwrap_or(1000),
        u_noise: if args.get(2).is_some_and(|a| a == "mixture") {
            UNoise::DEFAULT_MIXTURE
        } else {
            UNoise::Gaussian
        },
        ..Default::default()
    };
    let res = tracking_experiment(&cfg)?;
    for (q, name) in ["position", "velocity", "acceleration"].iter().enumerate() {
        println!("{name}");
        println!("{:>8} {:>12} {:>12} {:>12}", "sigma_v", "plmmse", "kalman", "imm");
        for pt in &res.points {
            let e = |f| pt.estimate(f, q).mean;
            println!(
                "{:>8.1} {:>12.4} {:>12.4} {:>12.4}",
                pt.sigma_v,
                e(FilterKind::Plmmse),
                e(FilterKind::Kalman),
                e(FilterKind::Imm)
            );
        }
    }
    Ok(())
}
