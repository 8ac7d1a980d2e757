//! Fuses a blurred signal with a noisy sharp copy and compares the result
//! with wavelet denoising alone and Wiener deconvolution alone.
//!
//! `cargo run --release --example deblur_fusion -- [trials] [seed]`

use plmmse::deblur::{deblur_experiment, DeblurExperimentConfig};

fn main() -> plmmse::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cfg = DeblurExperimentConfig {
        trials: args.first().and_then(|a| a.parse().ok()).unwrap_or(100),
        seed: args.get(1).and_then(|a| a.parse().ok()).unwrap_or(1),
        ..Default::default()
    };
    let res = deblur_experiment(&cfg)?;
    let [denoise, wiener, fused] = res.summary();
    println!("{:>14} {:>12} {:>10}", "estimator", "mse", "se");
    for (name, e) in [("denoise only", denoise), ("wiener only", wiener), ("fused", fused)] {
        println!("{name:>14} {:>12.3} {:>10.3}", e.mean, e.se);
    }
    println!("fused beats both in {} of {} trials", res.wins(), res.trials.len());
    let clamped = res.trials.iter().filter(|t| t.clamped).count();
    if clamped > 0 {
        println!("{clamped} trials clamped sigma_w^2 - beta");
    }
    Ok(())
}
