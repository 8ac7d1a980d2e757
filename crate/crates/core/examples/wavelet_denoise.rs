//! EM fit of a two-component wavelet mixture on a noisy piecewise-constant
//! signal, followed by band-wise shrinkage.

use plmmse::deblur::{denoise_z, fit_mixture};
use plmmse::linalg::FilterBank;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> plmmse::Result<()> {
    let (n, levels, sv2) = (1024, 5, 400.0f64);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut level = 0.0;
    let x: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.01 {
                level = 200.0 * rng.sample::<f64, _>(StandardNormal);
            }
            level
        })
        .collect();
    let z: Vec<f64> = x.iter().map(|v| v + sv2.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();

    let bank = FilterBank::haar();
    let params = fit_mixture(&bank.forward(&z, levels)?, levels, sv2, 20)?;
    for b in 0..params.band_count() {
        println!("band {b}: p = {:.3}, sigma1^2 = {:.0}", params.p()[b], params.sigma1_sq()[b]);
    }
    let x_hat = denoise_z(&z, &params, &bank, levels)?;
    let mse = |e: &[f64]| e.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64;
    println!("noisy MSE {:.1}, denoised MSE {:.1}", mse(&z), mse(&x_hat));
    Ok(())
}
