use rand::Rng;
use rand_distr::StandardNormal;

use super::{circular_convolve, gaussian_blur_spectrum, wiener_deblur, DeblurPipeline, MomentPooling};
use crate::error::{Error, Result};
use crate::harness::{par_runs, Estimate, SeedTree};
use crate::linalg::FilterBank;

const STREAM_LABEL: u64 = 0xDEB1;

/// Synthetic 1-D deblurring: a signal sparse in the wavelet basis, blurred
/// by a Gaussian kernel with quantization-level noise in `Y` and heavy white
/// noise in `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeblurExperimentConfig {
    pub n: usize,
    pub levels: usize,
    pub bank: FilterBank,
    pub p: f64,
    pub sigma1_sq: f64,
    pub sigma_u_sq: f64,
    pub sigma_v_sq: f64,
    /// Width of the Gaussian blur kernel in samples.
    pub blur_sigma: f64,
    pub trials: usize,
    pub em_iterations: usize,
    pub pooling: MomentPooling,
    pub seed: u64,
}

impl Default for DeblurExperimentConfig {
    fn default() -> Self {
        Self {
            n: 1024,
            levels: 5,
            bank: FilterBank::haar(),
            p: 0.1,
            sigma1_sq: 1e4,
            sigma_u_sq: 1.0 / 12.0,
            sigma_v_sq: 2025.0,
            blur_sigma: 3.2,
            trials: 100,
            em_iterations: 10,
            pooling: MomentPooling::AllCoefficients,
            seed: 1,
        }
    }
}

impl DeblurExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        crate::linalg::WaveletLayout::new(self.n, self.levels)?;
        if (self.n >> self.levels) < super::MIN_EM_COEFFICIENTS {
            return Err(Error::invalid(format!(
                "approximation band has {} coefficients, EM needs {}",
                self.n >> self.levels,
                super::MIN_EM_COEFFICIENTS
            )));
        }
        if !(self.p > 0.0 && self.p <= 1.0) || !(self.sigma1_sq > 0.0) {
            return Err(Error::invalid("p must lie in (0, 1] and sigma1_sq be positive"));
        }
        if !(self.sigma_u_sq > 0.0) || !(self.sigma_v_sq > 0.0) || !(self.blur_sigma > 0.0) {
            return Err(Error::invalid("noise variances and blur width must be positive"));
        }
        if self.trials == 0 || self.em_iterations == 0 {
            return Err(Error::invalid("trials and em_iterations must be positive"));
        }
        Ok(())
    }
}

/// Per-sample squared errors of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeblurTrial {
    pub denoise_only: f64,
    pub wiener_only: f64,
    pub fused: f64,
    pub sigma_w_sq_hat: f64,
    pub beta_hat: f64,
    pub clamped: bool,
}

impl DeblurTrial {
    pub fn fused_wins(&self) -> bool {
        self.fused <= self.denoise_only.min(self.wiener_only)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeblurExperimentResult {
    pub config: DeblurExperimentConfig,
    pub trials: Vec<DeblurTrial>,
}

impl DeblurExperimentResult {
    pub fn wins(&self) -> usize {
        self.trials.iter().filter(|t| t.fused_wins()).count()
    }

    pub fn summary(&self) -> [Estimate; 3] {
        let col = |f: fn(&DeblurTrial) -> f64| Estimate::from_samples(&self.trials.iter().map(f).collect::<Vec<_>>());
        [col(|t| t.denoise_only), col(|t| t.wiener_only), col(|t| t.fused)]
    }
}

pub fn deblur_experiment(cfg: &DeblurExperimentConfig) -> Result<DeblurExperimentResult> {
    cfg.validate()?;
    let h_freq = gaussian_blur_spectrum(cfg.n, cfg.blur_sigma)?;
    let pipeline = DeblurPipeline {
        bank: cfg.bank.clone(),
        em_iterations: cfg.em_iterations,
        pooling: cfg.pooling,
        ..DeblurPipeline::new(h_freq.clone(), cfg.sigma_u_sq, cfg.sigma_v_sq, cfg.levels)
    };
    let seeds = SeedTree::new(cfg.seed);
    let trials = par_runs(cfg.trials, |t| -> Result<DeblurTrial> {
        let mut rng = seeds.stream(STREAM_LABEL, t as u64);
        let w: Vec<f64> = (0..cfg.n)
            .map(|_| {
                let slab = rng.random::<f64>() < cfg.p;
                let n: f64 = rng.sample(StandardNormal);
                if slab {
                    cfg.sigma1_sq.sqrt() * n
                } else {
                    0.0
                }
            })
            .collect();
        let x = cfg.bank.inverse(&w, cfg.levels)?;
        let blurred = circular_convolve(&x, &h_freq)?;
        let y: Vec<f64> = blurred
            .iter()
            .map(|v| v + cfg.sigma_u_sq.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let z: Vec<f64> = x
            .iter()
            .map(|v| v + cfg.sigma_v_sq.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let out = pipeline.run(&y, &z).map_err(|e| e.context(format!("deblur trial {t}")))?;
        let sw = out.moments.sigma_w_sq.max(cfg.sigma_u_sq * 1e-6);
        let wiener = wiener_deblur(&y, &h_freq, sw, cfg.sigma_u_sq)?;
        let mse = |e: &[f64]| e.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / cfg.n as f64;
        Ok(DeblurTrial {
            denoise_only: mse(&out.x_hat_z),
            wiener_only: mse(&wiener),
            fused: mse(&out.fused),
            sigma_w_sq_hat: out.moments.sigma_w_sq,
            beta_hat: out.moments.beta,
            clamped: out.clamped,
        })
    });
    Ok(DeblurExperimentResult {
        config: cfg.clone(),
        trials: trials.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_is_deterministic_and_fusion_helps() {
        let cfg = DeblurExperimentConfig {
            n: 512,
            levels: 4,
            trials: 6,
            ..Default::default()
        };
        let a = deblur_experiment(&cfg).unwrap();
        let b = deblur_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.wins() >= 5, "{:?}", a.trials);
        let [dn, wi, fu] = a.summary();
        assert!(fu.mean < dn.mean && fu.mean < wi.mean);
    }

    #[test]
    fn rejects_tiny_approximation_band() {
        let cfg = DeblurExperimentConfig {
            n: 64,
            levels: 3,
            ..Default::default()
        };
        assert!(deblur_experiment(&cfg).is_err());
    }
}
