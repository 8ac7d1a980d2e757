use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::{
    compute_beta, linear_y_gain, mmse_denoise, sparse_plmmse_gain, AdditiveNoiseModel, BetaMethod, BruteForceMmse,
    Channels, ShrinkageStatistics, SpikeSlabPrior, ENUMERATION_LIMIT,
};
use crate::error::{Error, Result};
use crate::harness::{par_runs, Estimate, SeedTree};
use crate::linalg;

const STREAM_LABEL: u64 = 0x5BA5;

/// Hadamard-dictionary sparse recovery from a blurred channel and a weak
/// direct channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseExperimentConfig {
    pub m: usize,
    pub p: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    /// `h[n] = exp(−|n| / kernel_decay)` with circular distance.
    pub kernel_decay: f64,
    pub column_norm: f64,
    /// `G = g_scale · I`.
    pub g_scale: f64,
    /// Input SNR `10 log10(p σ₁² / σ_U²)` points in dB.
    pub snr_grid_db: Vec<f64>,
    /// SNR of the `Z` channel in the coefficient domain,
    /// `10 log10(α² p σ₁² / σ_V²)`.
    pub z_snr_db: f64,
    pub mc_count: usize,
    pub seed: u64,
    /// Run the enumeration oracle (only possible for `m <= 16`).
    pub brute_force: bool,
    pub beta_nodes: usize,
}

impl Default for SparseExperimentConfig {
    fn default() -> Self {
        Self {
            m: 64,
            p: 0.5,
            sigma1_sq: 1.0,
            sigma2_sq: 0.0,
            kernel_decay: 8.5,
            column_norm: 0.99,
            g_scale: 0.01,
            snr_grid_db: (0..=10).map(|k| -5.0 + 2.5 * k as f64).collect(),
            z_snr_db: 0.0,
            mc_count: 200,
            seed: 1,
            brute_force: false,
            beta_nodes: 512,
        }
    }
}

impl SparseExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || !self.m.is_power_of_two() {
            return Err(Error::invalid(format!("m = {} is not a power of two", self.m)));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::invalid("p must lie in (0, 1]"));
        }
        if !(self.sigma1_sq > 0.0) || !(self.sigma2_sq >= 0.0) {
            return Err(Error::invalid("sigma1_sq must be positive and sigma2_sq nonnegative"));
        }
        if !(self.kernel_decay > 0.0) || !(self.column_norm > 0.0) || self.g_scale == 0.0 {
            return Err(Error::invalid("kernel_decay, column_norm and g_scale must be positive"));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("SNR grid must be non-empty and finite"));
        }
        if !self.z_snr_db.is_finite() {
            return Err(Error::invalid("z_snr_db must be finite"));
        }
        if self.mc_count < 2 {
            return Err(Error::invalid("mc_count must be at least 2"));
        }
        if self.brute_force && self.m > ENUMERATION_LIMIT {
            return Err(Error::SizeLimit {
                dim: self.m,
                limit: ENUMERATION_LIMIT,
            });
        }
        Ok(())
    }

    pub fn signal_power(&self) -> f64 {
        self.p * self.sigma1_sq
    }

    pub fn sigma_u_sq(&self, snr_db: f64) -> f64 {
        self.signal_power() / 10f64.powf(snr_db / 10.0)
    }

    pub fn sigma_v_sq(&self) -> f64 {
        self.g_scale * self.g_scale * self.signal_power() / 10f64.powf(self.z_snr_db / 10.0)
    }
}

/// Circulant convolution matrix with kernel `exp(−d / decay)`, `d` the
/// circular distance, scaled so every column has norm `column_norm`.
pub fn circulant_blur(m: usize, decay: f64, column_norm: f64) -> DMatrix<f64> {
    let kernel: Vec<f64> = (0..m).map(|n| (-(n.min(m - n) as f64) / decay).exp()).collect();
    let norm = kernel.iter().map(|v| v * v).sum::<f64>().sqrt();
    DMatrix::from_fn(m, m, |i, j| kernel[(i + m - j) % m] * column_norm / norm)
}

/// Per-run mean squared error per coordinate at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePoint {
    pub snr_db: f64,
    pub sigma_u_sq: f64,
    pub z_only: Vec<f64>,
    pub y_linear: Vec<f64>,
    pub plmmse: Vec<f64>,
    pub mmse: Option<Vec<f64>>,
}

impl SparsePoint {
    pub fn z_only_mse(&self) -> Estimate {
        Estimate::from_samples(&self.z_only)
    }

    pub fn y_linear_mse(&self) -> Estimate {
        Estimate::from_samples(&self.y_linear)
    }

    pub fn plmmse_mse(&self) -> Estimate {
        Estimate::from_samples(&self.plmmse)
    }

    pub fn mmse_mse(&self) -> Option<Estimate> {
        self.mmse.as_deref().map(Estimate::from_samples)
    }

    /// Paired `MSE(a) − MSE(b)` over the common runs.
    pub fn paired_gap(a: &[f64], b: &[f64]) -> Estimate {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        Estimate::from_samples(&d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseExperimentResult {
    pub config: SparseExperimentConfig,
    pub stats: ShrinkageStatistics,
    pub points: Vec<SparsePoint>,
}

pub fn sparse_experiment(cfg: &SparseExperimentConfig) -> Result<SparseExperimentResult> {
    cfg.validate()?;
    let m = cfg.m;
    let psi = linalg::hadamard_dictionary(m)?;
    let h = circulant_blur(m, cfg.kernel_decay, cfg.column_norm);
    let g = DMatrix::identity(m, m) * cfg.g_scale;
    let prior = SpikeSlabPrior::homogeneous(m, cfg.p, cfg.sigma1_sq, cfg.sigma2_sq)?;
    let sigma_v_sq = cfg.sigma_v_sq();
    let stats = compute_beta(
        &prior,
        cfg.g_scale,
        sigma_v_sq,
        BetaMethod::Quadrature { nodes: cfg.beta_nodes },
    )?;

    struct PointSetup {
        gain_l: DMatrix<f64>,
        gain_pl: DMatrix<f64>,
        oracle: Option<BruteForceMmse>,
    }
    let setups = cfg
        .snr_grid_db
        .iter()
        .map(|snr| {
            let model = AdditiveNoiseModel::new(h.clone(), g.clone(), cfg.g_scale, cfg.sigma_u_sq(*snr), sigma_v_sq)?;
            let oracle = if cfg.brute_force {
                Some(BruteForceMmse::new(&model, &prior, &psi, Channels::Both)?)
            } else {
                None
            };
            Ok(PointSetup {
                gain_l: linear_y_gain(&model, &prior, &psi)?,
                gain_pl: sparse_plmmse_gain(&model, &prior, &stats, &psi, true)?,
                oracle,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.context("sparse experiment setup"))?;
    let z_model = AdditiveNoiseModel::new(h.clone(), g.clone(), cfg.g_scale, 1.0, sigma_v_sq)?;

    let seeds = SeedTree::new(cfg.seed);
    let runs: Vec<Result<Vec<[f64; 4]>>> = par_runs(cfg.mc_count, |r| {
        let mut rng = seeds.stream(STREAM_LABEL, r as u64);
        let (w, _) = prior.sample(&mut rng);
        let x = &psi * w;
        let n_u = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
        let n_v: DVector<f64> = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
        let z = &g * &x + n_v * sigma_v_sq.sqrt();
        let x_z = mmse_denoise(&z, &z_model, &prior, &psi)?;
        let err = |e: &DVector<f64>| (e - &x).norm_squared() / m as f64;
        let e_z = err(&x_z);
        cfg.snr_grid_db
            .iter()
            .zip(&setups)
            .map(|(snr, s)| {
                let y = &h * &x + &n_u * cfg.sigma_u_sq(*snr).sqrt();
                let x_l = &s.gain_l * &y;
                let x_pl = &s.gain_pl * (&y - &h * &x_z) + &x_z;
                let e_mmse = match &s.oracle {
                    Some(o) => err(&o.posterior(Some(&y), &z)?.mean),
                    None => f64::NAN,
                };
                Ok([e_z, err(&x_l), err(&x_pl), e_mmse])
            })
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let points = cfg
        .snr_grid_db
        .iter()
        .enumerate()
        .map(|(k, snr)| {
            let col = |j: usize| runs.iter().map(|r| r[k][j]).collect::<Vec<f64>>();
            SparsePoint {
                snr_db: *snr,
                sigma_u_sq: cfg.sigma_u_sq(*snr),
                z_only: col(0),
                y_linear: col(1),
                plmmse: col(2),
                mmse: cfg.brute_force.then(|| col(3)),
            }
        })
        .collect();
    Ok(SparseExperimentResult {
        config: cfg.clone(),
        stats,
        points,
    })
}
