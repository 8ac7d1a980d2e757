//! Spike-and-slab signals observed through two additive-noise channels
//! `Y = H X + U`, `Z = G X + V` with `X = Ψ W` and `GᵀG = α² I`.

mod brute;
mod experiment;
mod prior;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimator::{ConditionalMean, PartiallyLinearEstimator};
use crate::linalg;

pub use brute::{brute_force_mmse, BruteForceMmse, BruteForcePosterior, Channels, ENUMERATION_LIMIT};
pub use experiment::{
    circulant_blur, sparse_experiment, SparseExperimentConfig, SparseExperimentResult, SparsePoint,
};
pub use prior::{compute_beta, shrink, BetaMethod, ScalarSpikeSlab, ShrinkageStatistics, SpikeSlabPrior};

#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveNoiseModel {
    h: DMatrix<f64>,
    g: DMatrix<f64>,
    alpha: f64,
    sigma_u_sq: f64,
    sigma_v_sq: f64,
}

impl AdditiveNoiseModel {
    pub fn new(h: DMatrix<f64>, g: DMatrix<f64>, alpha: f64, sigma_u_sq: f64, sigma_v_sq: f64) -> Result<Self> {
        if h.ncols() != g.ncols() {
            return Err(Error::invalid(format!(
                "H has {} columns but G has {}",
                h.ncols(),
                g.ncols()
            )));
        }
        if h.iter().chain(g.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("H and G must be finite"));
        }
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(Error::invalid("alpha must be finite and nonzero"));
        }
        for (name, v) in [("sigma_u_sq", sigma_u_sq), ("sigma_v_sq", sigma_v_sq)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let m = g.ncols();
        let deviation = (g.transpose() * &g - DMatrix::identity(m, m) * (alpha * alpha)).amax();
        if deviation > 1e-9 {
            return Err(Error::invalid(format!(
                "G^T G deviates from alpha^2 I by {deviation:.3e}"
            )));
        }
        Ok(Self {
            h,
            g,
            alpha,
            sigma_u_sq,
            sigma_v_sq,
        })
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma_u_sq(&self) -> f64 {
        self.sigma_u_sq
    }

    pub fn sigma_v_sq(&self) -> f64 {
        self.sigma_v_sq
    }

    pub fn x_dim(&self) -> usize {
        self.h.ncols()
    }

    pub fn y_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn z_dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn with_sigma_u_sq(&self, sigma_u_sq: f64) -> Result<Self> {
        Self::new(self.h.clone(), self.g.clone(), self.alpha, sigma_u_sq, self.sigma_v_sq)
    }
}

fn check_dictionary(psi: &DMatrix<f64>, m: usize) -> Result<()> {
    if psi.shape() != (m, m) {
        return Err(Error::invalid(format!(
            "dictionary is {:?}, expected {m}x{m}",
            psi.shape()
        )));
    }
    let defect = linalg::orthonormality_defect(psi);
    if defect > 1e-9 {
        return Err(Error::invalid(format!("dictionary is not orthonormal (defect {defect:.3e})")));
    }
    Ok(())
}

fn check_prior(prior: &SpikeSlabPrior, m: usize) -> Result<()> {
    if prior.dim() != m {
        return Err(Error::invalid(format!("prior has dimension {}, expected {m}", prior.dim())));
    }
    Ok(())
}

/// `E[X|Z] = Ψ f̃(α⁻¹ Ψᵀ Gᵀ Z)`.
pub fn mmse_denoise(
    z: &DVector<f64>,
    model: &AdditiveNoiseModel,
    prior: &SpikeSlabPrior,
    psi: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    check_dictionary(psi, model.x_dim())?;
    check_prior(prior, model.x_dim())?;
    if z.len() != model.z_dim() {
        return Err(Error::invalid(format!("z has length {}, expected {}", z.len(), model.z_dim())));
    }
    Ok(denoise_unchecked(z, model, prior, psi))
}

fn denoise_unchecked(
    z: &DVector<f64>,
    model: &AdditiveNoiseModel,
    prior: &SpikeSlabPrior,
    psi: &DMatrix<f64>,
) -> DVector<f64> {
    let z_tilde = psi.tr_mul(&model.g.tr_mul(z)) / model.alpha;
    let w = DVector::from_iterator(
        prior.dim(),
        z_tilde
            .iter()
            .zip(prior.coefficients())
            .map(|(zt, c)| c.shrink(*zt, model.alpha, model.sigma_v_sq)),
    );
    psi * w
}

/// [`mmse_denoise`] as a shareable closure, validated once.
pub fn sparse_conditional_mean(
    model: &AdditiveNoiseModel,
    prior: &SpikeSlabPrior,
    psi: &DMatrix<f64>,
) -> Result<ConditionalMean> {
    check_dictionary(psi, model.x_dim())?;
    check_prior(prior, model.x_dim())?;
    let (model, prior, psi) = (model.clone(), prior.clone(), psi.clone());
    Ok(Arc::new(move |z: &[f64]| {
        denoise_unchecked(&DVector::from_column_slice(z), &model, &prior, &psi)
    }))
}

/// Gain `A` of the sparse PLMMSE estimator.
///
/// The general form is `Ψ D Ψᵀ Hᵀ (H Ψ D Ψᵀ Hᵀ + σ_U² I)^†` with
/// `D = diag(σ_W² − β)`. For a homogeneous prior this reduces to
/// `Hᵀ (H Hᵀ + σ_U² / (σ_W² − β) I)^†`, which is zero when `β = σ_W²`.
pub fn sparse_plmmse_gain(
    model: &AdditiveNoiseModel,
    prior: &SpikeSlabPrior,
    stats: &ShrinkageStatistics,
    psi: &DMatrix<f64>,
    homogeneous: bool,
) -> Result<DMatrix<f64>> {
    let m = model.x_dim();
    check_prior(prior, m)?;
    if stats.dim() != m {
        return Err(Error::invalid(format!("statistics have dimension {}, expected {m}", stats.dim())));
    }
    let h = model.h();
    if homogeneous {
        if !prior.is_homogeneous() || !stats.is_homogeneous() {
            return Err(Error::invalid("homogeneous gain requested for heterogeneous parameters"));
        }
        let d = stats.sigma_w_sq[0] - stats.beta[0];
        if d <= 0.0 {
            return Ok(DMatrix::zeros(m, model.y_dim()));
        }
        let n = model.y_dim();
        let inner = h * h.transpose() + DMatrix::identity(n, n) * (model.sigma_u_sq / d);
        return Ok(h.transpose() * linalg::pseudo_inverse(&inner, 0.0)?);
    }
    check_dictionary(psi, m)?;
    let d = stats.residual_variances().map(|v| v.max(0.0));
    let residual = psi * DMatrix::from_diagonal(&d) * psi.transpose();
    let rh = residual * h.transpose();
    let n = model.y_dim();
    let inner = h * &rh + DMatrix::identity(n, n) * model.sigma_u_sq;
    Ok(rh * linalg::pseudo_inverse(&linalg::symmetrize(&inner), 0.0)?)
}

/// Sparse PLMMSE estimator `A Y + (I − A H) E[X|Z]`.
pub fn sparse_plmmse(
    model: &AdditiveNoiseModel,
    prior: &SpikeSlabPrior,
    stats: &ShrinkageStatistics,
    psi: &DMatrix<f64>,
) -> Result<PartiallyLinearEstimator> {
    let homogeneous = prior.is_homogeneous() && stats.is_homogeneous();
    let gain = sparse_plmmse_gain(model, prior, stats, psi, homogeneous)?;
    let xz = sparse_conditional_mean(model, prior, psi)?;
    PartiallyLinearEstimator::with_channel(gain, model.h().clone(), xz)
}

/// LMMSE estimator of `X` from `Y` alone: `Γ_XX Hᵀ (H Γ_XX Hᵀ + σ_U² I)^†`.
pub fn linear_y_gain(model: &AdditiveNoiseModel, prior: &SpikeSlabPrior, psi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_dictionary(psi, model.x_dim())?;
    check_prior(prior, model.x_dim())?;
    let cov_xx = psi * DMatrix::from_diagonal(&prior.variances()) * psi.transpose();
    let zero = DMatrix::zeros(model.x_dim(), model.x_dim());
    let cov_uu = DMatrix::identity(model.y_dim(), model.y_dim()) * model.sigma_u_sq;
    crate::estimator::additive_noise_gain(model.h(), &cov_xx, &zero, &cov_uu)
}

pub(crate) mod test_support {
    use super::*;
    use rand::Rng;

    /// Random orthonormal matrix from the QR factorization of a Gaussian matrix.
    pub fn random_orthonormal<R: Rng>(rng: &mut R, m: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        a.qr().q()
    }

    pub fn random_prior<R: Rng>(rng: &mut R, m: usize) -> SpikeSlabPrior {
        SpikeSlabPrior::new(
            (0..m).map(|_| rng.random_range(0.1..0.9)).collect(),
            (0..m).map(|_| rng.random_range(1.0..6.0)).collect(),
            (0..m).map(|_| rng.random_range(0.0..0.3)).collect(),
        )
        .unwrap()
    }

    pub fn random_model<R: Rng>(rng: &mut R, n: usize, m: usize, alpha: f64) -> AdditiveNoiseModel {
        let h = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal) / (m as f64).sqrt());
        let g = random_orthonormal(rng, m) * alpha;
        AdditiveNoiseModel::new(h, g, alpha, rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)).unwrap()
    }
}
