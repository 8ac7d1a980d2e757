use nalgebra::{DMatrix, DVector};

use super::kalman::{kalman_step, KalmanModel, KalmanState};
use super::StateSpaceModel;
use crate::error::{Error, Result};
use crate::estimator::additive_noise_gain;
use crate::linalg::GaussianRule;

/// Running quantities of the recursive partially linear filter.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursiveFilterState {
    /// `E[X(k) | Z(1..k)]`.
    pub x_hat_z: DVector<f64>,
    /// Linear correction driven by the innovation `Y − H X̂_Z`.
    pub x_tilde: DVector<f64>,
    pub p_cov: DMatrix<f64>,
    pub step: usize,
}

impl RecursiveFilterState {
    pub fn new(dim: usize) -> Self {
        Self {
            x_hat_z: DVector::zeros(dim),
            x_tilde: DVector::zeros(dim),
            p_cov: DMatrix::zeros(dim, dim),
            step: 0,
        }
    }

    pub fn estimate(&self) -> DVector<f64> {
        &self.x_hat_z + &self.x_tilde
    }
}

/// Recursive PLMMSE filter for a model whose `Z` channel observes the
/// previous driving noise, `Z(k) = W(k−1) + V(k)`.
///
/// Each cycle shrinks `Z(k)` to `E[W(k−1) | Z(k)]`, propagates `X̂_Z`, and runs
/// a Kalman step on the innovation with the observation noise inflated by
/// `σ_W² / (σ_W² − β)`.
#[derive(Debug, Clone)]
pub struct RecursivePlmmse {
    model: StateSpaceModel,
    beta: f64,
    inflation: f64,
    kalman: KalmanModel,
}

impl RecursivePlmmse {
    pub fn new(model: &StateSpaceModel, beta: f64) -> Result<Self> {
        let sigma_w_sq = model.sigma_w_sq();
        if !(beta >= 0.0) || beta >= sigma_w_sq {
            return Err(Error::InvalidConfiguration(format!(
                "beta = {beta} must lie in [0, sigma_w^2 = {sigma_w_sq})"
            )));
        }
        let defect = model.z_channel_defect();
        if defect > 1e-9 {
            return Err(Error::InvalidConfiguration(format!(
                "Z channel does not observe the driving noise (G F, G B − I defect {defect:.3e})"
            )));
        }
        Ok(Self {
            model: model.clone(),
            beta,
            inflation: sigma_w_sq / (sigma_w_sq - beta),
            kalman: model.y_kalman(),
        })
    }

    /// Filter with `β` evaluated by 512-node quadrature.
    pub fn with_quadrature(model: &StateSpaceModel) -> Result<Self> {
        let beta = model.process.beta(1.0, model.sigma_v_sq, &GaussianRule::new(512)?);
        Self::new(model, beta)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn inflation(&self) -> f64 {
        self.inflation
    }

    /// Observation noise variance of the inner Kalman filter,
    /// `σ_W² σ_U² / (σ_W² − β)`.
    pub fn inflated_noise(&self) -> f64 {
        self.model.sigma_u_sq * self.inflation
    }

    pub fn cycle(
        &self,
        state: &RecursiveFilterState,
        y: &DVector<f64>,
        z: &DVector<f64>,
    ) -> Result<(RecursiveFilterState, DVector<f64>)> {
        let m = &self.model;
        if z.len() != m.noise_dim() {
            return Err(Error::invalid("z length does not match the driving noise dimension"));
        }
        let w_hat = z.map(|zi| m.process.shrink(zi, 1.0, m.sigma_v_sq));
        let x_hat_z = &m.f * &state.x_hat_z + &m.b * w_hat;
        let y_tilde = y - &m.h * &x_hat_z;
        let inner = KalmanState {
            x: state.x_tilde.clone(),
            p: state.p_cov.clone(),
        };
        let next = kalman_step(&inner, &y_tilde, &self.kalman, self.inflation)?;
        let out = RecursiveFilterState {
            x_hat_z,
            x_tilde: next.x,
            p_cov: next.p,
            step: state.step + 1,
        };
        let x_pl = out.estimate();
        Ok((out, x_pl))
    }
}

/// One cycle of the recursive filter.
pub fn plmmse_cycle(
    state: &RecursiveFilterState,
    y: &DVector<f64>,
    z: &DVector<f64>,
    model: &StateSpaceModel,
    beta: f64,
) -> Result<(RecursiveFilterState, DVector<f64>)> {
    RecursivePlmmse::new(model, beta)?.cycle(state, y, z)
}

/// Batch PLMMSE on the stacked system `X = Ψ W`, `Y = H X + U`,
/// `Z = G X + V` over a horizon of `n` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPlmmse {
    /// Block lower-triangular map from `(W(0), …, W(n−1))` to `(X(1), …, X(n))`.
    pub psi: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub gain: DMatrix<f64>,
    pub x_hat_z: DVector<f64>,
}

impl BatchPlmmse {
    pub fn build(model: &StateSpaceModel, beta: f64, zs: &[DVector<f64>]) -> Result<Self> {
        let n = zs.len();
        if n == 0 {
            return Err(Error::invalid("empty horizon"));
        }
        let (d, r, ny) = (model.state_dim(), model.noise_dim(), model.h.nrows());
        let mut psi = DMatrix::zeros(n * d, n * r);
        for j in 0..n {
            let mut block = model.b.clone();
            for i in j..n {
                psi.view_mut((i * d, j * r), (d, r)).copy_from(&block);
                block = &model.f * block;
            }
        }
        let mut h = DMatrix::zeros(n * ny, n * d);
        for i in 0..n {
            h.view_mut((i * ny, i * d), (ny, d)).copy_from(&model.h);
        }
        let gram = &psi * psi.transpose();
        let cov_uu = DMatrix::identity(n * ny, n * ny) * model.sigma_u_sq;
        let gain = additive_noise_gain(&h, &(&gram * model.sigma_w_sq()), &(&gram * beta), &cov_uu)?;
        let w_hat = DVector::from_iterator(
            n * r,
            zs.iter().flat_map(|z| z.iter().map(|zi| model.process.shrink(*zi, 1.0, model.sigma_v_sq))),
        );
        let x_hat_z = &psi * w_hat;
        Ok(Self { psi, h, gain, x_hat_z })
    }

    /// Stacked estimate `X̂_Z + A (Y − H X̂_Z)`.
    pub fn estimate(&self, ys: &[DVector<f64>]) -> DVector<f64> {
        let y = DVector::from_iterator(self.h.nrows(), ys.iter().flat_map(|v| v.iter().copied()));
        &self.x_hat_z + &self.gain * (y - &self.h * &self.x_hat_z)
    }
}

/// Batch estimate of the final state `X(n)` from `Y(1..n)`, `Z(1..n)`.
pub fn batch_plmmse(model: &StateSpaceModel, beta: f64, ys: &[DVector<f64>], zs: &[DVector<f64>]) -> Result<DVector<f64>> {
    if ys.len() != zs.len() {
        return Err(Error::invalid("y and z horizons differ"));
    }
    let batch = BatchPlmmse::build(model, beta, zs)?;
    let d = model.state_dim();
    Ok(batch.estimate(ys).rows((ys.len() - 1) * d, d).into_owned())
}
