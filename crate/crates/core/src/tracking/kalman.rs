use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Linear-Gaussian model `x' = F x + q`, `y = H x + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanModel {
    pub f: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub x: DVector<f64>,
    pub p: DMatrix<f64>,
}

impl KalmanState {
    /// Known initial state `0` (zero covariance).
    pub fn zeros(dim: usize) -> Self {
        Self {
            x: DVector::zeros(dim),
            p: DMatrix::zeros(dim, dim),
        }
    }
}

pub(crate) struct Update {
    pub state: KalmanState,
    pub innovation: DVector<f64>,
    pub innovation_cov: DMatrix<f64>,
}

pub(crate) fn check_psd(p: &DMatrix<f64>) -> Result<()> {
    let scale = p.amax().max(1.0);
    let asym = (p - p.transpose()).amax();
    if asym > 1e-9 * scale {
        return Err(Error::InvalidState(format!("covariance asymmetric by {asym:.3e}")));
    }
    let mut shifted = p.clone();
    for i in 0..p.nrows() {
        shifted[(i, i)] += 1e-9 * scale;
    }
    if Cholesky::new(shifted).is_none() {
        return Err(Error::InvalidState(format!(
            "covariance is not positive semidefinite (min eigenvalue {:.3e})",
            linalg::min_eigenvalue(p)
        )));
    }
    Ok(())
}

pub(crate) fn update(state: &KalmanState, y: &DVector<f64>, model: &KalmanModel, inflation: f64) -> Result<Update> {
    if !(inflation >= 1.0) || !inflation.is_finite() {
        return Err(Error::InvalidConfiguration(format!(
            "noise inflation must be finite and >= 1, got {inflation}"
        )));
    }
    let d = model.f.nrows();
    if state.x.len() != d || state.p.shape() != (d, d) || y.len() != model.h.nrows() {
        return Err(Error::invalid("state or observation dimension does not match the model"));
    }
    check_psd(&state.p)?;
    let x_pred = &model.f * &state.x;
    let p_pred = &model.f * &state.p * model.f.transpose() + &model.q;
    let ph = &p_pred * model.h.transpose();
    let s = linalg::symmetrize(&(&model.h * &ph + &model.r * inflation));
    let gain = &ph * linalg::pseudo_inverse(&s, 0.0)?;
    let innovation = y - &model.h * &x_pred;
    let x = x_pred + &gain * &innovation;
    // Joseph form keeps P positive semidefinite under rounding.
    let i_kh = DMatrix::identity(d, d) - &gain * &model.h;
    let p = linalg::symmetrize(&(&i_kh * &p_pred * i_kh.transpose() + &gain * (&model.r * inflation) * gain.transpose()));
    Ok(Update {
        state: KalmanState { x, p },
        innovation,
        innovation_cov: s,
    })
}

/// One predict/update cycle with observation noise `inflation · R`.
pub fn kalman_step(state: &KalmanState, y: &DVector<f64>, model: &KalmanModel, inflation: f64) -> Result<KalmanState> {
    Ok(update(state, y, model, inflation)?.state)
}
