use nalgebra::{Cholesky, DMatrix, DVector};

use super::kalman::{check_psd, update, KalmanModel, KalmanState};
use super::StateSpaceModel;
use crate::error::{Error, Result};

/// Interacting multiple model bank of two Kalman filters on `[Y; Z]`:
/// model 0 uses the nominal process variance `σ₂²`, model 1 the maneuver
/// variance `σ₁²`.
#[derive(Debug, Clone)]
pub struct ImmBank {
    models: [KalmanModel; 2],
    transition: [[f64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImmState {
    pub filters: [KalmanState; 2],
    pub probabilities: [f64; 2],
    /// Set when both likelihoods underflowed and the update fell back to the
    /// predicted model probabilities.
    pub fallback: bool,
}

impl ImmBank {
    pub fn new(model: &StateSpaceModel, transition: [[f64; 2]; 2]) -> Result<Self> {
        for row in &transition {
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) || (row[0] + row[1] - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("transition row {row:?} is not a probability vector")));
            }
        }
        Ok(Self {
            models: [
                model.stacked_kalman(model.process.sigma2_sq),
                model.stacked_kalman(model.process.sigma1_sq),
            ],
            transition,
        })
    }

    /// Transition rows `(1 − p, p)`, so the switching law is the i.i.d.
    /// mode prior.
    pub fn with_iid_switching(model: &StateSpaceModel) -> Result<Self> {
        let p = model.process.p;
        Self::new(model, [[1.0 - p, p], [1.0 - p, p]])
    }

    pub fn from_models(models: [KalmanModel; 2], transition: [[f64; 2]; 2]) -> Self {
        Self { models, transition }
    }

    pub fn initial_state(&self, probabilities: [f64; 2]) -> ImmState {
        let d = self.models[0].f.nrows();
        ImmState {
            filters: [KalmanState::zeros(d), KalmanState::zeros(d)],
            probabilities,
            fallback: false,
        }
    }

    /// Mixing, per-model update, probability update and fusion.
    pub fn step(&self, state: &ImmState, y: &DVector<f64>, z: &DVector<f64>) -> Result<(ImmState, DVector<f64>)> {
        let obs = DVector::from_iterator(y.len() + z.len(), y.iter().chain(z.iter()).copied());
        let mu = state.probabilities;
        let pi = &self.transition;
        let predicted = [0, 1].map(|j| pi[0][j] * mu[0] + pi[1][j] * mu[1]);
        let mut updates = Vec::with_capacity(2);
        for (j, model) in self.models.iter().enumerate() {
            let weights = if predicted[j] > 0.0 {
                [0, 1].map(|i| pi[i][j] * mu[i] / predicted[j])
            } else {
                mu
            };
            let x0 = &state.filters[0].x * weights[0] + &state.filters[1].x * weights[1];
            let mut p0 = DMatrix::zeros(x0.len(), x0.len());
            for (i, f) in state.filters.iter().enumerate() {
                let dx = &f.x - &x0;
                p0 += (&f.p + &dx * dx.transpose()) * weights[i];
            }
            let mixed = KalmanState {
                x: x0,
                p: crate::linalg::symmetrize(&p0),
            };
            check_psd(&mixed.p)?;
            updates.push(update(&mixed, &obs, model, 1.0)?);
        }
        let log_like: Vec<f64> = updates.iter().map(|u| log_likelihood(&u.innovation, &u.innovation_cov)).collect();
        let log_post: Vec<f64> = (0..2)
            .map(|j| if predicted[j] > 0.0 { log_like[j] + predicted[j].ln() } else { f64::NEG_INFINITY })
            .collect();
        let max = log_post[0].max(log_post[1]);
        let (probabilities, fallback) = if max.is_finite() {
            let e = [(log_post[0] - max).exp(), (log_post[1] - max).exp()];
            let total = e[0] + e[1];
            ([e[0] / total, e[1] / total], false)
        } else {
            (predicted, true)
        };
        let [u0, u1]: [_; 2] = updates.try_into().map_err(|_| Error::invalid("bank size"))?;
        let fused = &u0.state.x * probabilities[0] + &u1.state.x * probabilities[1];
        Ok((
            ImmState {
                filters: [u0.state, u1.state],
                probabilities,
                fallback,
            },
            fused,
        ))
    }
}

fn log_likelihood(innovation: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    match Cholesky::new(cov.clone()) {
        Some(chol) => {
            let v = chol
                .l_dirty()
                .solve_lower_triangular(innovation)
                .expect("positive diagonal");
            let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
            -0.5 * (v.norm_squared() + log_det + innovation.len() as f64 * (2.0 * std::f64::consts::PI).ln())
        }
        None => f64::NEG_INFINITY,
    }
}
