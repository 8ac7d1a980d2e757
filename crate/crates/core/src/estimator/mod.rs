//! Partially linear estimators of `X` from a pair of measurements `(Y, Z)`.
//!
//! The separable estimator has the form `A Y + b(Z)` with a fixed gain; the
//! conditional estimator lets the gain depend on a finite-valued `Z`. Both
//! reduce to a linear update of `E[X|Z]` driven by the innovation
//! `Y - E[Y|Z]`.

mod conditional;
mod toy;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, SampleSet};

pub use conditional::{conditional_plmmse_discrete, ConditionalCell, ConditionalLinearEstimator};
pub use toy::{
    toy_conditional_mean, toy_gamma, toy_mse_curves, toy_squared_errors, toy_xhat_variance, ScalarToyConfig,
    ToyMseCurves,
};

/// First and second moments of `(X, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointMomentModel {
    pub mean_x: DVector<f64>,
    pub mean_y: DVector<f64>,
    pub cov_xx: DMatrix<f64>,
    pub cov_xy: DMatrix<f64>,
    pub cov_yy: DMatrix<f64>,
}

impl JointMomentModel {
    pub fn new(
        mean_x: DVector<f64>,
        mean_y: DVector<f64>,
        cov_xx: DMatrix<f64>,
        cov_xy: DMatrix<f64>,
        cov_yy: DMatrix<f64>,
    ) -> Result<Self> {
        let (m, n) = (mean_x.len(), mean_y.len());
        if cov_xx.shape() != (m, m) || cov_xy.shape() != (m, n) || cov_yy.shape() != (n, n) {
            return Err(Error::invalid(format!(
                "moment shapes inconsistent with dim(X) = {m}, dim(Y) = {n}"
            )));
        }
        let mut block = DMatrix::zeros(m + n, m + n);
        block.view_mut((0, 0), (m, m)).copy_from(&cov_xx);
        block.view_mut((0, m), (m, n)).copy_from(&cov_xy);
        block.view_mut((m, 0), (n, m)).copy_from(&cov_xy.transpose());
        block.view_mut((m, m), (n, n)).copy_from(&cov_yy);
        let asym = (&cov_xx - cov_xx.transpose())
            .amax()
            .max((&cov_yy - cov_yy.transpose()).amax());
        let scale = block.amax().max(1.0);
        if asym > 1e-9 * scale {
            return Err(Error::invalid("auto-covariances must be symmetric"));
        }
        let lambda = linalg::min_eigenvalue(&block);
        if lambda < -1e-9 * scale {
            return Err(Error::invalid(format!(
                "joint covariance is not positive semidefinite (eigenvalue {lambda:.3e})"
            )));
        }
        Ok(Self {
            mean_x,
            mean_y,
            cov_xx,
            cov_xy,
            cov_yy,
        })
    }

    pub fn from_samples(x: &SampleSet, y: &SampleSet) -> Result<Self> {
        let m = linalg::empirical_moments(x, y)?;
        Self::new(m.mean_x, m.mean_y, m.cov_xx, m.cov_xy, m.cov_yy)
    }

    pub fn x_dim(&self) -> usize {
        self.mean_x.len()
    }

    pub fn y_dim(&self) -> usize {
        self.mean_y.len()
    }
}

/// The pair `(E[X|Z=z], E[Y|Z=z])`.
pub trait ConditionalRegressor: Send + Sync {
    fn x_dim(&self) -> usize;
    fn y_dim(&self) -> usize;
    fn evaluate(&self, z: &[f64]) -> (DVector<f64>, DVector<f64>);
}

/// Regressor backed by a closure.
pub struct FnRegressor<F> {
    x_dim: usize,
    y_dim: usize,
    f: F,
}

impl<F> FnRegressor<F>
where
    F: Fn(&[f64]) -> (DVector<f64>, DVector<f64>) + Send + Sync,
{
    pub fn new(x_dim: usize, y_dim: usize, f: F) -> Self {
        Self { x_dim, y_dim, f }
    }
}

impl<F> ConditionalRegressor for FnRegressor<F>
where
    F: Fn(&[f64]) -> (DVector<f64>, DVector<f64>) + Send + Sync,
{
    fn x_dim(&self) -> usize {
        self.x_dim
    }

    fn y_dim(&self) -> usize {
        self.y_dim
    }

    fn evaluate(&self, z: &[f64]) -> (DVector<f64>, DVector<f64>) {
        (self.f)(z)
    }
}

/// `E[X|Z]` closure for models where `E[Y|Z] = H E[X|Z]`.
pub type ConditionalMean = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;

struct ChannelRegressor {
    h: DMatrix<f64>,
    x_mean: ConditionalMean,
}

impl ConditionalRegressor for ChannelRegressor {
    fn x_dim(&self) -> usize {
        self.h.ncols()
    }

    fn y_dim(&self) -> usize {
        self.h.nrows()
    }

    fn evaluate(&self, z: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let x = (self.x_mean)(z);
        let y = &self.h * &x;
        (x, y)
    }
}

/// `X̂ = A Y + b(Z)` with `b(z) = E[X|z] - A E[Y|z]`.
#[derive(Clone)]
pub struct PartiallyLinearEstimator {
    gain: DMatrix<f64>,
    regressor: Arc<dyn ConditionalRegressor>,
    h_matrix: Option<DMatrix<f64>>,
}

impl std::fmt::Debug for PartiallyLinearEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PartiallyLinearEstimator")
            .field("gain", &self.gain)
            .field("h_matrix", &self.h_matrix)
            .finish_non_exhaustive()
    }
}

impl PartiallyLinearEstimator {
    pub fn new(gain: DMatrix<f64>, regressor: Arc<dyn ConditionalRegressor>) -> Result<Self> {
        if gain.shape() != (regressor.x_dim(), regressor.y_dim()) {
            return Err(Error::invalid(format!(
                "gain shape {:?} does not match regressor dims ({}, {})",
                gain.shape(),
                regressor.x_dim(),
                regressor.y_dim()
            )));
        }
        if gain.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("gain must be finite"));
        }
        Ok(Self {
            gain,
            regressor,
            h_matrix: None,
        })
    }

    /// Estimator for `Y = H X + U`, where `E[Y|Z] = H E[X|Z]`, so that
    /// `X̂ = A Y + (I − A H) E[X|Z]`.
    pub fn with_channel(gain: DMatrix<f64>, h: DMatrix<f64>, x_given_z: ConditionalMean) -> Result<Self> {
        let regressor = Arc::new(ChannelRegressor {
            h: h.clone(),
            x_mean: x_given_z,
        });
        let mut est = Self::new(gain, regressor)?;
        est.h_matrix = Some(h);
        Ok(est)
    }

    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    pub fn h_matrix(&self) -> Option<&DMatrix<f64>> {
        self.h_matrix.as_ref()
    }

    pub fn offset(&self, z: &[f64]) -> DVector<f64> {
        let (x, y) = self.regressor.evaluate(z);
        x - &self.gain * y
    }

    pub fn estimate(&self, y: &DVector<f64>, z: &[f64]) -> DVector<f64> {
        &self.gain * y + self.offset(z)
    }
}

/// Separable PLMMSE from `Γ_XY`, `Γ_YY`, the regressor and samples of `Z`.
///
/// `Γ_{X̂Ŷ}` and `Γ_{ŶŶ}` are estimated by pushing `z_samples` through the
/// regressor; the gain is `(Γ_XY − Γ_{X̂Ŷ})(Γ_YY − Γ_{ŶŶ})^†`.
pub fn separable_plmmse(
    model: &JointMomentModel,
    regressor: Arc<dyn ConditionalRegressor>,
    z_samples: &SampleSet,
) -> Result<PartiallyLinearEstimator> {
    if regressor.x_dim() != model.x_dim() || regressor.y_dim() != model.y_dim() {
        return Err(Error::invalid("regressor dimensions do not match the moment model"));
    }
    if z_samples.count() < 2 {
        return Err(Error::invalid("at least two samples of Z are required"));
    }
    let (cov_xhat_yhat, cov_yhat_yhat) = regressor_moments(regressor.as_ref(), z_samples)?;
    let gain = (&model.cov_xy - cov_xhat_yhat)
        * linalg::pseudo_inverse(&(&model.cov_yy - cov_yhat_yhat), 0.0)?;
    PartiallyLinearEstimator::new(gain, regressor)
}

/// `(Cov(E[X|Z], E[Y|Z]), Cov(E[Y|Z]))` over the given `Z` samples.
pub fn regressor_moments(
    regressor: &dyn ConditionalRegressor,
    z_samples: &SampleSet,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut xs = Vec::with_capacity(z_samples.count() * regressor.x_dim());
    let mut ys = Vec::with_capacity(z_samples.count() * regressor.y_dim());
    for z in z_samples.rows() {
        let (x, y) = regressor.evaluate(z);
        if x.len() != regressor.x_dim() || y.len() != regressor.y_dim() {
            return Err(Error::invalid("regressor output has the wrong dimension"));
        }
        xs.extend(x.iter());
        ys.extend(y.iter());
    }
    let xs = SampleSet::new(regressor.x_dim(), xs)?;
    let ys = SampleSet::new(regressor.y_dim(), ys)?;
    let m = linalg::empirical_moments(&xs, &ys)?;
    Ok((m.cov_xy, m.cov_yy))
}

/// Gain of the additive-noise PLMMSE estimator:
/// `(Γ_XX − Γ_X̂X̂) H^T (H (Γ_XX − Γ_X̂X̂) H^T + Γ_UU)^†`.
pub fn additive_noise_gain(
    h: &DMatrix<f64>,
    cov_xx: &DMatrix<f64>,
    cov_xhat: &DMatrix<f64>,
    cov_uu: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (n, m) = h.shape();
    if cov_xx.shape() != (m, m) || cov_xhat.shape() != (m, m) || cov_uu.shape() != (n, n) {
        return Err(Error::invalid(format!(
            "covariance shapes inconsistent with H of shape {n}x{m}"
        )));
    }
    let residual = cov_xx - cov_xhat;
    if (&residual - residual.transpose()).amax() > 1e-9 * residual.amax().max(1.0) {
        return Err(Error::invalid("cov_xx - cov_xhat must be symmetric"));
    }
    let rh = &residual * h.transpose();
    Ok(&rh * linalg::pseudo_inverse(&(h * &rh + cov_uu), 0.0)?)
}

/// `X̂ = A Y + (I − A H) E[X|Z]` for `Y = H X + U`, `Γ_UU = σ_U² I`.
pub fn additive_noise_plmmse(
    model: &crate::sparse::AdditiveNoiseModel,
    cov_xx: &DMatrix<f64>,
    cov_xhat: &DMatrix<f64>,
    x_given_z: ConditionalMean,
) -> Result<PartiallyLinearEstimator> {
    let h = model.h().clone();
    let cov_uu = DMatrix::identity(h.nrows(), h.nrows()) * model.sigma_u_sq();
    let gain = additive_noise_gain(&h, cov_xx, cov_xhat, &cov_uu)?;
    PartiallyLinearEstimator::with_channel(gain, h, x_given_z)
}

/// Affine estimator `gain * obs + offset` fitted by least squares, i.e. the
/// LMMSE estimator under the empirical distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEstimator {
    pub gain: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl LinearEstimator {
    pub fn from_moments(model: &JointMomentModel) -> Result<Self> {
        let gain = &model.cov_xy * linalg::pseudo_inverse(&model.cov_yy, 0.0)?;
        let offset = &model.mean_x - &gain * &model.mean_y;
        Ok(Self { gain, offset })
    }

    pub fn fit(x: &SampleSet, obs: &SampleSet) -> Result<Self> {
        Self::from_moments(&JointMomentModel::from_samples(x, obs)?)
    }

    pub fn estimate(&self, obs: &DVector<f64>) -> DVector<f64> {
        &self.gain * obs + &self.offset
    }
}

/// Row-wise concatenation `[a_i; b_i]` of two paired sample sets.
pub fn stack_samples(a: &SampleSet, b: &SampleSet) -> Result<SampleSet> {
    if a.count() != b.count() {
        return Err(Error::invalid("cannot stack sample sets of different counts"));
    }
    let mut values = Vec::with_capacity(a.count() * (a.dim() + b.dim()));
    for (ra, rb) in a.rows().zip(b.rows()) {
        values.extend_from_slice(ra);
        values.extend_from_slice(rb);
    }
    SampleSet::new(a.dim() + b.dim(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::AdditiveNoiseModel;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn normal(rng: &mut ChaCha8Rng) -> f64 {
        rng.sample(StandardNormal)
    }

    #[test]
    fn moment_model_rejects_indefinite_block() {
        let m = JointMomentModel::new(
            DVector::zeros(1),
            DVector::zeros(1),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::from_element(1, 1, 1.0),
        );
        assert!(m.is_err());
    }

    #[test]
    fn uninformative_z_gives_plain_lmmse() {
        let model = JointMomentModel::new(
            DVector::from_vec(vec![1.0, -1.0]),
            DVector::from_vec(vec![0.5]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
            DMatrix::from_row_slice(2, 1, &[0.8, -0.2]),
            DMatrix::from_element(1, 1, 1.5),
        )
        .unwrap();
        let (mx, my) = (model.mean_x.clone(), model.mean_y.clone());
        let reg = Arc::new(FnRegressor::new(2, 1, move |_z: &[f64]| (mx.clone(), my.clone())));
        let z = SampleSet::from_scalars((0..50).map(|k| k as f64).collect()).unwrap();
        let est = separable_plmmse(&model, reg, &z).unwrap();
        let lmmse = LinearEstimator::from_moments(&model).unwrap();
        assert_relative_eq!(est.gain(), &lmmse.gain, epsilon = 1e-12);
        let y = DVector::from_vec(vec![2.0]);
        assert_relative_eq!(est.estimate(&y, &[3.0]), lmmse.estimate(&y), epsilon = 1e-12);
    }

    #[test]
    fn independent_y_and_z_add_the_two_estimates() {
        // X = A + B, Y = A + U, Z = B + V with independent standard normals.
        // E[X|Z] = Z / 2 and Y is independent of Z.
        let model = JointMomentModel::new(
            DVector::zeros(1),
            DVector::zeros(1),
            DMatrix::from_element(1, 1, 2.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 2.0),
        )
        .unwrap();
        let reg = Arc::new(FnRegressor::new(1, 1, |z: &[f64]| {
            (DVector::from_element(1, z[0] / 2.0), DVector::zeros(1))
        }));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = SampleSet::from_scalars((0..2000).map(|_| 2f64.sqrt() * normal(&mut rng)).collect())
            .unwrap();
        let est = separable_plmmse(&model, reg, &z).unwrap();
        let (y, zv) = (DVector::from_element(1, 0.7), 1.3);
        let expected = 0.5 * 0.7 + zv / 2.0;
        assert_relative_eq!(est.estimate(&y, &[zv])[0], expected, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_triple_matches_conditional_mean() {
        // X ~ N(0,1), Y = X + U (var 1), Z = X + V (var 0.5). Gaussian
        // conditioning gives E[X|Y,Z] = (Y + 2 Z) / 4.
        let model = JointMomentModel::new(
            DVector::zeros(1),
            DVector::zeros(1),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 2.0),
        )
        .unwrap();
        let reg = Arc::new(FnRegressor::new(1, 1, |z: &[f64]| {
            let x = z[0] / 1.5;
            (DVector::from_element(1, x), DVector::from_element(1, x))
        }));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = SampleSet::from_scalars(
            (0..100_000).map(|_| 1.5f64.sqrt() * normal(&mut rng)).collect(),
        )
        .unwrap();
        let est = separable_plmmse(&model, reg, &z).unwrap();
        // gain = (1 - 1/1.5)/(2 - 1/1.5) = 0.25; MC tolerance on Cov(Ŷ)
        assert!((est.gain()[(0, 0)] - 0.25).abs() < 0.01);
        let pred = est.estimate(&DVector::from_element(1, 1.0), &[2.0])[0];
        assert!((pred - 1.25).abs() < 0.02);
    }

    #[test]
    fn additive_gain_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = DMatrix::from_fn(3, 4, |_, _| normal(&mut rng));
        let a = DMatrix::from_fn(4, 4, |_, _| normal(&mut rng));
        let cov_xx = &a * a.transpose();
        let cov_uu = DMatrix::identity(3, 3) * 0.4;
        let wiener = &cov_xx
            * h.transpose()
            * linalg::pseudo_inverse(&(&h * &cov_xx * h.transpose() + &cov_uu), 0.0).unwrap();
        let g0 = additive_noise_gain(&h, &cov_xx, &DMatrix::zeros(4, 4), &cov_uu).unwrap();
        assert_relative_eq!(g0, wiener, epsilon = 1e-10);
        let g1 = additive_noise_gain(&h, &cov_xx, &cov_xx, &cov_uu).unwrap();
        assert!(g1.amax() < 1e-12);
    }

    #[test]
    fn scalar_additive_gain_matches_toy_weight() {
        let (su2, sxhat) = (1.3, 0.42);
        let h = DMatrix::from_element(1, 1, 1.0);
        let g = additive_noise_gain(
            &h,
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, sxhat),
            &DMatrix::from_element(1, 1, su2),
        )
        .unwrap();
        assert_relative_eq!(g[(0, 0)], (1.0 - sxhat) / (1.0 + su2 - sxhat), epsilon = 1e-14);
    }

    #[test]
    fn additive_estimator_with_perfect_z_returns_conditional_mean() {
        let model = AdditiveNoiseModel::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            1.0,
            0.5,
            0.5,
        )
        .unwrap();
        let cov = DMatrix::identity(2, 2);
        let xz: ConditionalMean = Arc::new(|z: &[f64]| DVector::from_column_slice(z) * 0.5);
        let est = additive_noise_plmmse(&model, &cov, &cov, xz).unwrap();
        let out = est.estimate(&DVector::from_vec(vec![5.0, -5.0]), &[1.0, 2.0]);
        assert_relative_eq!(out, DVector::from_vec(vec![0.5, 1.0]), epsilon = 1e-12);
        assert!(est.h_matrix().is_some());
    }

    #[test]
    fn separable_rejects_dimension_mismatch() {
        let model = JointMomentModel::new(
            DVector::zeros(1),
            DVector::zeros(1),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.0),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let reg = Arc::new(FnRegressor::new(2, 1, |_z: &[f64]| {
            (DVector::zeros(2), DVector::zeros(1))
        }));
        let z = SampleSet::from_scalars(vec![0.0, 1.0]).unwrap();
        assert!(separable_plmmse(&model, reg, &z).is_err());
    }

    /// X = B, Y = X + C (C depends on the sign of Z), Z = X + V. Used for the
    /// orthogonality, innovation identities and special cases.
    fn nonlinear_triple(rng: &mut ChaCha8Rng, n: usize) -> (SampleSet, SampleSet, SampleSet) {
        let (mut xs, mut ys, mut zs) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..n {
            let b = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let z = b + normal(rng);
            let y1 = b + 0.6 * normal(rng) + 0.3 * z * z;
            let y2 = -0.5 * b + normal(rng);
            xs.extend([b, b * b * 0.5 + 0.2 * normal(rng)]);
            ys.extend([y1, y2]);
            zs.push(z);
        }
        (
            SampleSet::new(2, xs).unwrap(),
            SampleSet::new(2, ys).unwrap(),
            SampleSet::from_scalars(zs).unwrap(),
        )
    }

    fn triple_regressor() -> Arc<dyn ConditionalRegressor> {
        Arc::new(FnRegressor::new(2, 2, |z: &[f64]| {
            let t = z[0].tanh();
            (
                DVector::from_vec(vec![t, 0.5]),
                DVector::from_vec(vec![t + 0.3 * z[0] * z[0], -0.5 * t]),
            )
        }))
    }

    #[test]
    fn innovation_covariance_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (x, y, z) = nonlinear_triple(&mut rng, 100_000);
        let reg = triple_regressor();
        let mut innov = Vec::new();
        let mut yhat = Vec::new();
        let mut xhat = Vec::new();
        for (yr, zr) in y.rows().zip(z.rows()) {
            let (xh, yh) = reg.evaluate(zr);
            innov.extend([yr[0] - yh[0], yr[1] - yh[1]]);
            yhat.extend(yh.iter());
            xhat.extend(xh.iter());
        }
        let innov = SampleSet::new(2, innov).unwrap();
        let yhat = SampleSet::new(2, yhat).unwrap();
        let xhat = SampleSet::new(2, xhat).unwrap();
        let direct_x = linalg::cross_covariance(&x, &innov).unwrap();
        let direct_y = linalg::cross_covariance(&innov, &innov).unwrap();
        let m = linalg::empirical_moments(&x, &y).unwrap();
        let via_x = &m.cov_xy - linalg::cross_covariance(&xhat, &yhat).unwrap();
        let via_y = &m.cov_yy - linalg::cross_covariance(&yhat, &yhat).unwrap();
        // Monte Carlo tolerance for 1e5 samples of O(1) quantities
        assert!((direct_x - via_x).amax() < 0.03);
        assert!((direct_y - via_y).amax() < 0.03);
    }

    #[test]
    fn gain_survives_when_x_is_independent_of_z() {
        // Y = X + Z with X independent of Z: the optimal estimate is Y - Z.
        let model = JointMomentModel::new(
            DVector::zeros(1),
            DVector::zeros(1),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 2.0),
        )
        .unwrap();
        let reg = Arc::new(FnRegressor::new(1, 1, |z: &[f64]| {
            (DVector::zeros(1), DVector::from_element(1, z[0]))
        }));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = SampleSet::from_scalars((0..50_000).map(|_| normal(&mut rng)).collect()).unwrap();
        let est = separable_plmmse(&model, reg, &z).unwrap();
        assert!(est.gain().norm() > 0.5);
        let pred = est.estimate(&DVector::from_element(1, 3.0), &[1.0])[0];
        assert!((pred - 2.0).abs() < 0.05);
    }

    #[test]
    fn uncorrelated_y_independent_of_z_returns_conditional_mean() {
        let model = JointMomentModel::new(
            DVector::zeros(1),
            DVector::zeros(1),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.0),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let reg = Arc::new(FnRegressor::new(1, 1, |z: &[f64]| {
            (DVector::from_element(1, z[0].tanh()), DVector::zeros(1))
        }));
        let z = SampleSet::from_scalars((0..100).map(|k| k as f64 * 0.1 - 5.0).collect()).unwrap();
        let est = separable_plmmse(&model, reg, &z).unwrap();
        let pred = est.estimate(&DVector::from_element(1, 10.0), &[0.3])[0];
        assert_relative_eq!(pred, 0.3f64.tanh(), epsilon = 1e-12);
    }
}
