//! Worst-case distribution for partially linear estimation.
//!
//! Given `Γ_XX`, `Γ_XY`, a regression function `g(z) = E[X|Z=z]` and the law
//! of `(Y, Z)`, the construction
//!
//! ```text
//! X = Γ_XỸ Γ_ỸỸ^† (Y − h(Z)) + g(Z) + U,   h(z) = E[Y|Z=z]
//! ```
//!
//! with `U` independent of `(Y, Z)` and
//! `Γ_UU = Γ_XX − Cov(g) − Γ_XỸ Γ_ỸỸ^† Γ_ỸX` matches all the constraints, and
//! under it `E[X|Y,Z]` is partially linear. No estimator can then beat the
//! PLMMSE estimator.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimator::{separable_plmmse, ConditionalMean, FnRegressor, JointMomentModel, LinearEstimator, PartiallyLinearEstimator};
use crate::harness::{par_runs, Estimate, SeedTree};
use crate::linalg::{self, SampleSet};

/// Smallest number of draws accepted for the moment estimates.
pub const MIN_CONSTRUCTION_DRAWS: usize = 10_000;
/// Eigenvalues of `Γ_UU` in `[−PSD_TOLERANCE, 0)` are clipped to zero.
pub const PSD_TOLERANCE: f64 = 1e-6;

const BUILD_LABEL: u64 = 0x3131;
const SAMPLE_LABEL: u64 = 0x3132;
const BLOCK: usize = 8192;

/// Source of `(Y, Z)` pairs with a known regression `E[Y|Z]`.
pub trait YzSampler: Send + Sync {
    fn y_dim(&self) -> usize;
    fn z_dim(&self) -> usize;
    fn sample(&self, rng: &mut dyn RngCore) -> (DVector<f64>, DVector<f64>);
    fn conditional_mean_y(&self, z: &[f64]) -> DVector<f64>;
}

/// `Z ~ N(0, I)`, `Y = C tanh(D Z) + K Z + L N` with `N ~ N(0, I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TanhYzSampler {
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub l: DMatrix<f64>,
}

impl TanhYzSampler {
    pub fn new(c: DMatrix<f64>, d: DMatrix<f64>, k: DMatrix<f64>, l: DMatrix<f64>) -> Result<Self> {
        let (ny, nz) = k.shape();
        if c.nrows() != ny || d.shape() != (c.ncols(), nz) || l.nrows() != ny {
            return Err(Error::invalid("sampler matrices have inconsistent shapes"));
        }
        Ok(Self { c, d, k, l })
    }

    /// `Cov(Y − E[Y|Z]) = L Lᵀ`.
    pub fn residual_covariance(&self) -> DMatrix<f64> {
        &self.l * self.l.transpose()
    }
}

impl YzSampler for TanhYzSampler {
    fn y_dim(&self) -> usize {
        self.k.nrows()
    }

    fn z_dim(&self) -> usize {
        self.k.ncols()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> (DVector<f64>, DVector<f64>) {
        let z = DVector::from_fn(self.z_dim(), |_, _| rng.sample(StandardNormal));
        let n = DVector::from_fn(self.l.ncols(), |_, _| rng.sample(StandardNormal));
        let y = self.conditional_mean_y(z.as_slice()) + &self.l * n;
        (y, z)
    }

    fn conditional_mean_y(&self, z: &[f64]) -> DVector<f64> {
        let z = DVector::from_column_slice(z);
        &self.c * (&self.d * &z).map(f64::tanh) + &self.k * z
    }
}

/// Second-order constraints and the regression `E[X|Z] = g(Z)`.
#[derive(Clone)]
pub struct MinimaxTarget {
    pub cov_xx: DMatrix<f64>,
    pub cov_xy: DMatrix<f64>,
    pub g: ConditionalMean,
}

impl std::fmt::Debug for MinimaxTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MinimaxTarget")
            .field("cov_xx", &self.cov_xx)
            .field("cov_xy", &self.cov_xy)
            .finish_non_exhaustive()
    }
}

/// The worst-case joint law `F*`.
#[derive(Clone)]
pub struct MinimaxConstruction {
    pub sampler: Arc<dyn YzSampler>,
    pub target: MinimaxTarget,
    /// `Γ_XỸ Γ_ỸỸ^†`.
    pub gain: DMatrix<f64>,
    pub cov_uu: DMatrix<f64>,
    /// Smallest eigenvalue of `Γ_UU` before clipping.
    pub min_eigenvalue: f64,
    /// PLMMSE estimator assembled from `Γ_XY`, `Γ_YY`, `g` and `h`.
    pub plmmse: PartiallyLinearEstimator,
    u_sqrt: DMatrix<f64>,
}

impl std::fmt::Debug for MinimaxConstruction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MinimaxConstruction")
            .field("gain", &self.gain)
            .field("cov_uu", &self.cov_uu)
            .field("min_eigenvalue", &self.min_eigenvalue)
            .finish_non_exhaustive()
    }
}

impl MinimaxConstruction {
    pub fn x_dim(&self) -> usize {
        self.target.cov_xx.nrows()
    }

    /// `Γ_XỸ Γ_ỸỸ^† (y − h(z)) + g(z)`, the MMSE estimate under `F*`.
    pub fn conditional_mean(&self, y: &DVector<f64>, z: &[f64]) -> DVector<f64> {
        &self.gain * (y - self.sampler.conditional_mean_y(z)) + (self.target.g)(z)
    }
}

fn draw_pairs(sampler: &dyn YzSampler, count: usize, seeds: &SeedTree, label: u64) -> Vec<(DVector<f64>, DVector<f64>)> {
    let blocks = count.div_ceil(BLOCK);
    par_runs(blocks, |b| {
        let mut rng = seeds.stream(label, b as u64);
        let n = BLOCK.min(count - b * BLOCK);
        (0..n).map(|_| sampler.sample(&mut rng)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Estimates the moments of `(Y, Z, g(Z), h(Z))` from `mc_count` draws and
/// assembles `F*`.
pub fn build_worst_case(
    target: MinimaxTarget,
    sampler: Arc<dyn YzSampler>,
    mc_count: usize,
    seeds: &SeedTree,
) -> Result<MinimaxConstruction> {
    let (m, ny, nz) = (target.cov_xx.nrows(), sampler.y_dim(), sampler.z_dim());
    if target.cov_xx.shape() != (m, m) || target.cov_xy.shape() != (m, ny) || m == 0 {
        return Err(Error::invalid(format!(
            "target moments do not match dim(X) = {m}, dim(Y) = {ny}"
        )));
    }
    if mc_count < MIN_CONSTRUCTION_DRAWS {
        return Err(Error::InsufficientData(format!(
            "construction needs at least {MIN_CONSTRUCTION_DRAWS} draws, got {mc_count}"
        )));
    }
    let pairs = draw_pairs(sampler.as_ref(), mc_count, seeds, BUILD_LABEL);
    let (mut ys, mut zs, mut gs, mut hs) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (y, z) in &pairs {
        let g = (target.g)(z.as_slice());
        if g.len() != m {
            return Err(Error::invalid(format!("g returns {} values, expected {m}", g.len())));
        }
        ys.extend(y.iter());
        zs.extend(z.iter());
        gs.extend(g.iter());
        hs.extend(sampler.conditional_mean_y(z.as_slice()).iter());
    }
    let ys = SampleSet::new(ny, ys)?;
    let zs = SampleSet::new(nz, zs)?;
    let gs = SampleSet::new(m, gs)?;
    let hs = SampleSet::new(ny, hs)?;

    let y_moments = linalg::empirical_moments(&ys, &ys)?;
    let gh = linalg::empirical_moments(&gs, &hs)?;
    let cov_yy = y_moments.cov_yy;
    let cov_x_ytilde = &target.cov_xy - &gh.cov_xy;
    let cov_ytilde = linalg::symmetrize(&(&cov_yy - &gh.cov_yy));
    let gain = &cov_x_ytilde * linalg::pseudo_inverse(&cov_ytilde, 0.0)?;
    let raw = linalg::symmetrize(&(&target.cov_xx - &gh.cov_xx - &gain * cov_x_ytilde.transpose()));
    let eig = raw.clone().symmetric_eigen();
    let min_eigenvalue = eig.eigenvalues.min();
    if min_eigenvalue < -PSD_TOLERANCE {
        return Err(Error::InfeasibleConstraints { min_eigenvalue });
    }
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let cov_uu = linalg::symmetrize(&(&eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()));
    let u_sqrt = linalg::psd_sqrt(&cov_uu);

    let model = JointMomentModel::new(gh.mean_x.clone(), y_moments.mean_x, target.cov_xx.clone(), target.cov_xy.clone(), cov_yy)
        .map_err(|e| e.context("target moments combined with the law of Y"))?;
    let (g, h) = (target.g.clone(), sampler.clone());
    let regressor = Arc::new(FnRegressor::new(m, ny, move |z: &[f64]| (g(z), h.conditional_mean_y(z))));
    let plmmse = separable_plmmse(&model, regressor, &zs)?;
    Ok(MinimaxConstruction {
        sampler,
        target,
        gain,
        cov_uu,
        min_eigenvalue,
        plmmse,
        u_sqrt,
    })
}

/// Paired draws `(X, Y, Z)` from `F*`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseSamples {
    pub x: SampleSet,
    pub y: SampleSet,
    pub z: SampleSet,
}

/// Draws `count` triples with Gaussian `U ~ N(0, Γ_UU)`.
pub fn sample_worst_case(c: &MinimaxConstruction, count: usize, seeds: &SeedTree) -> Result<WorstCaseSamples> {
    if count == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let (m, ny, nz) = (c.x_dim(), c.sampler.y_dim(), c.sampler.z_dim());
    let blocks = count.div_ceil(BLOCK);
    let parts = par_runs(blocks, |b| {
        let mut rng = seeds.stream(SAMPLE_LABEL, b as u64);
        let n = BLOCK.min(count - b * BLOCK);
        let mut out: (Vec<f64>, Vec<f64>, Vec<f64>) = (Vec::with_capacity(n * m), Vec::with_capacity(n * ny), Vec::with_capacity(n * nz));
        for _ in 0..n {
            let (y, z) = c.sampler.sample(&mut rng);
            let noise = DVector::from_fn(m, |_, _| rng.sample(StandardNormal));
            let x = c.conditional_mean(&y, z.as_slice()) + &c.u_sqrt * noise;
            out.0.extend(x.iter());
            out.1.extend(y.iter());
            out.2.extend(z.iter());
        }
        out
    });
    let (mut xs, mut ys, mut zs) = (Vec::new(), Vec::new(), Vec::new());
    for (x, y, z) in parts {
        xs.extend(x);
        ys.extend(y);
        zs.extend(z);
    }
    Ok(WorstCaseSamples {
        x: SampleSet::new(m, xs)?,
        y: SampleSet::new(ny, ys)?,
        z: SampleSet::new(nz, zs)?,
    })
}

/// An estimator of `X` from `(y, z)`.
pub type Predictor = Arc<dyn Fn(&[f64], &[f64]) -> DVector<f64> + Send + Sync>;

#[derive(Clone)]
pub struct Challenger {
    pub name: String,
    pub predict: Predictor,
}

impl std::fmt::Debug for Challenger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Challenger").field("name", &self.name).finish_non_exhaustive()
    }
}

impl Challenger {
    pub fn new(name: impl Into<String>, predict: Predictor) -> Self {
        Self {
            name: name.into(),
            predict,
        }
    }

    /// Constant prediction `μ_X`.
    pub fn mean(mu: DVector<f64>) -> Self {
        Self::new("mean", Arc::new(move |_, _| mu.clone()))
    }

    /// LMMSE estimator from the stacked observation `[y; z]` fitted on
    /// `train`.
    pub fn joint_linear(train: &WorstCaseSamples) -> Result<Self> {
        let obs = crate::estimator::stack_samples(&train.y, &train.z)?;
        let fit = LinearEstimator::fit(&train.x, &obs)?;
        Ok(Self::new(
            "joint_lmmse",
            Arc::new(move |y, z| {
                let obs = DVector::from_iterator(y.len() + z.len(), y.iter().chain(z).copied());
                fit.estimate(&obs)
            }),
        ))
    }

    /// Least-squares regression of `X` on `[y; z; tanh(W [y; z] + c)]` with a
    /// random feature map of `features` outputs, fitted on `train`.
    pub fn random_features<R: Rng + ?Sized>(name: impl Into<String>, train: &WorstCaseSamples, features: usize, rng: &mut R) -> Result<Self> {
        let d = train.y.dim() + train.z.dim();
        let w = DMatrix::from_fn(features, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let c = DVector::from_fn(features, |_, _| rng.sample::<f64, _>(StandardNormal));
        let map = move |y: &[f64], z: &[f64]| {
            let obs = DVector::from_iterator(d, y.iter().chain(z).copied());
            let phi = (&w * &obs + &c).map(f64::tanh);
            DVector::from_iterator(d + features, obs.iter().chain(phi.iter()).copied())
        };
        let mut rows = Vec::with_capacity(train.x.count() * (d + features));
        for i in 0..train.x.count() {
            rows.extend(map(train.y.row(i), train.z.row(i)).iter());
        }
        let fit = LinearEstimator::fit(&train.x, &SampleSet::new(d + features, rows)?)?;
        Ok(Self::new(name, Arc::new(move |y, z| fit.estimate(&map(y, z)))))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChallengerResult {
    pub name: String,
    pub mse: Estimate,
    /// Paired difference `MSE(challenger) − MSE(PLMMSE)`.
    pub excess: Estimate,
}

impl ChallengerResult {
    /// The challenger does not beat PLMMSE by more than `k` standard errors.
    pub fn plmmse_not_worse(&self, k: f64) -> bool {
        self.excess.mean >= -k * self.excess.se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxReport {
    pub plmmse: Estimate,
    pub challengers: Vec<ChallengerResult>,
    /// Largest pointwise gap between the PLMMSE estimator and `E[X|Y,Z]`.
    pub max_formula_deviation: f64,
    /// Per-sample squared errors `[PLMMSE, challenger₀, …]`.
    pub squared_errors: Vec<Vec<f64>>,
}

/// Squared errors of PLMMSE and every challenger on fresh draws from `F*`.
pub fn minimax_check(c: &MinimaxConstruction, challengers: &[Challenger], mc_count: usize, seeds: &SeedTree) -> Result<MinimaxReport> {
    let s = sample_worst_case(c, mc_count, seeds)?;
    let n = s.x.count();
    let mut pl = Vec::with_capacity(n);
    let mut errs = vec![Vec::with_capacity(n); challengers.len()];
    let mut max_dev: f64 = 0.0;
    for i in 0..n {
        let (x, y, z) = (s.x.vector(i), s.y.vector(i), s.z.row(i));
        let est = c.plmmse.estimate(&y, z);
        let reference = c.conditional_mean(&y, z);
        max_dev = max_dev.max((&est - &reference).amax() / reference.amax().max(1.0));
        pl.push((est - &x).norm_squared());
        for (k, ch) in challengers.iter().enumerate() {
            let guess = (ch.predict)(y.as_slice(), z);
            if guess.len() != x.len() {
                return Err(Error::invalid(format!("challenger {} returns the wrong dimension", ch.name)));
            }
            errs[k].push((guess - &x).norm_squared());
        }
    }
    let results = challengers
        .iter()
        .zip(&errs)
        .map(|(ch, e)| {
            let diff: Vec<f64> = e.iter().zip(&pl).map(|(a, b)| a - b).collect();
            ChallengerResult {
                name: ch.name.clone(),
                mse: Estimate::from_samples(e),
                excess: Estimate::from_samples(&diff),
            }
        })
        .collect();
    let squared_errors = (0..n)
        .map(|i| std::iter::once(pl[i]).chain(errs.iter().map(|e| e[i])).collect())
        .collect();
    Ok(MinimaxReport {
        plmmse: Estimate::from_samples(&pl),
        challengers: results,
        max_formula_deviation: max_dev,
        squared_errors,
    })
}

/// How closely samples from `F*` reproduce the constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintReport {
    /// `‖Ĉov(X) − Γ_XX‖_F / ‖Γ_XX‖_F`.
    pub cov_xx_error: f64,
    /// `‖Ĉov(X, Y) − Γ_XY‖_F / ‖Γ_XY‖_F`.
    pub cov_xy_error: f64,
    /// Means of `(X − g(Z))_i` and of `(X − g(Z))_i z_j`, all zero when
    /// `E[X|Z] = g(Z)`.
    pub residual_moments: Vec<Estimate>,
}

impl ConstraintReport {
    pub fn residuals_within(&self, k: f64) -> bool {
        self.residual_moments.iter().all(|e| e.mean.abs() <= k * e.se)
    }
}

pub fn constraint_report(c: &MinimaxConstruction, samples: &WorstCaseSamples) -> Result<ConstraintReport> {
    let mom = linalg::empirical_moments(&samples.x, &samples.y)?;
    let rel = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).norm() / b.norm().max(f64::MIN_POSITIVE);
    let (m, nz, n) = (c.x_dim(), samples.z.dim(), samples.x.count());
    let mut cols = vec![Vec::with_capacity(n); m * (nz + 1)];
    for i in 0..n {
        let z = samples.z.row(i);
        let r = samples.x.vector(i) - (c.target.g)(z);
        for a in 0..m {
            cols[a * (nz + 1)].push(r[a]);
            for (j, zj) in z.iter().enumerate() {
                cols[a * (nz + 1) + 1 + j].push(r[a] * zj);
            }
        }
    }
    Ok(ConstraintReport {
        cov_xx_error: rel(&mom.cov_xx, &c.target.cov_xx),
        cov_xy_error: if c.target.cov_xy.norm() > 0.0 { rel(&mom.cov_xy, &c.target.cov_xy) } else { mom.cov_xy.norm() },
        residual_moments: cols.iter().map(|v| Estimate::from_samples(v)).collect(),
    })
}

/// A feasible scenario: `g(z) = P sin(z)`, the law of `(Y, Z)` from a
/// [`TanhYzSampler`], and `Γ_XY`, `Γ_XX` chosen so that `Γ_UU ≈ slack · I`.
pub fn demo_scenario(x_dim: usize, y_dim: usize, z_dim: usize, slack: f64, seeds: &SeedTree) -> Result<(MinimaxTarget, Arc<dyn YzSampler>)> {
    if x_dim == 0 || y_dim == 0 || z_dim == 0 || !(slack > 0.0) {
        return Err(Error::invalid("dimensions and slack must be positive"));
    }
    let mut rng = seeds.stream(0x3130, 0);
    let mut gauss = |r: usize, c: usize, s: f64| DMatrix::from_fn(r, c, |_, _| s * rng.sample::<f64, _>(StandardNormal));
    let sampler = TanhYzSampler::new(
        gauss(y_dim, z_dim, 1.0),
        gauss(z_dim, z_dim, 1.5),
        gauss(y_dim, z_dim, 0.5),
        gauss(y_dim, y_dim, 0.7),
    )?;
    let p = gauss(x_dim, z_dim, 1.0);
    let r = gauss(x_dim, y_dim, 0.5);
    let p_g = p.clone();
    let g: ConditionalMean = Arc::new(move |z: &[f64]| &p_g * DVector::from_column_slice(z).map(f64::sin));

    // Cov(g) and Cov(g, h) from a long independent run.
    let draws = draw_pairs(&sampler, 200_000, &seeds.child(1), BUILD_LABEL);
    let (mut gs, mut hs) = (Vec::new(), Vec::new());
    for (_, z) in &draws {
        gs.extend(g(z.as_slice()).iter());
        hs.extend(sampler.conditional_mean_y(z.as_slice()).iter());
    }
    let mom = linalg::empirical_moments(&SampleSet::new(x_dim, gs)?, &SampleSet::new(y_dim, hs)?)?;
    let resid = sampler.residual_covariance();
    let cov_xy = &mom.cov_xy + &r * &resid;
    let cov_xx = linalg::symmetrize(&(&mom.cov_xx + &r * &resid * r.transpose() + DMatrix::identity(x_dim, x_dim) * slack));
    Ok((MinimaxTarget { cov_xx, cov_xy, g }, Arc::new(sampler)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(seed: u64) -> MinimaxConstruction {
        let seeds = SeedTree::new(seed);
        let (target, sampler) = demo_scenario(2, 2, 2, 0.5, &seeds).unwrap();
        build_worst_case(target, sampler, 50_000, &seeds.child(2)).unwrap()
    }

    #[test]
    fn trivial_target_gives_identity_noise() {
        let sampler = Arc::new(
            TanhYzSampler::new(DMatrix::zeros(1, 1), DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 1.0))
                .unwrap(),
        );
        let target = MinimaxTarget {
            cov_xx: DMatrix::identity(2, 2),
            cov_xy: DMatrix::zeros(2, 1),
            g: Arc::new(|_: &[f64]| DVector::zeros(2)),
        };
        let c = build_worst_case(target, sampler, 10_000, &SeedTree::new(1)).unwrap();
        assert!((&c.cov_uu - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
        assert!(c.gain.amax() < 1e-12);
    }

    #[test]
    fn infeasible_target_is_reported() {
        let sampler = Arc::new(
            TanhYzSampler::new(DMatrix::zeros(1, 1), DMatrix::zeros(1, 1), DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, 1.0)).unwrap(),
        );
        let target = MinimaxTarget {
            cov_xx: DMatrix::from_element(1, 1, 1.0),
            cov_xy: DMatrix::from_element(1, 1, 2.0),
            g: Arc::new(|_: &[f64]| DVector::zeros(1)),
        };
        assert!(matches!(
            build_worst_case(target, sampler, 10_000, &SeedTree::new(1)),
            Err(Error::InfeasibleConstraints { .. })
        ));
    }

    #[test]
    fn rejects_small_budgets() {
        let seeds = SeedTree::new(3);
        let (target, sampler) = demo_scenario(1, 1, 1, 0.5, &seeds).unwrap();
        assert!(matches!(
            build_worst_case(target.clone(), sampler.clone(), 100, &seeds),
            Err(Error::InsufficientData(_))
        ));
        let c = build_worst_case(target, sampler, 10_000, &seeds).unwrap();
        assert!(sample_worst_case(&c, 0, &seeds).is_err());
        let one = sample_worst_case(&c, 1, &seeds).unwrap();
        assert_eq!(one.x.count(), 1);
        assert!(one.x.row(0).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn samples_reproduce_constraints() {
        let c = scenario(4);
        assert!(c.min_eigenvalue > 0.3, "{}", c.min_eigenvalue);
        let seeds = SeedTree::new(40);
        let s = sample_worst_case(&c, 100_000, &seeds).unwrap();
        assert_eq!(s, sample_worst_case(&c, 100_000, &seeds).unwrap());
        let report = constraint_report(&c, &s).unwrap();
        assert!(report.cov_xx_error < 0.03, "{report:?}");
        assert!(report.cov_xy_error < 0.03, "{report:?}");
        assert!(report.residuals_within(3.0), "{report:?}");
    }

    #[test]
    fn scalar_tanh_regression_holds() {
        let sampler = Arc::new(
            TanhYzSampler::new(DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 1.0), DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, 0.5))
                .unwrap(),
        );
        let target = MinimaxTarget {
            cov_xx: DMatrix::from_element(1, 1, 2.0),
            cov_xy: DMatrix::from_element(1, 1, 0.6),
            g: Arc::new(|z: &[f64]| DVector::from_element(1, z[0].tanh())),
        };
        let c = build_worst_case(target, sampler, 20_000, &SeedTree::new(5)).unwrap();
        let s = sample_worst_case(&c, 100_000, &SeedTree::new(6)).unwrap();
        assert!(constraint_report(&c, &s).unwrap().residuals_within(3.0));
    }

    #[test]
    fn plmmse_is_the_conditional_mean() {
        let c = scenario(7);
        let seeds = SeedTree::new(70);
        let train = sample_worst_case(&c, 20_000, &seeds.child(1)).unwrap();
        let mut rng = seeds.stream(9, 0);
        let mut challengers = vec![
            Challenger::new("plmmse", {
                let pl = c.plmmse.clone();
                Arc::new(move |y, z| pl.estimate(&DVector::from_column_slice(y), z))
            }),
            Challenger::mean(train.x.mean()),
            Challenger::joint_linear(&train).unwrap(),
        ];
        for k in 0..3 {
            challengers.push(Challenger::random_features(format!("rf{k}"), &train, 16, &mut rng).unwrap());
        }
        let report = minimax_check(&c, &challengers, 30_000, &seeds.child(2)).unwrap();
        assert!(report.max_formula_deviation < 1e-8, "{}", report.max_formula_deviation);
        assert_eq!(report.challengers[0].excess.mean, 0.0);
        for r in &report.challengers {
            assert!(r.plmmse_not_worse(3.0), "{r:?}");
        }
        let mean = &report.challengers[1];
        let total = c.target.cov_xx.trace();
        assert!((mean.mse.mean - total).abs() < 3.0 * mean.mse.se + 0.03 * total, "{mean:?}");
    }
}
