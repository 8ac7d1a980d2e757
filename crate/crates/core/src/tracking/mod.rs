//! Linear state-space tracking with a spike-and-slab driving noise, observed
//! through a linear channel `Y` and a channel `Z` that measures the driving
//! noise directly.
//!
//! The state evolves as `X(k+1) = F X(k) + B W(k)` from `X(0) = 0`, with
//! `Y(k) = H X(k) + U(k)` and `Z(k) = G X(k) + V(k)`.

mod experiment;
mod imm;
mod kalman;
mod recursive;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::sparse::ScalarSpikeSlab;

pub use experiment::{
    kinematic_errors, tracking_experiment, FilterKind, KinematicErrors, TrackingConfig, TrackingPoint,
    TrackingResult,
};
pub use imm::{ImmBank, ImmState};
pub use kalman::{kalman_step, KalmanModel, KalmanState};
pub use recursive::{batch_plmmse, plmmse_cycle, BatchPlmmse, RecursiveFilterState, RecursivePlmmse};

/// Distribution of the position noise `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UNoise {
    Gaussian,
    /// Zero-mean two-component mixture with the same variance `σ_U²`: with
    /// probability `outlier_prob` the variance is `variance_ratio` times the
    /// nominal one.
    Mixture { outlier_prob: f64, variance_ratio: f64 },
}

impl UNoise {
    pub const DEFAULT_MIXTURE: UNoise = UNoise::Mixture {
        outlier_prob: 0.1,
        variance_ratio: 25.0,
    };

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, variance: f64) -> f64 {
        let n: f64 = rng.sample(StandardNormal);
        match *self {
            UNoise::Gaussian => variance.sqrt() * n,
            UNoise::Mixture {
                outlier_prob,
                variance_ratio,
            } => {
                let nominal = variance / (1.0 - outlier_prob + outlier_prob * variance_ratio);
                let outlier = rng.random::<f64>() < outlier_prob;
                let v = if outlier { nominal * variance_ratio } else { nominal };
                v.sqrt() * n
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub f: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub g: DMatrix<f64>,
    /// Law of each entry of `W(k)`.
    pub process: ScalarSpikeSlab,
    pub sigma_u_sq: f64,
    pub sigma_v_sq: f64,
    pub u_noise: UNoise,
}

impl StateSpaceModel {
    pub fn new(
        f: DMatrix<f64>,
        b: DMatrix<f64>,
        h: DMatrix<f64>,
        g: DMatrix<f64>,
        process: ScalarSpikeSlab,
        sigma_u_sq: f64,
        sigma_v_sq: f64,
    ) -> Result<Self> {
        let d = f.nrows();
        if d == 0 || f.ncols() != d || b.nrows() != d || h.ncols() != d || g.ncols() != d {
            return Err(Error::invalid(format!(
                "inconsistent shapes: F {:?}, B {:?}, H {:?}, G {:?}",
                f.shape(),
                b.shape(),
                h.shape(),
                g.shape()
            )));
        }
        for (name, v) in [("sigma_u_sq", sigma_u_sq), ("sigma_v_sq", sigma_v_sq)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self {
            f,
            b,
            h,
            g,
            process,
            sigma_u_sq,
            sigma_v_sq,
            u_noise: UNoise::Gaussian,
        })
    }

    /// One-dimensional nearly-constant-velocity model on the state
    /// `(P(k), P(k−1), P(k−2))`, observing position and acceleration.
    pub fn white_acceleration(process: ScalarSpikeSlab, sigma_u_sq: f64, sigma_v_sq: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
            DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 1.0]),
            process,
            sigma_u_sq,
            sigma_v_sq,
        )
    }

    pub fn with_u_noise(mut self, u_noise: UNoise) -> Self {
        self.u_noise = u_noise;
        self
    }

    pub fn state_dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn noise_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn sigma_w_sq(&self) -> f64 {
        self.process.variance()
    }

    /// Largest deviation from `G F = 0`, `G B = I`, the conditions under which
    /// `Z(k) = W(k−1) + V(k)`.
    pub fn z_channel_defect(&self) -> f64 {
        let r = self.noise_dim();
        if self.g.nrows() != r {
            return f64::INFINITY;
        }
        let gf = (&self.g * &self.f).amax();
        let gb = (&self.g * &self.b - DMatrix::identity(r, r)).amax();
        gf.max(gb)
    }

    /// Process noise covariance `σ² B Bᵀ`.
    pub fn process_cov(&self, variance: f64) -> DMatrix<f64> {
        &self.b * self.b.transpose() * variance
    }

    /// Kalman model on the stacked observation `[Y; Z]` with process variance
    /// `variance`.
    pub fn stacked_kalman(&self, variance: f64) -> KalmanModel {
        let (n, q, d) = (self.h.nrows(), self.g.nrows(), self.state_dim());
        let mut h = DMatrix::zeros(n + q, d);
        h.rows_mut(0, n).copy_from(&self.h);
        h.rows_mut(n, q).copy_from(&self.g);
        let r = DMatrix::from_diagonal(&DVector::from_fn(n + q, |i, _| {
            if i < n {
                self.sigma_u_sq
            } else {
                self.sigma_v_sq
            }
        }));
        KalmanModel {
            f: self.f.clone(),
            q: self.process_cov(variance),
            h,
            r,
        }
    }

    /// Kalman model on `Y` alone.
    pub fn y_kalman(&self) -> KalmanModel {
        let n = self.h.nrows();
        KalmanModel {
            f: self.f.clone(),
            q: self.process_cov(self.sigma_w_sq()),
            h: self.h.clone(),
            r: DMatrix::identity(n, n) * self.sigma_u_sq,
        }
    }
}

/// Ground truth and observations for steps `1..=n`; `w[k−1]` drives the
/// transition into `states[k−1] = X(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
    pub z: Vec<DVector<f64>>,
    pub w: Vec<DVector<f64>>,
    /// `true` where the driving noise came from the first (high-variance)
    /// component.
    pub modes: Vec<Vec<bool>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

pub fn simulate_trajectory<R: Rng + ?Sized>(model: &StateSpaceModel, steps: usize, rng: &mut R) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::invalid("at least one step is required"));
    }
    let (r, n, q) = (model.noise_dim(), model.h.nrows(), model.g.nrows());
    let mut x = DVector::zeros(model.state_dim());
    let mut out = Trajectory {
        states: Vec::with_capacity(steps),
        y: Vec::with_capacity(steps),
        z: Vec::with_capacity(steps),
        w: Vec::with_capacity(steps),
        modes: Vec::with_capacity(steps),
    };
    let sv = model.sigma_v_sq.sqrt();
    for _ in 0..steps {
        let (w, modes): (Vec<f64>, Vec<bool>) = (0..r).map(|_| model.process.sample(rng)).unzip();
        let w = DVector::from_vec(w);
        x = &model.f * x + &model.b * &w;
        let u = DVector::from_fn(n, |_, _| model.u_noise.sample(rng, model.sigma_u_sq));
        let v = DVector::from_fn(q, |_, _| sv * rng.sample::<f64, _>(StandardNormal));
        out.y.push(&model.h * &x + u);
        out.z.push(&model.g * &x + v);
        out.states.push(x.clone());
        out.w.push(w);
        out.modes.push(modes);
    }
    Ok(out)
}

pub(crate) mod test_support {
    use super::*;
    use rand_distr::Distribution;

    /// Random model with `G F = 0`, `G B = I` and a moderate spectral radius.
    pub fn random_model<R: Rng>(rng: &mut R, d: usize, r: usize, n: usize) -> StateSpaceModel {
        let normal = |rng: &mut R| StandardNormal.sample(rng);
        let g = DMatrix::from_fn(r, d, |_, _| normal(rng));
        let b0 = DMatrix::from_fn(d, r, |_, _| normal(rng));
        let b = &b0 * (&g * &b0).try_inverse().expect("generic matrix is invertible");
        let m = DMatrix::from_fn(d, d, |_, _| 0.6 * normal(rng));
        let f: DMatrix<f64> = (DMatrix::identity(d, d) - &b * &g) * m;
        // Spectral radius in [0.5, 1.2] so stacked horizons stay well conditioned.
        let rho = f.clone().complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let f = if rho > 0.0 { f * (rng.random_range(0.5..1.2) / rho) } else { f };
        let h = DMatrix::from_fn(n, d, |_, _| normal(rng));
        let process = ScalarSpikeSlab::new(rng.random_range(0.05..0.5), rng.random_range(2.0..20.0), rng.random_range(0.1..1.0)).unwrap();
        StateSpaceModel::new(f, b, h, g, process, rng.random_range(0.5..3.0), rng.random_range(0.2..2.0)).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Moments;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn maneuver_process() -> ScalarSpikeSlab {
        ScalarSpikeSlab::new(0.05, 100.0, 1.0).unwrap()
    }

    #[test]
    fn white_acceleration_z_measures_acceleration() {
        let m = StateSpaceModel::white_acceleration(maneuver_process(), 25.0, 4.0).unwrap();
        assert_eq!(m.z_channel_defect(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = simulate_trajectory(&m.clone(), 3, &mut rng).unwrap();
        for k in 0..3 {
            assert!(((&m.g * &t.states[k])[0] - t.w[k][0]).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_drive_keeps_zero_state() {
        let process = ScalarSpikeSlab::new(0.0, 1.0, 0.0).unwrap();
        let m = StateSpaceModel::white_acceleration(process, 1.0, 1.0).unwrap();
        let t = simulate_trajectory(&m, 50, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert!(t.states.iter().all(|x| x.amax() == 0.0));
    }

    #[test]
    fn simulation_is_reproducible() {
        let m = StateSpaceModel::white_acceleration(maneuver_process(), 25.0, 4.0).unwrap();
        let a = simulate_trajectory(&m, 20, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = simulate_trajectory(&m, 20, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert!(simulate_trajectory(&m, 0, &mut ChaCha8Rng::seed_from_u64(3)).is_err());
    }

    #[test]
    fn maneuver_frequency_matches_prior() {
        let m = StateSpaceModel::white_acceleration(maneuver_process(), 25.0, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = simulate_trajectory(&m, 20_000, &mut rng).unwrap();
        let mut modes = Moments::default();
        let mut tails = Moments::default();
        for (w, s) in t.w.iter().zip(&t.modes) {
            modes.push(if s[0] { 1.0 } else { 0.0 });
            tails.push(if w[0].abs() > 3.0 { 1.0 } else { 0.0 });
        }
        let e = modes.estimate();
        assert!((e.mean - 0.05).abs() < 3.0 * e.se, "{e:?}");
        // P(|W| > 3σ₂) = p P(|N| > 0.3) + (1 − p) P(|N| > 3)
        let exact = 0.05 * 0.764_177_7 + 0.95 * 0.002_699_8;
        let e = tails.estimate();
        assert!((e.mean - exact).abs() < 3.0 * e.se, "{e:?} vs {exact}");
    }

    #[test]
    fn mixture_noise_keeps_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut acc = Moments::default();
        for _ in 0..200_000 {
            acc.push(UNoise::DEFAULT_MIXTURE.sample(&mut rng, 25.0).powi(2));
        }
        let e = acc.estimate();
        assert!((e.mean - 25.0).abs() < 3.0 * e.se, "{e:?}");
    }
}
