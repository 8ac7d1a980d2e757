use nalgebra::DVector;

use super::{
    kalman_step, simulate_trajectory, ImmBank, KalmanState, RecursiveFilterState, RecursivePlmmse, StateSpaceModel,
    UNoise,
};
use crate::error::{Error, Result};
use crate::harness::{par_runs, Estimate, SeedTree};
use crate::sparse::ScalarSpikeSlab;

const STREAM_LABEL: u64 = 0x7AC4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    Plmmse,
    Kalman,
    Imm,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Plmmse, FilterKind::Kalman, FilterKind::Imm];

    pub fn name(&self) -> &'static str {
        match self {
            FilterKind::Plmmse => "plmmse",
            FilterKind::Kalman => "kalman",
            FilterKind::Imm => "imm",
        }
    }
}

/// Mean squared position, velocity and acceleration errors over one run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KinematicErrors {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
}

impl KinematicErrors {
    pub const NAMES: [&'static str; 3] = ["position", "velocity", "acceleration"];

    pub fn get(&self, quantity: usize) -> f64 {
        [self.position, self.velocity, self.acceleration][quantity]
    }
}

/// Errors of a position track, with velocity and acceleration taken as the
/// first and second differences of positions and positions before step 1
/// equal to zero.
pub fn kinematic_errors(truth: &[f64], estimate: &[f64]) -> Result<KinematicErrors> {
    if truth.len() != estimate.len() || truth.is_empty() {
        return Err(Error::invalid("position tracks must be non-empty and of equal length"));
    }
    let at = |s: &[f64], k: isize| if k < 0 { 0.0 } else { s[k as usize] };
    let mut acc = KinematicErrors::default();
    for k in 0..truth.len() as isize {
        let e = |s: &[f64]| (at(s, k), at(s, k) - at(s, k - 1), at(s, k) - 2.0 * at(s, k - 1) + at(s, k - 2));
        let (tp, tv, ta) = e(truth);
        let (ep, ev, ea) = e(estimate);
        acc.position += (tp - ep).powi(2);
        acc.velocity += (tv - ev).powi(2);
        acc.acceleration += (ta - ea).powi(2);
    }
    let n = truth.len() as f64;
    acc.position /= n;
    acc.velocity /= n;
    acc.acceleration /= n;
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingConfig {
    pub p: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma_u_sq: f64,
    /// Standard deviations of the acceleration noise `V`.
    pub sigma_v_grid: Vec<f64>,
    pub mc_runs: usize,
    pub steps: usize,
    pub u_noise: UNoise,
    pub seed: u64,
    /// IMM transition matrix; `None` selects rows `(1 − p, p)`.
    pub transition: Option<[[f64; 2]; 2]>,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            p: 0.05,
            sigma1_sq: 100.0,
            sigma2_sq: 1.0,
            sigma_u_sq: 25.0,
            sigma_v_grid: (1..=15).map(f64::from).collect(),
            mc_runs: 100,
            steps: 1000,
            u_noise: UNoise::Gaussian,
            seed: 1,
            transition: None,
        }
    }
}

impl TrackingConfig {
    pub fn validate(&self) -> Result<()> {
        ScalarSpikeSlab::new(self.p, self.sigma1_sq, self.sigma2_sq)?;
        if self.sigma_v_grid.is_empty() || self.sigma_v_grid.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::invalid("sigma_v grid must be non-empty with positive entries"));
        }
        if !(self.sigma_u_sq > 0.0) {
            return Err(Error::invalid("sigma_u_sq must be positive"));
        }
        if self.mc_runs < 2 || self.steps == 0 {
            return Err(Error::invalid("mc_runs must be >= 2 and steps >= 1"));
        }
        if let UNoise::Mixture {
            outlier_prob,
            variance_ratio,
        } = self.u_noise
        {
            if !(0.0..1.0).contains(&outlier_prob) || !(variance_ratio > 0.0) {
                return Err(Error::invalid("mixture needs outlier_prob in [0, 1) and a positive variance ratio"));
            }
        }
        Ok(())
    }

    pub fn model(&self, sigma_v: f64) -> Result<StateSpaceModel> {
        let process = ScalarSpikeSlab::new(self.p, self.sigma1_sq, self.sigma2_sq)?;
        Ok(StateSpaceModel::white_acceleration(process, self.sigma_u_sq, sigma_v * sigma_v)?.with_u_noise(self.u_noise))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingPoint {
    pub sigma_v: f64,
    pub beta: f64,
    /// Per run, errors of each filter in [`FilterKind::ALL`] order.
    pub runs: Vec<[KinematicErrors; 3]>,
    pub imm_fallbacks: usize,
}

impl TrackingPoint {
    pub fn values(&self, filter: FilterKind, quantity: usize) -> Vec<f64> {
        let f = FilterKind::ALL.iter().position(|k| *k == filter).expect("known filter");
        self.runs.iter().map(|r| r[f].get(quantity)).collect()
    }

    pub fn estimate(&self, filter: FilterKind, quantity: usize) -> Estimate {
        Estimate::from_samples(&self.values(filter, quantity))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingResult {
    pub config: TrackingConfig,
    pub points: Vec<TrackingPoint>,
}

fn run_once(cfg: &TrackingConfig, model: &StateSpaceModel, pl: &RecursivePlmmse, imm: &ImmBank, seeds: SeedTree, run: usize) -> Result<([KinematicErrors; 3], bool)> {
    // Common random numbers across the grid: only the scale of V changes.
    let mut rng = seeds.stream(STREAM_LABEL, run as u64);
    let t = simulate_trajectory(model, cfg.steps, &mut rng)?;
    let km = model.stacked_kalman(model.sigma_w_sq());
    let mut pl_state = RecursiveFilterState::new(3);
    let mut kf = KalmanState::zeros(3);
    let mut imm_state = imm.initial_state([1.0 - cfg.p, cfg.p]);
    let mut fallback = false;
    let mut tracks = [vec![], vec![], vec![]];
    for (y, z) in t.y.iter().zip(&t.z) {
        let (next, x_pl) = pl.cycle(&pl_state, y, z)?;
        pl_state = next;
        let obs = DVector::from_vec(vec![y[0], z[0]]);
        kf = kalman_step(&kf, &obs, &km, 1.0)?;
        let (next, x_imm) = imm.step(&imm_state, y, z)?;
        fallback |= next.fallback;
        imm_state = next;
        tracks[0].push(x_pl[0]);
        tracks[1].push(kf.x[0]);
        tracks[2].push(x_imm[0]);
    }
    let truth: Vec<f64> = t.states.iter().map(|x| x[0]).collect();
    Ok((
        [
            kinematic_errors(&truth, &tracks[0])?,
            kinematic_errors(&truth, &tracks[1])?,
            kinematic_errors(&truth, &tracks[2])?,
        ],
        fallback,
    ))
}

/// Monte Carlo comparison of the recursive PLMMSE filter, the Kalman filter
/// on `[Y; Z]`, and a two-model IMM, across a grid of acceleration noise
/// levels.
pub fn tracking_experiment(cfg: &TrackingConfig) -> Result<TrackingResult> {
    cfg.validate()?;
    let seeds = SeedTree::new(cfg.seed);
    let setups = cfg
        .sigma_v_grid
        .iter()
        .map(|sv| {
            let model = cfg.model(*sv)?;
            let pl = RecursivePlmmse::with_quadrature(&model)?;
            let imm = match cfg.transition {
                Some(t) => ImmBank::new(&model, t)?,
                None => ImmBank::with_iid_switching(&model)?,
            };
            Ok((model, pl, imm))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.context("tracking experiment setup"))?;
    let total = setups.len() * cfg.mc_runs;
    let outcomes = par_runs(total, |i| {
        let (k, r) = (i / cfg.mc_runs, i % cfg.mc_runs);
        let (model, pl, imm) = &setups[k];
        run_once(cfg, model, pl, imm, seeds, r)
    });
    let mut outcomes = outcomes.into_iter();
    let mut points = Vec::with_capacity(setups.len());
    for (sv, (_, pl, _)) in cfg.sigma_v_grid.iter().zip(&setups) {
        let mut runs = Vec::with_capacity(cfg.mc_runs);
        let mut imm_fallbacks = 0;
        for outcome in outcomes.by_ref().take(cfg.mc_runs) {
            let (errs, fb) = outcome.map_err(|e| e.context(format!("tracking run at sigma_v = {sv}")))?;
            runs.push(errs);
            imm_fallbacks += usize::from(fb);
        }
        points.push(TrackingPoint {
            sigma_v: *sv,
            beta: pl.beta(),
            runs,
            imm_fallbacks,
        });
    }
    Ok(TrackingResult {
        config: cfg.clone(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Moments;
    use crate::tracking::simulate_trajectory;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kinematic_differences() {
        let truth = [1.0, 3.0, 6.0];
        let e = kinematic_errors(&truth, &[0.0, 0.0, 0.0]).unwrap();
        assert!((e.position - (1.0 + 9.0 + 36.0) / 3.0).abs() < 1e-12);
        assert!((e.velocity - (1.0 + 4.0 + 9.0) / 3.0).abs() < 1e-12);
        assert!((e.acceleration - (1.0 + 1.0 + 1.0) / 3.0).abs() < 1e-12);
        assert!(kinematic_errors(&truth, &[0.0]).is_err());
    }

    #[test]
    fn large_acceleration_noise_matches_position_only_kalman() {
        let cfg = TrackingConfig::default();
        let model = cfg.model(1e6).unwrap();
        let pl = RecursivePlmmse::with_quadrature(&model).unwrap();
        let t = simulate_trajectory(&model, 200, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let mut s = RecursiveFilterState::new(3);
        let mut kf = KalmanState::zeros(3);
        let mut worst: f64 = 0.0;
        for (y, z) in t.y.iter().zip(&t.z) {
            let (next, x) = pl.cycle(&s, y, z).unwrap();
            s = next;
            kf = kalman_step(&kf, y, &model.y_kalman(), 1.0).unwrap();
            worst = worst.max((x - &kf.x).amax());
        }
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn smoothed_acceleration_depends_only_on_next_z() {
        // Regress W(2) on Z(1..6): only Z(3) = W(2) + V(3), stored at index 2, matters.
        let cfg = TrackingConfig::default();
        let model = cfg.model(3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 20_000;
        let (mut zs, mut ws) = (Vec::with_capacity(n * 6), Vec::with_capacity(n));
        for _ in 0..n {
            let t = simulate_trajectory(&model, 6, &mut rng).unwrap();
            zs.extend(t.z.iter().map(|z| z[0]));
            ws.push(t.w[2][0]);
        }
        let x = DMatrix::from_row_slice(n, 6, &zs);
        let w = DVector::from_vec(ws);
        let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
        let coef = &xtx_inv * x.transpose() * &w;
        let resid = &w - &x * &coef;
        let s2 = resid.norm_squared() / (n - 6) as f64;
        for j in 0..6 {
            let se = (s2 * xtx_inv[(j, j)]).sqrt();
            if j == 2 {
                assert!(coef[j] > 10.0 * se);
            } else {
                assert!(coef[j].abs() < 3.0 * se, "coefficient {j}: {} (se {se})", coef[j]);
            }
        }
        let mut m = Moments::default();
        resid.iter().for_each(|r| m.push(*r));
        assert!(m.variance() > 0.0);
    }

    #[test]
    fn small_experiment_is_deterministic() {
        let cfg = TrackingConfig {
            sigma_v_grid: vec![2.0, 10.0],
            mc_runs: 4,
            steps: 100,
            ..Default::default()
        };
        let a = tracking_experiment(&cfg).unwrap();
        let b = tracking_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points[0].runs.len(), 4);
    }
}
