//! Binary `X = ±1` observed through two unit-gain Gaussian channels.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::harness::{par_runs, Estimate, Moments, SeedTree};
use crate::linalg::GaussianRule;

const BLOCK: usize = 10_000;
const STREAM_LABEL: u64 = 0x7011;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarToyConfig {
    pub sigma_u2: f64,
    pub sigma_v2: f64,
}

impl ScalarToyConfig {
    pub fn new(sigma_u2: f64, sigma_v2: f64) -> Result<Self> {
        if !(sigma_u2 > 0.0 && sigma_u2.is_finite()) || !(sigma_v2 > 0.0 && sigma_v2.is_finite()) {
            return Err(Error::invalid("toy noise variances must be positive and finite"));
        }
        Ok(Self { sigma_u2, sigma_v2 })
    }
}

/// `E[X|Z=z]`: the ratio `(N(z-1) - N(z+1)) / (N(z-1) + N(z+1))` of Gaussian
/// densities with variance `σ_V²`, which simplifies to `tanh(z / σ_V²)` and
/// stays finite for large `|z|`.
pub fn toy_conditional_mean(z: f64, cfg: &ScalarToyConfig) -> f64 {
    (z / cfg.sigma_v2).tanh()
}

/// `Var(E[X|Z])`, by quadrature over `Z | X = 1` (the law is symmetric).
pub fn toy_xhat_variance(cfg: &ScalarToyConfig) -> f64 {
    let rule = GaussianRule::new(2049).expect("fixed node count");
    let s = cfg.sigma_v2.sqrt();
    rule.expect(s, |v| toy_conditional_mean(1.0 + v, cfg).powi(2))
}

/// Weight `γ` on `Y` in `X̂ = γ Y + (1 − γ) E[X|Z]`.
pub fn toy_gamma(cfg: &ScalarToyConfig) -> f64 {
    toy_weights(cfg).1
}

/// Monte Carlo MSE of the partially linear estimator and of the naive convex
/// combinations `α X̂_Y^L + (1 − α) X̂_Z^NL`.
#[derive(Debug, Clone)]
pub struct ToyMseCurves {
    pub gamma: f64,
    pub xhat_variance: f64,
    pub alphas: Vec<f64>,
    pub plmmse: Estimate,
    pub naive: Vec<Estimate>,
    /// Paired `MSE(naive_α) − MSE(PL)` per α.
    pub naive_minus_plmmse: Vec<Estimate>,
}

impl ToyMseCurves {
    pub fn best_naive(&self) -> (usize, Estimate) {
        self.naive
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
            .expect("alpha grid is non-empty")
    }

    /// `1 − MSE(PL) / min_α MSE(naive_α)`.
    pub fn relative_gap(&self) -> f64 {
        1.0 - self.plmmse.mean / self.best_naive().1.mean
    }
}

pub fn toy_mse_curves(
    cfg: &ScalarToyConfig,
    alphas: &[f64],
    mc_count: usize,
    seeds: SeedTree,
) -> Result<ToyMseCurves> {
    check_toy_inputs(alphas, mc_count)?;
    let (xhat_variance, gamma) = toy_weights(cfg);
    let blocks = mc_count.div_ceil(BLOCK);
    let partials = par_runs(blocks, |b| {
        let mut pl = Moments::default();
        let mut naive = vec![Moments::default(); alphas.len()];
        let mut gaps = vec![Moments::default(); alphas.len()];
        simulate_block(cfg, gamma, alphas, mc_count, b, &seeds, |e_pl, errs| {
            pl.push(e_pl);
            for (k, e) in errs.iter().enumerate() {
                naive[k].push(*e);
                gaps[k].push(e - e_pl);
            }
        });
        (pl, naive, gaps)
    });

    let mut pl = Moments::default();
    let mut naive = vec![Moments::default(); alphas.len()];
    let mut gaps = vec![Moments::default(); alphas.len()];
    for (p, n, g) in &partials {
        pl.merge(p);
        naive.iter_mut().zip(n).for_each(|(a, b)| a.merge(b));
        gaps.iter_mut().zip(g).for_each(|(a, b)| a.merge(b));
    }
    Ok(ToyMseCurves {
        gamma,
        xhat_variance,
        alphas: alphas.to_vec(),
        plmmse: pl.estimate(),
        naive: naive.iter().map(Moments::estimate).collect(),
        naive_minus_plmmse: gaps.iter().map(Moments::estimate).collect(),
    })
}

fn toy_weights(cfg: &ScalarToyConfig) -> (f64, f64) {
    let s = toy_xhat_variance(cfg);
    (s, (1.0 - s) / (1.0 + cfg.sigma_u2 - s))
}

/// Draws block `b` and reports the PLMMSE squared error and the naive ones
/// for every draw.
fn simulate_block(
    cfg: &ScalarToyConfig,
    gamma: f64,
    alphas: &[f64],
    mc_count: usize,
    b: usize,
    seeds: &SeedTree,
    mut sink: impl FnMut(f64, &[f64]),
) {
    let lin_gain = 1.0 / (1.0 + cfg.sigma_u2);
    let (su, sv) = (cfg.sigma_u2.sqrt(), cfg.sigma_v2.sqrt());
    let mut rng = seeds.stream(STREAM_LABEL, b as u64);
    let draws = BLOCK.min(mc_count - b * BLOCK);
    let mut errs = vec![0.0; alphas.len()];
    for _ in 0..draws {
        let x = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let y = x + su * rng.sample::<f64, _>(StandardNormal);
        let z = x + sv * rng.sample::<f64, _>(StandardNormal);
        let x_z = toy_conditional_mean(z, cfg);
        let x_y = lin_gain * y;
        let e_pl = (x - gamma * y - (1.0 - gamma) * x_z).powi(2);
        for (e, a) in errs.iter_mut().zip(alphas) {
            *e = (x - a * x_y - (1.0 - a) * x_z).powi(2);
        }
        sink(e_pl, &errs);
    }
}

/// Per-draw squared errors `[PL, naive_α₀, naive_α₁, …]` in draw order, from
/// the same streams as [`toy_mse_curves`].
pub fn toy_squared_errors(cfg: &ScalarToyConfig, alphas: &[f64], mc_count: usize, seeds: SeedTree) -> Result<Vec<Vec<f64>>> {
    check_toy_inputs(alphas, mc_count)?;
    let (_, gamma) = toy_weights(cfg);
    let blocks = mc_count.div_ceil(BLOCK);
    let parts = par_runs(blocks, |b| {
        let mut rows = Vec::new();
        simulate_block(cfg, gamma, alphas, mc_count, b, &seeds, |e_pl, errs| {
            let mut row = Vec::with_capacity(errs.len() + 1);
            row.push(e_pl);
            row.extend_from_slice(errs);
            rows.push(row);
        });
        rows
    });
    Ok(parts.into_iter().flatten().collect())
}

fn check_toy_inputs(alphas: &[f64], mc_count: usize) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::invalid("alpha grid must not be empty"));
    }
    if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::invalid("alphas must lie in [0, 1]"));
    }
    if mc_count == 0 {
        return Err(Error::invalid("Monte Carlo count must be positive"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_pdf;

    #[test]
    fn conditional_mean_shape() {
        let cfg = ScalarToyConfig::new(1.0, 1.0).unwrap();
        assert_eq!(toy_conditional_mean(0.0, &cfg), 0.0);
        assert!((toy_conditional_mean(40.0, &cfg) - 1.0).abs() < 1e-15);
        assert_eq!(toy_conditional_mean(-2.0, &cfg), -toy_conditional_mean(2.0, &cfg));
        assert!(toy_conditional_mean(3.0, &cfg).abs() <= 1.0);
    }

    #[test]
    fn conditional_mean_matches_two_point_posterior() {
        let cfg = ScalarToyConfig::new(1.0, 1.0).unwrap();
        let z = 1.0;
        let lp = gaussian_pdf(z, 1.0, 1.0).unwrap();
        let ln = gaussian_pdf(z, -1.0, 1.0).unwrap();
        let posterior = (lp - ln) / (lp + ln);
        assert!((toy_conditional_mean(z, &cfg) - posterior).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ScalarToyConfig::new(0.0, 1.0).is_err());
        let cfg = ScalarToyConfig::new(1.0, 1.0).unwrap();
        assert!(toy_mse_curves(&cfg, &[], 100, SeedTree::new(0)).is_err());
        assert!(toy_mse_curves(&cfg, &[1.5], 100, SeedTree::new(0)).is_err());
    }

    #[test]
    fn alpha_one_equals_standalone_lmmse() {
        let cfg = ScalarToyConfig::new(1.0, 1.0).unwrap();
        let curves = toy_mse_curves(&cfg, &[1.0], 50_000, SeedTree::new(3)).unwrap();
        // MSE of Y/(1+σ_U²) is σ_U²/(1+σ_U²) = 0.5
        let e = curves.naive[0];
        assert!((e.mean - 0.5).abs() < 3.0 * e.se);
    }
}
