use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::harness::{par_runs, Moments, SeedTree};
use crate::linalg::{gaussian_log_pdf, GaussianRule};

/// Two-level Gaussian scale mixture for one coefficient: `N(0, σ₁²)` with
/// probability `p`, `N(0, σ₂²)` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSpikeSlab {
    pub p: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
}

impl ScalarSpikeSlab {
    pub fn new(p: f64, sigma1_sq: f64, sigma2_sq: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("mixture probability {p} outside [0, 1]")));
        }
        for (name, v) in [("sigma1_sq", sigma1_sq), ("sigma2_sq", sigma2_sq)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self {
            p,
            sigma1_sq,
            sigma2_sq,
        })
    }

    /// `σ_W² = p σ₁² + (1 − p) σ₂²`.
    pub fn variance(&self) -> f64 {
        self.p * self.sigma1_sq + (1.0 - self.p) * self.sigma2_sq
    }

    fn components(&self) -> [(f64, f64); 2] {
        [(self.p, self.sigma1_sq), (1.0 - self.p, self.sigma2_sq)]
    }

    /// Posterior probability of the first (slab) component given
    /// `z̃ = α W + Ṽ`, `Ṽ ~ N(0, σ_V²)`.
    pub fn slab_probability(&self, z_tilde: f64, alpha: f64, sigma_v_sq: f64) -> f64 {
        let [a, b] = self.log_weights(z_tilde, alpha, sigma_v_sq);
        let m = a.max(b);
        if m == f64::NEG_INFINITY {
            return self.p;
        }
        let (ea, eb) = ((a - m).exp(), (b - m).exp());
        ea / (ea + eb)
    }

    fn log_weights(&self, z: f64, alpha: f64, sigma_v_sq: f64) -> [f64; 2] {
        self.components().map(|(pi, s)| {
            if pi <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let var = alpha * alpha * s + sigma_v_sq;
            if var <= 0.0 {
                return if z == 0.0 { pi.ln() } else { f64::NEG_INFINITY };
            }
            pi.ln() + gaussian_log_pdf(z, var)
        })
    }

    /// Posterior mean `E[W | z̃]`.
    pub fn shrink(&self, z_tilde: f64, alpha: f64, sigma_v_sq: f64) -> f64 {
        let lw = self.log_weights(z_tilde, alpha, sigma_v_sq);
        let m = lw[0].max(lw[1]);
        if m == f64::NEG_INFINITY {
            return 0.0;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for ((_, s), l) in self.components().iter().zip(lw) {
            let w = (l - m).exp();
            let var = alpha * alpha * s + sigma_v_sq;
            let gain = if var > 0.0 { alpha * s / var } else { 0.0 };
            num += w * gain;
            den += w;
        }
        z_tilde * num / den
    }

    /// `Var(f(Z̃))` with `Z̃ ~ p N(0, α²σ₁²+σ_V²) + (1−p) N(0, α²σ₂²+σ_V²)`.
    ///
    /// `f` is odd and the law of `Z̃` symmetric, so the variance is `E[f²]`.
    pub fn beta(&self, alpha: f64, sigma_v_sq: f64, rule: &GaussianRule) -> f64 {
        let total: f64 = self
            .components()
            .iter()
            .filter(|(pi, _)| *pi > 0.0)
            .map(|(pi, s)| {
                let std = (alpha * alpha * s + sigma_v_sq).sqrt();
                pi * rule.expect(std, |z| self.shrink(z, alpha, sigma_v_sq).powi(2))
            })
            .sum();
        total.clamp(0.0, self.variance())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, bool) {
        let slab = rng.random::<f64>() < self.p;
        let var = if slab { self.sigma1_sq } else { self.sigma2_sq };
        let n: f64 = rng.sample(StandardNormal);
        (var.sqrt() * n, slab)
    }
}

/// Independent spike-and-slab prior on the dictionary coefficients `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeSlabPrior {
    coeffs: Vec<ScalarSpikeSlab>,
}

impl SpikeSlabPrior {
    pub fn new(p: Vec<f64>, sigma1_sq: Vec<f64>, sigma2_sq: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.len() != sigma1_sq.len() || p.len() != sigma2_sq.len() {
            return Err(Error::invalid("prior parameter vectors must be non-empty and of equal length"));
        }
        let coeffs = p
            .iter()
            .zip(&sigma1_sq)
            .zip(&sigma2_sq)
            .map(|((p, s1), s2)| ScalarSpikeSlab::new(*p, *s1, *s2))
            .collect::<Result<_>>()?;
        Ok(Self { coeffs })
    }

    pub fn homogeneous(dim: usize, p: f64, sigma1_sq: f64, sigma2_sq: f64) -> Result<Self> {
        Self::new(vec![p; dim], vec![sigma1_sq; dim], vec![sigma2_sq; dim])
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficient(&self, i: usize) -> &ScalarSpikeSlab {
        &self.coeffs[i]
    }

    pub fn coefficients(&self) -> &[ScalarSpikeSlab] {
        &self.coeffs
    }

    pub fn is_homogeneous(&self) -> bool {
        self.coeffs.iter().all(|c| *c == self.coeffs[0])
    }

    /// Diagonal of `Γ_WW`.
    pub fn variances(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.coeffs.iter().map(ScalarSpikeSlab::variance))
    }

    /// Draws `W` and its support pattern (`true` = slab).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (DVector<f64>, Vec<bool>) {
        let (w, s): (Vec<f64>, Vec<bool>) = self.coeffs.iter().map(|c| c.sample(rng)).unzip();
        (DVector::from_vec(w), s)
    }
}

/// `E[W_i | z̃]` for coefficient `i`.
pub fn shrink(z_tilde: f64, i: usize, prior: &SpikeSlabPrior, alpha: f64, sigma_v_sq: f64) -> f64 {
    prior.coefficient(i).shrink(z_tilde, alpha, sigma_v_sq)
}

/// How `β` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaMethod {
    /// Fixed-node Gaussian quadrature per mixture component.
    Quadrature { nodes: usize },
    /// Sample variance of `f(Z̃)` over seeded draws.
    MonteCarlo { draws: usize, seed: u64 },
}

impl Default for BetaMethod {
    fn default() -> Self {
        BetaMethod::Quadrature { nodes: 512 }
    }
}

/// `β_i = Var(f(Z̃_i))` and `σ_{W,i}² = Var(W_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageStatistics {
    pub beta: DVector<f64>,
    pub sigma_w_sq: DVector<f64>,
}

impl ShrinkageStatistics {
    pub fn new(beta: DVector<f64>, sigma_w_sq: DVector<f64>) -> Result<Self> {
        if beta.len() != sigma_w_sq.len() {
            return Err(Error::invalid("beta and sigma_w_sq lengths differ"));
        }
        for (b, s) in beta.iter().zip(sigma_w_sq.iter()) {
            if !(*b >= 0.0 && *b <= s + 1e-9) {
                return Err(Error::invalid(format!("beta {b} outside [0, sigma_w_sq = {s}]")));
            }
        }
        Ok(Self { beta, sigma_w_sq })
    }

    pub fn dim(&self) -> usize {
        self.beta.len()
    }

    /// Diagonal of `Γ_WW − Cov(f̃(Z̃))`.
    pub fn residual_variances(&self) -> DVector<f64> {
        &self.sigma_w_sq - &self.beta
    }

    pub fn is_homogeneous(&self) -> bool {
        let (b0, s0) = (self.beta[0], self.sigma_w_sq[0]);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        self.beta.iter().all(|b| close(*b, b0)) && self.sigma_w_sq.iter().all(|s| close(*s, s0))
    }
}

const MIN_NODES: usize = 128;
const MIN_DRAWS: usize = 100_000;
const BETA_STREAM: u64 = 0xBE7A;

pub fn compute_beta(
    prior: &SpikeSlabPrior,
    alpha: f64,
    sigma_v_sq: f64,
    method: BetaMethod,
) -> Result<ShrinkageStatistics> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::invalid("alpha must be finite and nonzero"));
    }
    if !(sigma_v_sq >= 0.0 && sigma_v_sq.is_finite()) {
        return Err(Error::invalid("sigma_v_sq must be finite and >= 0"));
    }
    let sigma_w_sq = prior.variances();
    let beta_of = |c: &ScalarSpikeSlab, i: usize| -> Result<f64> {
        match method {
            BetaMethod::Quadrature { nodes } => {
                if nodes < MIN_NODES {
                    return Err(Error::invalid(format!(
                        "quadrature budget {nodes} below the minimum of {MIN_NODES} nodes"
                    )));
                }
                Ok(c.beta(alpha, sigma_v_sq, &GaussianRule::new(nodes)?))
            }
            BetaMethod::MonteCarlo { draws, seed } => {
                if draws < MIN_DRAWS {
                    return Err(Error::invalid(format!(
                        "Monte Carlo budget {draws} below the minimum of {MIN_DRAWS} draws"
                    )));
                }
                let sv = sigma_v_sq.sqrt();
                let chunks = draws.div_ceil(MIN_DRAWS);
                let parts = par_runs(chunks, |k| {
                    let mut rng = SeedTree::new(seed).child(i as u64).stream(BETA_STREAM, k as u64);
                    let mut acc = Moments::default();
                    for _ in 0..MIN_DRAWS.min(draws - k * MIN_DRAWS) {
                        let (w, _) = c.sample(&mut rng);
                        let n: f64 = rng.sample(StandardNormal);
                        acc.push(c.shrink(alpha * w + sv * n, alpha, sigma_v_sq));
                    }
                    acc
                });
                let mut acc = Moments::default();
                parts.iter().for_each(|p| acc.merge(p));
                Ok(acc.variance().clamp(0.0, c.variance()))
            }
        }
    };
    let mut beta = DVector::zeros(prior.dim());
    let mut previous: Option<(ScalarSpikeSlab, f64)> = None;
    for (i, c) in prior.coefficients().iter().enumerate() {
        beta[i] = match previous {
            Some((pc, b)) if pc == *c && matches!(method, BetaMethod::Quadrature { .. }) => b,
            _ => beta_of(c, i)?,
        };
        previous = Some((*c, beta[i]));
    }
    ShrinkageStatistics::new(beta, sigma_w_sq)
}
