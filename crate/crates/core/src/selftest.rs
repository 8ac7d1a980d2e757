//! Oracle-equivalence suites run by `plmmse selftest`.
//!
//! Each suite compares a fast code path with an independent reference on
//! randomly drawn problems and reports the worst deviation:
//!
//! - `brute-force`: closed-form shrinkage denoiser against exhaustive
//!   enumeration of support patterns.
//! - `batch-vs-recursive`: the recursive tracking filter against the stacked
//!   batch estimator over short horizons.
//! - `penrose`: the four Penrose identities for the pseudo-inverse at every
//!   rank.
//! - `shrinkage-quadrature`: the scalar shrinkage function against the
//!   posterior mean computed by direct integration.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::harness::SeedTree;
use crate::linalg::{pseudo_inverse, GaussianRule};
use crate::sparse::{mmse_denoise, BruteForceMmse, Channels, ScalarSpikeSlab};
use crate::tracking::{simulate_trajectory, BatchPlmmse, RecursiveFilterState, RecursivePlmmse};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Self::Quick),
            "full" => Ok(Self::Full),
            _ => Err(Error::invalid(format!("unknown selftest level '{s}' (expected quick or full)"))),
        }
    }
}

/// Deliberate defects used to check that the suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Negates the batch gain before it is applied.
    FlipBatchGainSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub checks: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    /// First failure or setup error, if any.
    pub failure: Option<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.max_deviation <= self.tolerance
    }
}

/// `suite=<name> status=PASS|FAIL checks=<n> max_deviation=<x> tolerance=<t>`
impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "suite={} status={} checks={} max_deviation={:.3e} tolerance={:.0e}",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks,
            self.max_deviation,
            self.tolerance
        )?;
        if let Some(msg) = &self.failure {
            write!(f, " error=\"{}\"", msg.replace('"', "'"))?;
        }
        Ok(())
    }
}

pub const SUITES: [&str; 4] = ["brute-force", "batch-vs-recursive", "penrose", "shrinkage-quadrature"];

pub fn run_suites(level: Level, fault: Fault, seed: u64) -> Vec<SuiteOutcome> {
    let seeds = SeedTree::new(seed);
    let full = level == Level::Full;
    vec![
        finish("brute-force", 1e-8, brute_force(&mut seeds.stream(1, 0), full)),
        finish("batch-vs-recursive", 1e-6, batch_vs_recursive(&mut seeds.stream(2, 0), full, fault)),
        finish("penrose", 1e-9, penrose(&mut seeds.stream(3, 0), full)),
        finish("shrinkage-quadrature", 1e-6, shrinkage(&mut seeds.stream(4, 0), full)),
    ]
}

fn finish(name: &'static str, tolerance: f64, r: Result<(usize, f64)>) -> SuiteOutcome {
    match r {
        Ok((checks, max_deviation)) => SuiteOutcome {
            name,
            checks,
            max_deviation,
            tolerance,
            failure: (!max_deviation.is_finite()).then(|| "non-finite deviation".to_string()),
        },
        Err(e) => SuiteOutcome {
            name,
            checks: 0,
            max_deviation: f64::INFINITY,
            tolerance,
            failure: Some(e.to_string()),
        },
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn brute_force(rng: &mut ChaCha8Rng, full: bool) -> Result<(usize, f64)> {
    use crate::sparse::test_support::{random_model, random_orthonormal, random_prior};
    let (max_m, reps) = if full { (12, 6) } else { (8, 2) };
    let (mut checks, mut worst) = (0, 0.0f64);
    for m in 1..=max_m {
        for _ in 0..reps {
            let alpha = rng.random_range(0.3..1.5);
            let model = random_model(rng, m, m, alpha);
            let prior = random_prior(rng, m);
            let psi = random_orthonormal(rng, m);
            let oracle = BruteForceMmse::new(&model, &prior, &psi, Channels::ZOnly)?;
            let (w, _) = prior.sample(rng);
            let z = model.g() * (&psi * w) + normal_vec(rng, m) * model.sigma_v_sq().sqrt();
            let exact = oracle.posterior(None, &z)?.mean;
            let fast = mmse_denoise(&z, &model, &prior, &psi)?;
            worst = worst.max((exact - fast).amax() / 1.0f64.max(z.amax()));
            checks += 1;
        }
    }
    Ok((checks, worst))
}

fn batch_vs_recursive(rng: &mut ChaCha8Rng, full: bool, fault: Fault) -> Result<(usize, f64)> {
    use crate::tracking::test_support::random_model;
    let (models, horizon) = if full { (100, 8) } else { (20, 5) };
    let (mut checks, mut worst) = (0, 0.0f64);
    for trial in 0..models {
        let (d, r) = if trial % 2 == 0 { (3, 1) } else { (4, 2) };
        let model = random_model(rng, d, r, 1 + trial % 2);
        let filter = RecursivePlmmse::with_quadrature(&model)?;
        let t = simulate_trajectory(&model, horizon, rng)?;
        let mut state = RecursiveFilterState::new(d);
        for n in 1..=horizon {
            let (next, x_pl) = filter.cycle(&state, &t.y[n - 1], &t.z[n - 1])?;
            state = next;
            let mut batch = BatchPlmmse::build(&model, filter.beta(), &t.z[..n])?;
            if fault == Fault::FlipBatchGainSign {
                batch.gain = -batch.gain;
            }
            let last = batch.estimate(&t.y[..n]).rows((n - 1) * d, d).into_owned();
            worst = worst.max((x_pl - &last).amax() / last.amax().max(1.0));
            checks += 1;
        }
    }
    Ok((checks, worst))
}

fn penrose(rng: &mut ChaCha8Rng, full: bool) -> Result<(usize, f64)> {
    use crate::sparse::test_support::random_orthonormal;
    let (trials, max_dim) = if full { (2000, 12) } else { (200, 6) };
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let rows = rng.random_range(1..=max_dim);
        let cols = rng.random_range(1..=max_dim);
        let rank = rng.random_range(0..=rows.min(cols));
        // Singular values in [0.1, 10] on the chosen rank.
        let mut s = DMatrix::zeros(rows, cols);
        for k in 0..rank {
            s[(k, k)] = 10f64.powf(rng.random_range(-1.0..1.0));
        }
        let a = random_orthonormal(rng, rows) * s * random_orthonormal(rng, cols);
        let p = pseudo_inverse(&a, 0.0)?;
        if rank == 0 {
            worst = worst.max(p.amax());
            continue;
        }
        let scale = a.amax().max(1.0) * p.amax().max(1.0);
        let ap = &a * &p;
        let pa = &p * &a;
        worst = worst
            .max((&ap * &a - &a).amax() / a.amax())
            .max((&pa * &p - &p).amax() / p.amax())
            .max((&ap - ap.transpose()).amax() / scale)
            .max((&pa - pa.transpose()).amax() / scale);
    }
    Ok((trials, worst))
}

// E[W | z̃] by integrating w p(w) p(z̃ | w) on a Gaussian grid.
fn posterior_mean(c: &ScalarSpikeSlab, z: f64, alpha: f64, sv2: f64, rule: &GaussianRule) -> f64 {
    let like = |w: f64| (-(z - alpha * w).powi(2) / (2.0 * sv2)).exp();
    let (mut num, mut den) = (0.0, 0.0);
    for (pi, s) in [(c.p, c.sigma1_sq), (1.0 - c.p, c.sigma2_sq)] {
        if pi == 0.0 {
            continue;
        }
        if s == 0.0 {
            den += pi * like(0.0);
        } else {
            num += pi * rule.expect(s.sqrt(), |w| w * like(w));
            den += pi * rule.expect(s.sqrt(), like);
        }
    }
    num / den
}

fn shrinkage(rng: &mut ChaCha8Rng, full: bool) -> Result<(usize, f64)> {
    let rule = GaussianRule::new(4001)?;
    let pairs = if full { 20_000 } else { 2_000 };
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let c = ScalarSpikeSlab::new(rng.random_range(0.02..0.98), rng.random_range(0.5..20.0), rng.random_range(0.0..0.5))?;
        let alpha = rng.random_range(0.3..2.0);
        let sv2 = rng.random_range(0.2..2.0);
        let z = rng.random_range(-8.0..8.0);
        worst = worst.max((c.shrink(z, alpha, sv2) - posterior_mean(&c, z, alpha, sv2, &rule)).abs());
    }
    Ok((pairs, worst))
}
