use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{check_dictionary, check_prior, AdditiveNoiseModel, SpikeSlabPrior};
use crate::error::{Error, Result};

/// Largest dimension accepted by the enumeration oracle.
pub const ENUMERATION_LIMIT: usize = 16;
const CACHE_LIMIT: usize = 4096;

/// Which observations the posterior conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channels {
    Both,
    ZOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForcePosterior {
    pub mean: DVector<f64>,
    /// Posterior probability of each support pattern, indexed by the bit mask
    /// (bit `i` set = coefficient `i` drawn from the first component).
    pub pattern_probabilities: Vec<f64>,
}

struct Pattern {
    log_prior_norm: f64,
    chol: Cholesky<f64, Dyn>,
    gain: DMatrix<f64>,
}

/// Exact `E[X | observations]` by enumerating all `2^M` support patterns,
/// conditioning a Gaussian per pattern, and mixing with the pattern
/// posteriors.
pub struct BruteForceMmse {
    model: AdditiveNoiseModel,
    prior: SpikeSlabPrior,
    psi: DMatrix<f64>,
    channels: Channels,
    k: DMatrix<f64>,
    noise: DVector<f64>,
    cache: Option<Vec<Option<Pattern>>>,
}

impl BruteForceMmse {
    pub fn new(model: &AdditiveNoiseModel, prior: &SpikeSlabPrior, psi: &DMatrix<f64>, channels: Channels) -> Result<Self> {
        let m = model.x_dim();
        if m > ENUMERATION_LIMIT {
            return Err(Error::SizeLimit {
                dim: m,
                limit: ENUMERATION_LIMIT,
            });
        }
        check_dictionary(psi, m)?;
        check_prior(prior, m)?;
        let (k, noise) = match channels {
            Channels::Both => {
                let (n, q) = (model.y_dim(), model.z_dim());
                let mut k = DMatrix::zeros(n + q, m);
                k.rows_mut(0, n).copy_from(model.h());
                k.rows_mut(n, q).copy_from(model.g());
                let noise = DVector::from_fn(n + q, |i, _| if i < n { model.sigma_u_sq() } else { model.sigma_v_sq() });
                (k, noise)
            }
            Channels::ZOnly => (model.g().clone(), DVector::from_element(model.z_dim(), model.sigma_v_sq())),
        };
        let mut out = Self {
            model: model.clone(),
            prior: prior.clone(),
            psi: psi.clone(),
            channels,
            k,
            noise,
            cache: None,
        };
        if 1usize << m <= CACHE_LIMIT {
            let patterns = (0..1usize << m).map(|s| out.pattern(s)).collect::<Result<Vec<_>>>()?;
            out.cache = Some(patterns);
        }
        Ok(out)
    }

    pub fn model(&self) -> &AdditiveNoiseModel {
        &self.model
    }

    fn pattern(&self, s: usize) -> Result<Option<Pattern>> {
        let m = self.prior.dim();
        let mut log_prior = 0.0;
        let mut d = DVector::zeros(m);
        for (i, c) in self.prior.coefficients().iter().enumerate() {
            let slab = s >> i & 1 == 1;
            let (pi, var) = if slab { (c.p, c.sigma1_sq) } else { (1.0 - c.p, c.sigma2_sq) };
            if pi <= 0.0 {
                return Ok(None);
            }
            log_prior += pi.ln();
            d[i] = var;
        }
        let cov_x = &self.psi * DMatrix::from_diagonal(&d) * self.psi.transpose();
        let kc = &self.k * &cov_x;
        let mut cov_o = &kc * self.k.transpose();
        for (i, r) in self.noise.iter().enumerate() {
            cov_o[(i, i)] += r;
        }
        let cov_o = crate::linalg::symmetrize(&cov_o);
        let chol = Cholesky::new(cov_o).ok_or_else(|| {
            Error::DegenerateData(format!("observation covariance of pattern {s:#b} is not positive definite"))
        })?;
        let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        let gain = chol.solve(&kc).transpose();
        Ok(Some(Pattern {
            log_prior_norm: log_prior - 0.5 * log_det,
            chol,
            gain,
        }))
    }

    pub fn posterior(&self, y: Option<&DVector<f64>>, z: &DVector<f64>) -> Result<BruteForcePosterior> {
        let obs = match (self.channels, y) {
            (Channels::Both, Some(y)) => {
                if y.len() != self.model.y_dim() || z.len() != self.model.z_dim() {
                    return Err(Error::invalid("observation lengths do not match the model"));
                }
                let mut o = DVector::zeros(y.len() + z.len());
                o.rows_mut(0, y.len()).copy_from(y);
                o.rows_mut(y.len(), z.len()).copy_from(z);
                o
            }
            (Channels::ZOnly, _) => {
                if z.len() != self.model.z_dim() {
                    return Err(Error::invalid("z length does not match the model"));
                }
                z.clone()
            }
            (Channels::Both, None) => return Err(Error::invalid("y is required for the joint posterior")),
        };
        let count = 1usize << self.prior.dim();
        let mut log_w = vec![f64::NEG_INFINITY; count];
        let mut means: Vec<Option<DVector<f64>>> = vec![None; count];
        let mut eval = |s: usize, p: &Pattern| {
            let v = p
                .chol
                .l_dirty()
                .solve_lower_triangular(&obs)
                .expect("Cholesky factor has a positive diagonal");
            log_w[s] = p.log_prior_norm - 0.5 * v.norm_squared();
            means[s] = Some(&p.gain * &obs);
        };
        match &self.cache {
            Some(cache) => cache.iter().enumerate().for_each(|(s, p)| {
                if let Some(p) = p {
                    eval(s, p);
                }
            }),
            None => {
                for s in 0..count {
                    if let Some(p) = self.pattern(s)? {
                        eval(s, &p);
                    }
                }
            }
        }
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        let mut mean = DVector::zeros(self.prior.dim());
        for (p, mu) in probs.iter().zip(&means) {
            if let Some(mu) = mu {
                mean.axpy(*p, mu, 1.0);
            }
        }
        Ok(BruteForcePosterior {
            mean,
            pattern_probabilities: probs,
        })
    }
}

/// One-shot `E[X | Y, Z]` by enumeration.
pub fn brute_force_mmse(
    y: &DVector<f64>,
    z: &DVector<f64>,
    model: &AdditiveNoiseModel,
    prior: &SpikeSlabPrior,
    psi: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    Ok(BruteForceMmse::new(model, prior, psi, Channels::Both)?.posterior(Some(y), z)?.mean)
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::{mmse_denoise, SpikeSlabPrior};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn observe(rng: &mut ChaCha8Rng, model: &AdditiveNoiseModel, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = DVector::from_fn(model.y_dim(), |_, _| StandardNormal.sample(rng));
        let v = DVector::from_fn(model.z_dim(), |_, _| StandardNormal.sample(rng));
        (
            model.h() * x + n * model.sigma_u_sq().sqrt(),
            model.g() * x + v * model.sigma_v_sq().sqrt(),
        )
    }

    #[test]
    fn z_only_enumeration_matches_shrinkage() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 1..=10 {
            let model = random_model(&mut rng, m, m, 0.6);
            let prior = random_prior(&mut rng, m);
            let psi = random_orthonormal(&mut rng, m);
            let oracle = BruteForceMmse::new(&model, &prior, &psi, Channels::ZOnly).unwrap();
            let (w, _) = prior.sample(&mut rng);
            let (_, z) = observe(&mut rng, &model, &(&psi * w));
            let exact = oracle.posterior(None, &z).unwrap().mean;
            let fast = mmse_denoise(&z, &model, &prior, &psi).unwrap();
            assert!((exact - fast).amax() < 1e-8, "m = {m}");
        }
    }

    #[test]
    fn pattern_probabilities_are_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let model = random_model(&mut rng, 5, 6, 1.0);
        let prior = random_prior(&mut rng, 6);
        let psi = random_orthonormal(&mut rng, 6);
        let (w, _) = prior.sample(&mut rng);
        let (y, z) = observe(&mut rng, &model, &(&psi * w));
        let post = BruteForceMmse::new(&model, &prior, &psi, Channels::Both)
            .unwrap()
            .posterior(Some(&y), &z)
            .unwrap();
        assert_eq!(post.pattern_probabilities.len(), 64);
        let total: f64 = post.pattern_probabilities.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_pattern_prior_is_gaussian_conditioning() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = 5;
        let model = random_model(&mut rng, 4, m, 0.9);
        let prior = SpikeSlabPrior::new(vec![1.0; m], (1..=m).map(|i| i as f64).collect(), vec![0.0; m]).unwrap();
        let psi = random_orthonormal(&mut rng, m);
        let (w, _) = prior.sample(&mut rng);
        let (y, z) = observe(&mut rng, &model, &(&psi * w));
        let got = brute_force_mmse(&y, &z, &model, &prior, &psi).unwrap();
        let cov_x = &psi * DMatrix::from_diagonal(&prior.variances()) * psi.transpose();
        let mut k = DMatrix::zeros(4 + m, m);
        k.rows_mut(0, 4).copy_from(model.h());
        k.rows_mut(4, m).copy_from(model.g());
        let mut r = DMatrix::zeros(4 + m, 4 + m);
        for i in 0..4 + m {
            r[(i, i)] = if i < 4 { model.sigma_u_sq() } else { model.sigma_v_sq() };
        }
        let obs = DVector::from_iterator(4 + m, y.iter().chain(z.iter()).copied());
        let wiener = &cov_x * k.transpose() * (&k * &cov_x * k.transpose() + r).try_inverse().unwrap() * obs;
        assert!((got - wiener).amax() < 1e-10);
    }

    #[test]
    fn uninformative_y_reduces_to_denoiser() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let m = 6;
        let model = random_model(&mut rng, m, m, 0.7).with_sigma_u_sq(1e12).unwrap();
        let prior = random_prior(&mut rng, m);
        let psi = random_orthonormal(&mut rng, m);
        let (w, _) = prior.sample(&mut rng);
        let x = &psi * w;
        let (_, z) = observe(&mut rng, &model, &x);
        let y = model.h() * &x;
        let joint = brute_force_mmse(&y, &z, &model, &prior, &psi).unwrap();
        let den = mmse_denoise(&z, &model, &prior, &psi).unwrap();
        assert!((&joint - &den).amax() <= 1e-4 * den.amax());
    }

    #[test]
    fn enumeration_guard() {
        let m = 17;
        let model = AdditiveNoiseModel::new(DMatrix::identity(m, m), DMatrix::identity(m, m), 1.0, 1.0, 1.0).unwrap();
        let prior = SpikeSlabPrior::homogeneous(m, 0.5, 1.0, 0.0).unwrap();
        let err = BruteForceMmse::new(&model, &prior, &DMatrix::identity(m, m), Channels::Both).err().unwrap();
        assert!(matches!(err, Error::SizeLimit { dim: 17, limit: 16 }));
    }
}
