//! Fusion of a blurred, lightly corrupted observation `Y = h * X + U` with a
//! sharp but noisy one `Z = X + V`.
//!
//! `Z` is denoised in an orthogonal wavelet basis using a two-component
//! mixture per band whose parameters come from EM. The result `X̂_Z` is then
//! combined with `Y` frequency by frequency:
//!
//! ```text
//! X̂(ω) = ((σ_W² − β) H*(ω) Y(ω) + σ_U² X̂_Z(ω)) / ((σ_W² − β) |H(ω)|² + σ_U²)
//! ```

mod experiment;

pub use experiment::{deblur_experiment, DeblurExperimentConfig, DeblurExperimentResult, DeblurTrial};

use log::warn;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::harness::par_runs;
use crate::linalg::{gaussian_log_pdf, FilterBank, WaveletLayout};
use crate::sparse::ScalarSpikeSlab;

/// Minimum number of coefficients for an EM fit.
pub const MIN_EM_COEFFICIENTS: usize = 16;

/// Per-band mixture `p N(0, σ₁²) + (1 − p) δ₀` of the clean wavelet
/// coefficients, observed in white noise of known variance `σ_V²`.
///
/// Band 0 is the approximation band, band `l >= 1` the detail band at level
/// `l` (1 = finest), matching [`WaveletLayout::band`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletMixtureParams {
    p: Vec<f64>,
    sigma1_sq: Vec<f64>,
    sigma_v_sq: f64,
}

impl WaveletMixtureParams {
    pub fn new(p: Vec<f64>, sigma1_sq: Vec<f64>, sigma_v_sq: f64) -> Result<Self> {
        if p.is_empty() || p.len() != sigma1_sq.len() {
            return Err(Error::invalid("p and sigma1_sq must be non-empty and of equal length"));
        }
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("band probabilities must lie in [0, 1]"));
        }
        if sigma1_sq.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid("band variances must be finite and >= 0"));
        }
        if !(sigma_v_sq >= 0.0 && sigma_v_sq.is_finite()) {
            return Err(Error::invalid(format!("sigma_v_sq must be finite and >= 0, got {sigma_v_sq}")));
        }
        Ok(Self { p, sigma1_sq, sigma_v_sq })
    }

    /// Same parameters in every band.
    pub fn uniform(bands: usize, p: f64, sigma1_sq: f64, sigma_v_sq: f64) -> Result<Self> {
        Self::new(vec![p; bands], vec![sigma1_sq; bands], sigma_v_sq)
    }

    pub fn band_count(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn sigma1_sq(&self) -> &[f64] {
        &self.sigma1_sq
    }

    pub fn sigma_v_sq(&self) -> f64 {
        self.sigma_v_sq
    }

    pub fn band_prior(&self, band: usize) -> ScalarSpikeSlab {
        ScalarSpikeSlab {
            p: self.p[band],
            sigma1_sq: self.sigma1_sq[band],
            sigma2_sq: 0.0,
        }
    }
}

/// Result of [`em_fit_level`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmFit {
    pub p: f64,
    pub sigma1_sq: f64,
    /// Log-likelihood of the initial point followed by one entry per
    /// iteration.
    pub log_likelihood: Vec<f64>,
}

/// Default EM starting point `(0.5, max(mean(c²) − σ_V², σ_V²))`.
pub fn default_em_init(coeffs: &[f64], sigma_v_sq: f64) -> (f64, f64) {
    let second = coeffs.iter().map(|c| c * c).sum::<f64>() / coeffs.len().max(1) as f64;
    (0.5, (second - sigma_v_sq).max(sigma_v_sq))
}

/// EM for `c ~ p N(0, σ₁² + σ_V²) + (1 − p) N(0, σ_V²)` with `σ_V²` known.
pub fn em_fit_level(coeffs: &[f64], sigma_v_sq: f64, iterations: usize, init: Option<(f64, f64)>) -> Result<EmFit> {
    if coeffs.len() < MIN_EM_COEFFICIENTS {
        return Err(Error::InsufficientData(format!(
            "EM needs at least {MIN_EM_COEFFICIENTS} coefficients, got {}",
            coeffs.len()
        )));
    }
    if iterations == 0 {
        return Err(Error::invalid("EM needs at least one iteration"));
    }
    if !(sigma_v_sq > 0.0 && sigma_v_sq.is_finite()) {
        return Err(Error::invalid(format!("sigma_v_sq must be positive and finite, got {sigma_v_sq}")));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("coefficients must be finite"));
    }
    if coeffs.iter().all(|c| *c == 0.0) {
        return Err(Error::DegenerateData("all coefficients are zero".into()));
    }
    let (mut p, mut s) = init.unwrap_or_else(|| default_em_init(coeffs, sigma_v_sq));
    if !(0.0..=1.0).contains(&p) || !(s >= 0.0 && s.is_finite()) {
        return Err(Error::invalid(format!("invalid EM start ({p}, {s})")));
    }
    let mut trace = Vec::with_capacity(iterations + 1);
    trace.push(mixture_log_likelihood(coeffs, p, s, sigma_v_sq));
    for _ in 0..iterations {
        let prior = ScalarSpikeSlab { p, sigma1_sq: s, sigma2_sq: 0.0 };
        let (mut sr, mut src) = (0.0, 0.0);
        for c in coeffs {
            let r = prior.slab_probability(*c, 1.0, sigma_v_sq);
            sr += r;
            src += r * c * c;
        }
        p = sr / coeffs.len() as f64;
        if sr > 0.0 {
            s = (src / sr - sigma_v_sq).max(0.0);
        }
        trace.push(mixture_log_likelihood(coeffs, p, s, sigma_v_sq));
    }
    Ok(EmFit {
        p,
        sigma1_sq: s,
        log_likelihood: trace,
    })
}

fn mixture_log_likelihood(coeffs: &[f64], p: f64, s: f64, sigma_v_sq: f64) -> f64 {
    coeffs
        .iter()
        .map(|c| {
            let a = if p > 0.0 { p.ln() + gaussian_log_pdf(*c, s + sigma_v_sq) } else { f64::NEG_INFINITY };
            let b = if p < 1.0 { (1.0 - p).ln() + gaussian_log_pdf(*c, sigma_v_sq) } else { f64::NEG_INFINITY };
            let m = a.max(b);
            m + ((a - m).exp() + (b - m).exp()).ln()
        })
        .sum()
}

/// Fits every band of a transformed signal independently.
pub fn fit_mixture(coeffs: &[f64], levels: usize, sigma_v_sq: f64, iterations: usize) -> Result<WaveletMixtureParams> {
    let layout = WaveletLayout::new(coeffs.len(), levels)?;
    let fits = par_runs(layout.band_count(), |b| {
        em_fit_level(&coeffs[layout.band(b)], sigma_v_sq, iterations, None)
            .map_err(|e| e.context(format!("EM fit of band {b}")))
    });
    let (mut p, mut s) = (Vec::new(), Vec::new());
    for fit in fits {
        let fit = fit?;
        p.push(fit.p);
        s.push(fit.sigma1_sq);
    }
    WaveletMixtureParams::new(p, s, sigma_v_sq)
}

/// Applies the per-band posterior-mean shrinkage to transform coefficients.
pub fn shrink_coefficients(coeffs: &[f64], levels: usize, params: &WaveletMixtureParams) -> Result<Vec<f64>> {
    let layout = WaveletLayout::new(coeffs.len(), levels)?;
    if params.band_count() != layout.band_count() {
        return Err(Error::invalid(format!(
            "parameters cover {} bands, transform has {}",
            params.band_count(),
            layout.band_count()
        )));
    }
    let mut out = vec![0.0; coeffs.len()];
    for b in 0..layout.band_count() {
        let prior = params.band_prior(b);
        for i in layout.band(b) {
            out[i] = prior.shrink(coeffs[i], 1.0, params.sigma_v_sq);
        }
    }
    Ok(out)
}

/// Wavelet-domain MMSE denoising of `Z`.
pub fn denoise_z(z: &[f64], params: &WaveletMixtureParams, bank: &FilterBank, levels: usize) -> Result<Vec<f64>> {
    let coeffs = bank.forward(z, levels)?;
    bank.inverse(&shrink_coefficients(&coeffs, levels, params)?, levels)
}

/// How the moment estimates pool the wavelet coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentPooling {
    /// One average over every coefficient.
    #[default]
    AllCoefficients,
    /// Per-band averages, then the unweighted mean over bands.
    PerBand,
}

/// `σ̂_W²` and `β̂` from the noisy coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub sigma_w_sq: f64,
    pub beta: f64,
}

impl MomentEstimate {
    /// `σ̂_W² < 0` means the coefficients carry less energy than the noise.
    pub fn is_flagged(&self) -> bool {
        self.sigma_w_sq < 0.0
    }
}

/// `σ̂_W² = mean(z̃²) − σ_V²` and `β̂ = mean(f(z̃)²)`.
pub fn estimate_sigma_w_beta(
    z_coeffs: &[f64],
    levels: usize,
    params: &WaveletMixtureParams,
    pooling: MomentPooling,
) -> Result<MomentEstimate> {
    let shrunk = shrink_coefficients(z_coeffs, levels, params)?;
    let mean_sq = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>() / v.len() as f64;
    let est = match pooling {
        MomentPooling::AllCoefficients => MomentEstimate {
            sigma_w_sq: mean_sq(z_coeffs) - params.sigma_v_sq,
            beta: mean_sq(&shrunk),
        },
        MomentPooling::PerBand => {
            let layout = WaveletLayout::new(z_coeffs.len(), levels)?;
            let bands = layout.band_count() as f64;
            let (mut sw, mut beta) = (0.0, 0.0);
            for b in 0..layout.band_count() {
                let r = layout.band(b);
                sw += mean_sq(&z_coeffs[r.clone()]) - params.sigma_v_sq;
                beta += mean_sq(&shrunk[r]);
            }
            MomentEstimate {
                sigma_w_sq: sw / bands,
                beta: beta / bands,
            }
        }
    };
    if est.is_flagged() {
        warn!("estimated signal variance {:.4e} is negative", est.sigma_w_sq);
    }
    Ok(est)
}

/// Inputs of the frequency-domain fusion filter.
#[derive(Debug, Clone, PartialEq)]
pub struct DeblurFilterSpec {
    /// Blur spectrum on the unnormalized DFT grid.
    pub h_freq: Vec<Complex64>,
    pub sigma_u_sq: f64,
    pub sigma_w_sq_hat: f64,
    pub beta_hat: f64,
    /// Floor of `σ̂_W² − β̂` relative to `|σ̂_W²|`.
    pub floor_ratio: f64,
}

impl DeblurFilterSpec {
    pub const DEFAULT_FLOOR_RATIO: f64 = 1e-6;

    pub fn new(h_freq: Vec<Complex64>, sigma_u_sq: f64, moments: MomentEstimate) -> Self {
        Self {
            h_freq,
            sigma_u_sq,
            sigma_w_sq_hat: moments.sigma_w_sq,
            beta_hat: moments.beta,
            floor_ratio: Self::DEFAULT_FLOOR_RATIO,
        }
    }

    /// `σ̂_W² − β̂`, clamped to the floor; the flag reports clamping.
    pub fn residual_variance(&self) -> (f64, bool) {
        let gap = self.sigma_w_sq_hat - self.beta_hat;
        let floor = self.floor_ratio * self.sigma_w_sq_hat.abs();
        if gap > 0.0 && gap >= floor {
            (gap, false)
        } else {
            (floor, true)
        }
    }

    /// `A(ω) = (σ_W² − β) H*(ω) / ((σ_W² − β) |H(ω)|² + σ_U²)`.
    pub fn gain(&self) -> Result<Vec<Complex64>> {
        let (d, _) = self.residual_variance();
        self.h_freq
            .iter()
            .map(|h| {
                let den = d * h.norm_sqr() + self.sigma_u_sq;
                if den > 0.0 {
                    Ok(h.conj() * (d / den))
                } else {
                    Err(Error::InvalidConfiguration("fusion filter denominator vanishes".into()))
                }
            })
            .collect()
    }
}

fn check_spectrum_input(what: &str, len: usize, n: usize) -> Result<()> {
    if len != n {
        return Err(Error::invalid(format!("{what} has length {len}, spectrum has {n}")));
    }
    if n == 0 {
        return Err(Error::invalid("empty signal"));
    }
    Ok(())
}

pub(crate) fn fft(signal: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = signal.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Inverse DFT with `1/N` scaling; fails if the result is not real.
pub(crate) fn ifft_real(mut spectrum: Vec<Complex64>) -> Result<Vec<f64>> {
    let n = spectrum.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    let scale = 1.0 / n as f64;
    let re_max = spectrum.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let im_max = spectrum.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if im_max > 1e-9 * re_max.max(f64::MIN_POSITIVE) && im_max * scale > 1e-300 {
        return Err(Error::invalid(format!(
            "spectrum is not Hermitian (imaginary residual {:.3e} relative)",
            im_max / re_max.max(f64::MIN_POSITIVE)
        )));
    }
    Ok(spectrum.iter().map(|c| c.re * scale).collect())
}

/// PLMMSE fusion of `Y` with the denoised `X̂_Z` in the frequency domain.
pub fn fuse_frequency(y: &[f64], x_hat_z: &[f64], spec: &DeblurFilterSpec) -> Result<Vec<f64>> {
    let n = spec.h_freq.len();
    check_spectrum_input("y", y.len(), n)?;
    check_spectrum_input("x_hat_z", x_hat_z.len(), n)?;
    let (d, clamped) = spec.residual_variance();
    if clamped {
        warn!(
            "sigma_w^2 - beta = {:.4e} clamped to {:.4e}",
            spec.sigma_w_sq_hat - spec.beta_hat,
            d
        );
    }
    let (yf, xf) = (fft(y), fft(x_hat_z));
    let mut out = Vec::with_capacity(n);
    for ((h, yw), xw) in spec.h_freq.iter().zip(yf).zip(xf) {
        let den = d * h.norm_sqr() + spec.sigma_u_sq;
        if !(den > 0.0) {
            return Err(Error::InvalidConfiguration("fusion filter denominator vanishes".into()));
        }
        out.push((h.conj() * yw * d + xw * spec.sigma_u_sq) / den);
    }
    ifft_real(out)
}

/// Wiener deconvolution of `Y` alone with signal variance `σ_W²`.
pub fn wiener_deblur(y: &[f64], h_freq: &[Complex64], sigma_w_sq: f64, sigma_u_sq: f64) -> Result<Vec<f64>> {
    check_spectrum_input("y", y.len(), h_freq.len())?;
    if !(sigma_w_sq >= 0.0) || !(sigma_u_sq >= 0.0) {
        return Err(Error::invalid("variances must be nonnegative"));
    }
    let yf = fft(y);
    let mut out = Vec::with_capacity(y.len());
    for (h, yw) in h_freq.iter().zip(yf) {
        let den = sigma_w_sq * h.norm_sqr() + sigma_u_sq;
        if !(den > 0.0) {
            return Err(Error::InvalidConfiguration("Wiener filter denominator vanishes".into()));
        }
        out.push(h.conj() * yw * (sigma_w_sq / den));
    }
    ifft_real(out)
}

/// Spectrum of a unit-sum Gaussian kernel of width `sigma` samples on a
/// circle of `n` samples.
pub fn gaussian_blur_spectrum(n: usize, sigma: f64) -> Result<Vec<Complex64>> {
    if n == 0 || !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("blur needs n > 0 and a positive width"));
    }
    let kernel: Vec<f64> = (0..n)
        .map(|i| {
            let d = i.min(n - i) as f64;
            (-0.5 * (d / sigma).powi(2)).exp()
        })
        .collect();
    let total: f64 = kernel.iter().sum();
    Ok(fft(&kernel.iter().map(|k| k / total).collect::<Vec<_>>()))
}

/// Circular convolution `h * x` given the spectrum of `h`.
pub fn circular_convolve(x: &[f64], h_freq: &[Complex64]) -> Result<Vec<f64>> {
    check_spectrum_input("x", x.len(), h_freq.len())?;
    ifft_real(fft(x).iter().zip(h_freq).map(|(a, b)| a * b).collect())
}

/// End-to-end estimator for a `(Y, Z)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DeblurPipeline {
    pub bank: FilterBank,
    pub levels: usize,
    pub h_freq: Vec<Complex64>,
    pub sigma_u_sq: f64,
    pub sigma_v_sq: f64,
    pub em_iterations: usize,
    pub pooling: MomentPooling,
    pub floor_ratio: f64,
}

/// Intermediate and final estimates of [`DeblurPipeline::run`].
#[derive(Debug, Clone, PartialEq)]
pub struct DeblurOutput {
    pub params: WaveletMixtureParams,
    pub moments: MomentEstimate,
    pub x_hat_z: Vec<f64>,
    pub fused: Vec<f64>,
    /// `σ̂_W² − β̂` was clamped to the floor.
    pub clamped: bool,
}

impl DeblurPipeline {
    pub fn new(h_freq: Vec<Complex64>, sigma_u_sq: f64, sigma_v_sq: f64, levels: usize) -> Self {
        Self {
            bank: FilterBank::haar(),
            levels,
            h_freq,
            sigma_u_sq,
            sigma_v_sq,
            em_iterations: 10,
            pooling: MomentPooling::AllCoefficients,
            floor_ratio: DeblurFilterSpec::DEFAULT_FLOOR_RATIO,
        }
    }

    pub fn run(&self, y: &[f64], z: &[f64]) -> Result<DeblurOutput> {
        check_spectrum_input("z", z.len(), self.h_freq.len())?;
        let coeffs = self.bank.forward(z, self.levels)?;
        let params = fit_mixture(&coeffs, self.levels, self.sigma_v_sq, self.em_iterations)?;
        let shrunk = shrink_coefficients(&coeffs, self.levels, &params)?;
        let x_hat_z = self.bank.inverse(&shrunk, self.levels)?;
        let moments = estimate_sigma_w_beta(&coeffs, self.levels, &params, self.pooling)?;
        let spec = DeblurFilterSpec {
            floor_ratio: self.floor_ratio,
            ..DeblurFilterSpec::new(self.h_freq.clone(), self.sigma_u_sq, moments)
        };
        let fused = fuse_frequency(y, &x_hat_z, &spec)?;
        Ok(DeblurOutput {
            params,
            moments,
            x_hat_z,
            fused,
            clamped: spec.residual_variance().1,
        })
    }
}
