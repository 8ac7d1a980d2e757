use crate::error::{Error, Result};

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

// Symlet of order 4, analysis lowpass.
const SYM4: [f64; 8] = [
    -0.075_765_714_789_273_33,
    -0.029_635_527_645_998_51,
    0.497_618_667_632_015_45,
    0.803_738_751_805_916_1,
    0.297_857_795_605_277_36,
    -0.099_219_543_576_847_22,
    -0.012_603_967_262_037_833,
    0.032_223_100_604_042_7,
];

/// Two-channel orthogonal filter bank applied with periodic extension.
///
/// The highpass filter is the alternating flip `g[n] = (-1)^n h[L-1-n]` of
/// the lowpass `h`, which makes every level an orthonormal map.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl FilterBank {
    pub fn haar() -> Self {
        Self::from_lowpass(vec![SQRT_HALF, SQRT_HALF]).expect("Haar filter is valid")
    }

    pub fn symlet4() -> Self {
        Self::from_lowpass(SYM4.to_vec()).expect("Symlet-4 filter is valid")
    }

    /// Builds a bank from an orthonormal lowpass filter of even length.
    pub fn from_lowpass(lowpass: Vec<f64>) -> Result<Self> {
        let len = lowpass.len();
        if len < 2 || !len.is_multiple_of(2) {
            return Err(Error::invalid("lowpass filter must have even length >= 2"));
        }
        for shift in (0..len).step_by(2) {
            let dot: f64 = (0..len - shift).map(|n| lowpass[n] * lowpass[n + shift]).sum();
            let target = if shift == 0 { 1.0 } else { 0.0 };
            if (dot - target).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "lowpass filter is not orthonormal under even shifts (shift {shift}: {dot:.3e})"
                )));
            }
        }
        let highpass = (0..len)
            .map(|n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[len - 1 - n]
            })
            .collect();
        Ok(Self { lowpass, highpass })
    }

    pub fn forward(&self, signal: &[f64], levels: usize) -> Result<Vec<f64>> {
        WaveletLayout::new(signal.len(), levels)?;
        let mut out = signal.to_vec();
        let mut scratch = vec![0.0; signal.len()];
        let mut n = signal.len();
        for _ in 0..levels {
            let half = n / 2;
            for k in 0..half {
                let (mut a, mut d) = (0.0, 0.0);
                for (j, (h, g)) in self.lowpass.iter().zip(&self.highpass).enumerate() {
                    let x = out[(2 * k + j) % n];
                    a += h * x;
                    d += g * x;
                }
                scratch[k] = a;
                scratch[half + k] = d;
            }
            out[..n].copy_from_slice(&scratch[..n]);
            n = half;
        }
        Ok(out)
    }

    pub fn inverse(&self, coeffs: &[f64], levels: usize) -> Result<Vec<f64>> {
        WaveletLayout::new(coeffs.len(), levels)?;
        let mut out = coeffs.to_vec();
        let mut scratch = vec![0.0; coeffs.len()];
        let mut n = coeffs.len() >> levels;
        for _ in 0..levels {
            let full = 2 * n;
            scratch[..full].iter_mut().for_each(|v| *v = 0.0);
            for k in 0..n {
                let (a, d) = (out[k], out[n + k]);
                for (j, (h, g)) in self.lowpass.iter().zip(&self.highpass).enumerate() {
                    scratch[(2 * k + j) % full] += h * a + g * d;
                }
            }
            out[..full].copy_from_slice(&scratch[..full]);
            n = full;
        }
        Ok(out)
    }
}

impl Default for FilterBank {
    fn default() -> Self {
        Self::haar()
    }
}

/// Band structure of a multi-level transform output:
/// `[approximation | detail L | detail L-1 | ... | detail 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveletLayout {
    len: usize,
    levels: usize,
}

impl WaveletLayout {
    pub fn new(len: usize, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::invalid("at least one wavelet level is required"));
        }
        if levels >= usize::BITS as usize || len == 0 || !len.is_multiple_of(1usize << levels) {
            return Err(Error::invalid(format!(
                "signal length {len} is not divisible by 2^{levels}"
            )));
        }
        Ok(Self { len, levels })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Number of bands: one approximation band plus one per level.
    pub fn band_count(&self) -> usize {
        self.levels + 1
    }

    /// Index range of band `b`; band 0 is the approximation, band `l >= 1` the
    /// detail coefficients at level `l` (1 = finest).
    pub fn band(&self, b: usize) -> std::ops::Range<usize> {
        assert!(b <= self.levels, "band {b} out of range");
        if b == 0 {
            0..self.len >> self.levels
        } else {
            (self.len >> b)..(self.len >> (b - 1))
        }
    }
}
