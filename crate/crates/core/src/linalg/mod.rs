//! Dense linear algebra primitives shared by every estimator.

mod quadrature;
mod wavelet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use quadrature::GaussianRule;
pub use wavelet::{FilterBank, WaveletLayout};

/// A set of equally sized real vectors stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("sample dimension must be positive"));
        }
        if values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} values do not form a whole number of {dim}-dimensional samples",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("samples must be finite"));
        }
        Ok(Self { dim, values })
    }

    pub fn from_vectors(samples: &[DVector<f64>]) -> Result<Self> {
        let dim = samples
            .first()
            .map(|s| s.len())
            .ok_or_else(|| Error::invalid("sample set must not be empty"))?;
        let mut values = Vec::with_capacity(dim * samples.len());
        for s in samples {
            if s.len() != dim {
                return Err(Error::invalid("samples have inconsistent dimensions"));
            }
            values.extend(s.iter());
        }
        Self::new(dim, values)
    }

    pub fn from_scalars(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        DVector::from_column_slice(self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut mean = DVector::zeros(self.dim);
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean / self.count() as f64
    }
}

/// Unbiased first and second moments of a pair of sample sets.
#[derive(Debug, Clone)]
pub struct EmpiricalMoments {
    pub mean_x: DVector<f64>,
    pub mean_y: DVector<f64>,
    pub cov_xx: DMatrix<f64>,
    pub cov_xy: DMatrix<f64>,
    pub cov_yy: DMatrix<f64>,
}

/// Sample means and covariances (divisor `count - 1`). Auto-covariances are
/// symmetrized.
pub fn empirical_moments(x: &SampleSet, y: &SampleSet) -> Result<EmpiricalMoments> {
    if x.count() != y.count() {
        return Err(Error::invalid(format!(
            "sample counts differ: {} vs {}",
            x.count(),
            y.count()
        )));
    }
    if x.count() < 2 {
        return Err(Error::invalid("at least two samples are required"));
    }
    let mean_x = x.mean();
    let mean_y = y.mean();
    let cov_xx = symmetrize(&cross_covariance_centered(x, &mean_x, x, &mean_x));
    let cov_xy = cross_covariance_centered(x, &mean_x, y, &mean_y);
    let cov_yy = symmetrize(&cross_covariance_centered(y, &mean_y, y, &mean_y));
    Ok(EmpiricalMoments {
        mean_x,
        mean_y,
        cov_xx,
        cov_xy,
        cov_yy,
    })
}

/// Unbiased cross-covariance of two paired sample sets.
pub fn cross_covariance(a: &SampleSet, b: &SampleSet) -> Result<DMatrix<f64>> {
    if a.count() != b.count() || a.count() < 2 {
        return Err(Error::invalid(
            "cross-covariance needs two paired sample sets with at least two samples",
        ));
    }
    Ok(cross_covariance_centered(a, &a.mean(), b, &b.mean()))
}

fn cross_covariance_centered(
    a: &SampleSet,
    mean_a: &DVector<f64>,
    b: &SampleSet,
    mean_b: &DVector<f64>,
) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(a.dim(), b.dim());
    let mut da = vec![0.0; a.dim()];
    for (ra, rb) in a.rows().zip(b.rows()) {
        for (d, (v, m)) in da.iter_mut().zip(ra.iter().zip(mean_a.iter())) {
            *d = v - m;
        }
        for (j, (v, m)) in rb.iter().zip(mean_b.iter()).enumerate() {
            let db = v - m;
            for (i, d) in da.iter().enumerate() {
                acc[(i, j)] += d * db;
            }
        }
    }
    acc / (a.count() as f64 - 1.0)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Moore–Penrose pseudo-inverse.
///
/// Singular values at or below `tol` are treated as zero. `tol == 0` selects
/// `max(rows, cols) * eps * sigma_max`.
///
/// The singular triplets come from the symmetric eigendecomposition of
/// `[[0, A], [Aᵀ, 0]]`, whose eigenpairs are `±σ` with vectors `(u, ±v)/√2`.
pub fn pseudo_inverse(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("pseudo-inverse of a non-finite matrix"));
    }
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(Error::invalid("pseudo-inverse tolerance must be finite and >= 0"));
    }
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(DMatrix::zeros(cols, rows));
    }
    let n = rows + cols;
    let mut jw = DMatrix::zeros(n, n);
    jw.view_mut((0, rows), (rows, cols)).copy_from(m);
    jw.view_mut((rows, 0), (cols, rows)).copy_from(&m.transpose());
    let eig = nalgebra::SymmetricEigen::new(jw);
    let sigma_max = eig.eigenvalues.amax();
    let tol = if tol == 0.0 {
        rows.max(cols) as f64 * f64::EPSILON * sigma_max
    } else {
        tol
    };
    let mut out = DMatrix::zeros(cols, rows);
    for (k, sigma) in eig.eigenvalues.iter().enumerate() {
        if *sigma > tol {
            let vec = eig.eigenvectors.column(k);
            // u vᵀ carries the factor 2 from the 1/√2 normalization.
            out.ger(2.0 / sigma, &vec.rows(rows, cols), &vec.rows(0, rows), 1.0);
        }
    }
    Ok(out)
}

/// Density of `N(mean, variance)` at `value`.
pub fn gaussian_pdf(value: f64, mean: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::invalid(format!("variance must be positive, got {variance}")));
    }
    Ok(gaussian_pdf_unchecked(value, mean, variance))
}

#[inline]
pub(crate) fn gaussian_pdf_unchecked(value: f64, mean: f64, variance: f64) -> f64 {
    let d = value - mean;
    (-0.5 * d * d / variance).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

#[inline]
pub(crate) fn gaussian_log_pdf(value: f64, variance: f64) -> f64 {
    -0.5 * (value * value / variance + (2.0 * std::f64::consts::PI * variance).ln())
}

/// Sylvester-Hadamard matrix scaled to orthonormal columns.
pub fn hadamard_dictionary(order: usize) -> Result<DMatrix<f64>> {
    if order == 0 || !order.is_power_of_two() {
        return Err(Error::invalid(format!("Hadamard order {order} is not a power of two")));
    }
    let scale = 1.0 / (order as f64).sqrt();
    Ok(DMatrix::from_fn(order, order, |i, j| {
        if (i & j).count_ones() % 2 == 0 {
            scale
        } else {
            -scale
        }
    }))
}

/// Orthonormal multi-level Haar transform (forward or inverse).
pub fn haar_transform(signal: &[f64], levels: usize, inverse: bool) -> Result<Vec<f64>> {
    let bank = FilterBank::haar();
    if inverse {
        bank.inverse(signal, levels)
    } else {
        bank.forward(signal, levels)
    }
}

/// Largest deviation of `m^T m` from the identity.
pub fn orthonormality_defect(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    let id = DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
    (gram - id).amax()
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    symmetrize(m).symmetric_eigenvalues().min()
}

/// Square root factor `L` with `L L^T = m` for a symmetric PSD matrix; negative
/// eigenvalues are clipped to zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let mut vecs = eig.eigenvectors.clone();
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        vecs.column_mut(k).scale_mut(lambda.max(0.0).sqrt());
    }
    vecs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    fn penrose_defect(a: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
        let scale = a.amax().max(1.0) * p.amax().max(1.0);
        let e1 = (a * p * a - a).amax() / a.amax().max(1e-300);
        let e2 = (p * a * p - p).amax() / p.amax().max(1e-300);
        let ap = a * p;
        let pa = p * a;
        let e3 = (&ap - ap.transpose()).amax() / scale;
        let e4 = (&pa - pa.transpose()).amax() / scale;
        e1.max(e2).max(e3).max(e4)
    }

    #[test]
    fn pinv_identity_and_rank_deficient_diagonal() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_relative_eq!(pseudo_inverse(&id, 0.0).unwrap(), id, epsilon = 1e-14);
        let d = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]);
        assert_relative_eq!(pseudo_inverse(&d, 0.0).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn pinv_rejects_non_finite() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(pseudo_inverse(&m, 0.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pinv_penrose_axioms_random_4x2() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 4, 2);
        let p = pseudo_inverse(&a, 0.0).unwrap();
        assert!(penrose_defect(&a, &p) < 1e-10);
    }

    #[test]
    fn pinv_exactly_rank_deficient_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let rows = rng.random_range(1..=12);
            let cols = rng.random_range(1..=12);
            let rank = rng.random_range(1..=rows.min(cols));
            let mut s = DMatrix::zeros(rows, cols);
            for k in 0..rank {
                s[(k, k)] = 10f64.powf(rng.random_range(-1.0..1.0));
            }
            let u = random_matrix(&mut rng, rows, rows).qr().q();
            let v = random_matrix(&mut rng, cols, cols).qr().q();
            let a = u * s * v;
            let p = pseudo_inverse(&a, 0.0).unwrap();
            assert!(penrose_defect(&a, &p) < 1e-10, "{rows}x{cols} rank {rank}");
        }
    }

    #[test]
    fn pinv_penrose_axioms_all_ranks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..100 {
            let rows = 1 + trial % 5;
            let cols = 1 + (trial / 5) % 5;
            let rank = trial % (rows.min(cols) + 1);
            let a = if rank == 0 {
                DMatrix::zeros(rows, cols)
            } else {
                random_matrix(&mut rng, rows, rank) * random_matrix(&mut rng, rank, cols)
            };
            let p = pseudo_inverse(&a, 0.0).unwrap();
            if rank == 0 {
                assert_eq!(p.amax(), 0.0);
            } else {
                assert!(penrose_defect(&a, &p) < 1e-10, "trial {trial}");
            }
        }
    }

    #[test]
    fn moments_constant_and_self() {
        let x = SampleSet::new(2, vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0]).unwrap();
        let m = empirical_moments(&x, &x).unwrap();
        assert_eq!(m.cov_xx.amax(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vals: Vec<f64> = (0..60).map(|_| rng.sample(StandardNormal)).collect();
        let x = SampleSet::new(3, vals).unwrap();
        let m = empirical_moments(&x, &x).unwrap();
        assert_relative_eq!(m.cov_xy, m.cov_xx, epsilon = 1e-14);
    }

    #[test]
    fn moments_reject_mismatched_counts() {
        let x = SampleSet::from_scalars(vec![1.0, 2.0, 3.0]).unwrap();
        let y = SampleSet::from_scalars(vec![1.0, 2.0]).unwrap();
        assert!(empirical_moments(&x, &y).is_err());
    }

    fn gaussian_2d_samples(rng: &mut ChaCha8Rng, n: usize) -> (SampleSet, SampleSet) {
        // x ~ N(1, 4); y = 0.5 x + N(-2, 1) => cov_xy = 2, var_y = 2.
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            let x = 1.0 + 2.0 * a;
            xs.push(x);
            ys.push(0.5 * x - 2.0 + b);
        }
        (
            SampleSet::from_scalars(xs).unwrap(),
            SampleSet::from_scalars(ys).unwrap(),
        )
    }

    #[test]
    fn moments_match_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (x, y) = gaussian_2d_samples(&mut rng, 10_000);
        let m = empirical_moments(&x, &y).unwrap();
        assert!((m.mean_x[0] - 1.0).abs() < 0.05);
        assert!((m.mean_y[0] + 1.5).abs() < 0.05 * 1.5);
        assert!((m.cov_xx[(0, 0)] / 4.0 - 1.0).abs() < 0.05);
        assert!((m.cov_xy[(0, 0)] / 2.0 - 1.0).abs() < 0.05);
        assert!((m.cov_yy[(0, 0)] / 2.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn moments_converge_with_count() {
        let mut small_err = 0.0;
        let mut large_err = 0.0;
        for seed in 0..8 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let (x, y) = gaussian_2d_samples(&mut rng, 1_000);
            small_err += (empirical_moments(&x, &y).unwrap().cov_xx[(0, 0)] - 4.0).abs();
            let (x, y) = gaussian_2d_samples(&mut rng, 100_000);
            large_err += (empirical_moments(&x, &y).unwrap().cov_xx[(0, 0)] - 4.0).abs();
        }
        assert!(large_err < small_err);
    }

    #[test]
    fn gaussian_pdf_values() {
        assert_relative_eq!(gaussian_pdf(0.0, 0.0, 1.0).unwrap(), 0.398_942_280_4, epsilon = 1e-10);
        let v = 2.5;
        assert_relative_eq!(
            gaussian_pdf(1.3, 1.3, v).unwrap(),
            1.0 / (2.0 * std::f64::consts::PI * v).sqrt(),
            epsilon = 1e-15
        );
        assert!(gaussian_pdf(0.0, 0.0, 0.0).is_err());
        assert!(gaussian_pdf(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn gaussian_pdf_integrates_to_one() {
        // composite Simpson over [-8 sigma, 8 sigma]
        let (mean, var) = (0.7_f64, 2.3_f64);
        let s = var.sqrt();
        let (a, b, n) = (mean - 8.0 * s, mean + 8.0 * s, 4000);
        let h = (b - a) / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * gaussian_pdf(a + k as f64 * h, mean, var).unwrap();
        }
        assert!((acc * h / 3.0 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn hadamard_small_orders() {
        assert_eq!(hadamard_dictionary(1).unwrap(), DMatrix::from_element(1, 1, 1.0));
        let s = 1.0 / 2f64.sqrt();
        let h2 = DMatrix::from_row_slice(2, 2, &[s, s, s, -s]);
        assert_relative_eq!(hadamard_dictionary(2).unwrap(), h2, epsilon = 1e-15);
        assert!(hadamard_dictionary(6).is_err());
        assert!(hadamard_dictionary(0).is_err());
    }

    #[test]
    fn hadamard_64_is_orthonormal() {
        let h = hadamard_dictionary(64).unwrap();
        assert!(orthonormality_defect(&h) < 1e-12);
        assert!(h.iter().all(|v| (v.abs() - 0.125).abs() < 1e-15));
    }

    #[test]
    fn haar_constant_signal_has_zero_details() {
        let c = haar_transform(&[3.0; 8], 1, false).unwrap();
        assert!(c[4..].iter().all(|d| d.abs() < 1e-15));
        assert!(haar_transform(&[1.0; 6], 2, false).is_err());
    }

    #[test]
    fn haar_round_trip_and_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..64).map(|_| rng.sample(StandardNormal)).collect();
        let c = haar_transform(&x, 4, false).unwrap();
        let back = haar_transform(&c, 4, true).unwrap();
        let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10);
        let e_x: f64 = x.iter().map(|v| v * v).sum();
        let e_c: f64 = c.iter().map(|v| v * v).sum();
        assert!((e_x.sqrt() - e_c.sqrt()).abs() < 1e-10 * e_x.sqrt());
    }

    #[test]
    fn psd_sqrt_reproduces_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_matrix(&mut rng, 4, 3);
        let m = &a * a.transpose();
        let l = psd_sqrt(&m);
        assert_relative_eq!(&l * l.transpose(), m, epsilon = 1e-10);
        assert!(min_eigenvalue(&m) > -1e-10);
    }
}
