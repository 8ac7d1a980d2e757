//! Side information `Z` with three symbols. Compares the joint linear
//! estimator on `[Y; Z]` with the partially linear estimator that fits one
//! affine map per symbol.

use plmmse::estimator::{conditional_plmmse_discrete, stack_samples, LinearEstimator};
use plmmse::linalg::SampleSet;
use plmmse::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn draw(rng: &mut ChaCha8Rng, n: usize) -> plmmse::Result<(SampleSet, SampleSet, SampleSet)> {
    let (mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let k = rng.random_range(0..3usize);
        // The symbol picks the scale and the sign of X.
        let v: f64 = rng.sample(StandardNormal);
        let xi = [-1.0, 0.2, 3.0][k] * v.abs() + k as f64;
        x.push(xi);
        y.push(xi + 0.7 * rng.sample::<f64, _>(StandardNormal));
        z.push(k as f64);
    }
    Ok((SampleSet::from_scalars(x)?, SampleSet::from_scalars(y)?, SampleSet::from_scalars(z)?))
}

fn main() -> plmmse::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (x, y, z) = draw(&mut rng, 20_000)?;
    let alphabet = vec![vec![0.0], vec![1.0], vec![2.0]];
    let pl = conditional_plmmse_discrete(&x, &y, &z, &alphabet)?;
    let joint = LinearEstimator::fit(&x, &stack_samples(&y, &z)?)?;

    let (x, y, z) = draw(&mut rng, 100_000)?;
    let (mut e_pl, mut e_joint) = (0.0, 0.0);
    for i in 0..x.count() {
        let yi = y.vector(i);
        e_pl += (x.row(i)[0] - pl.estimate(&yi, z.row(i))?[0]).powi(2);
        e_joint += (x.row(i)[0] - joint.estimate(&DVector::from_vec(vec![yi[0], z.row(i)[0]]))[0]).powi(2);
    }
    let n = x.count() as f64;
    println!("joint linear MSE   {:.4}", e_joint / n);
    println!("partially linear   {:.4}", e_pl / n);
    for (k, cell) in pl.cells().iter().enumerate() {
        println!("symbol {k}: gain {:.4}", cell.gain[(0, 0)]);
    }
    Ok(())
}
