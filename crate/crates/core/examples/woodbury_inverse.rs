//! The factor estimate stays invertible with more assets than observations;
//! the sample covariance does not.

use factorcov::{covariance_factor, covariance_sample, fit_factor_model, inverse_factor, inverse_generic, FactorPanel, ReturnPanel};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> factorcov::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (p, k, n) = (300, 3, 60);
    let mut draw = |r, c| DMatrix::<f64>::from_fn(r, c, |_, _| rng.sample(StandardNormal));
    let x = draw(k, n);
    let b = draw(p, k);
    let y = &b * &x + draw(p, n) * 0.5;

    let x = FactorPanel::new(x)?;
    let y = ReturnPanel::new(y)?;
    let fit = fit_factor_model(&x, &y)?;

    let start = std::time::Instant::now();
    let inv = inverse_factor(&fit)?;
    let took = start.elapsed();
    let sigma = covariance_factor(&fit)?;
    let resid = (sigma.matrix() * &inv - DMatrix::identity(p, p)).norm();
    println!("p = {p}, n = {n}: Woodbury inverse in {took:?}, ||S S^-1 - I|| = {resid:.2e}");

    let sample = covariance_sample(&y)?;
    match inverse_generic(&sample) {
        Ok(_) => println!("sample covariance inverted"),
        Err(e) => println!("sample covariance: {e}"),
    }
    Ok(())
}
