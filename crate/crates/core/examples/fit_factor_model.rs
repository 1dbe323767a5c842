//! Fits a three-factor model to simulated data and compares the factor and
//! sample covariance estimates against the truth.
//!
//! cargo run --example fit_factor_model

use factorcov::losses::loss_report;
use factorcov::simulation::{default_calibration, replication_factors, SimulationConfig};
use factorcov::{covariance_factor, covariance_sample, fit_factor_model, CovarianceEstimate, FactorPanel, Method, ReturnPanel};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> factorcov::Result<()> {
    let (p, n) = (50, 120);
    let cfg = SimulationConfig { n, ..SimulationConfig::default() };
    let x = replication_factors(&cfg, 0)?;
    let cal = default_calibration();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b = DMatrix::from_fn(p, 3, |i, j| cal.mu_b[j] + 0.3 * rng.sample::<f64, _>(StandardNormal) * (i as f64 / p as f64 + 0.5));
    let e = DMatrix::from_fn(p, n, |_, _| 0.6 * rng.sample::<f64, _>(StandardNormal));
    let y = &b * &x + e;

    let truth = &b * &cal.cov_f * b.transpose() + DMatrix::from_diagonal_element(p, p, 0.36);
    let truth = CovarianceEstimate::new(truth, Method::Oracle)?;

    let fit = fit_factor_model(&FactorPanel::new(x)?, &ReturnPanel::new(y.clone())?)?;
    let factor = covariance_factor(&fit)?;
    let sample = covariance_sample(&ReturnPanel::new(y)?)?;

    println!("p = {p}, n = {n}");
    println!("{:<8} {:>10} {:>10} {:>10}", "method", "frobenius", "sigma", "entropy");
    for est in [&factor, &sample] {
        let r = loss_report(est, &truth)?;
        let entropy = r.entropy.map_or("NA".to_string(), |v| format!("{v:.4}"));
        println!("{:<8} {:>10.4} {:>10.4} {:>10}", est.method().as_str(), r.frobenius, r.sigma_norm, entropy);
    }
    Ok(())
}
