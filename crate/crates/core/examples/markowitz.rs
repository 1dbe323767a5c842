//! Efficient frontier from plug-in estimates.

use factorcov::portfolio::{
    global_min_variance_weights, markowitz_weights, minimum_variance_closed_form, portfolio_scalars, portfolio_variance,
};
use factorcov::{CovarianceEstimate, Method};
use nalgebra::{DMatrix, DVector};

fn main() -> factorcov::Result<()> {
    let sigma = DMatrix::from_row_slice(3, 3, &[0.04, 0.006, 0.002, 0.006, 0.09, 0.009, 0.002, 0.009, 0.0225]);
    let mu = DVector::from_vec(vec![0.06, 0.10, 0.04]);
    let inv = sigma.clone().try_inverse().expect("positive definite");
    let est = CovarianceEstimate::new(sigma, Method::Oracle)?;

    let s = portfolio_scalars(&inv, &mu)?;
    println!("varphi = {:.4}, psi = {:.4}, phi = {:.4}", s.varphi, s.psi, s.phi);

    let gmv = global_min_variance_weights(&inv)?;
    println!("global minimum: weights {:.4?}, variance {:.6}", gmv.weights().as_slice(), 1.0 / s.varphi);

    println!("{:>8} {:>10} {:>10}", "target", "variance", "closed");
    for gamma in [0.05, 0.06, 0.07, 0.08, 0.09] {
        let w = markowitz_weights(&inv, &mu, gamma)?;
        let v = portfolio_variance(&est, &w)?;
        println!("{gamma:>8.3} {v:>10.6} {:>10.6}", minimum_variance_closed_form(&s, gamma)?);
    }
    Ok(())
}
