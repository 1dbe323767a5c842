use factorcov::losses::{loss_report, max_eigen_deviation, Reference};
use factorcov::{CovarianceEstimate, Method};
use nalgebra::DMatrix;

fn main() -> factorcov::Result<()> {
    let sigma = CovarianceEstimate::new(DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]), Method::Oracle)?;
    let shrunk = CovarianceEstimate::new(DMatrix::from_diagonal(&sigma.matrix().diagonal()), Method::Sample)?;
    let singular = CovarianceEstimate::new(DMatrix::from_element(3, 3, 1.0), Method::Sample)?;

    let reference = Reference::new(&sigma)?;
    for (name, est) in [("diagonal", &shrunk), ("rank one", &singular)] {
        let r = reference.report(est)?;
        println!("{name}: {r:?}");
    }
    // Same numbers through the free functions.
    let r = loss_report(&shrunk, &sigma)?;
    println!("max eigenvalue deviation {:.4}", max_eigen_deviation(shrunk.matrix(), sigma.matrix())?);
    println!("quadratic loss {:.4}", r.quadratic);
    Ok(())
}
