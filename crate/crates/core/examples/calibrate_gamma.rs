//! Truncated gamma law for idiosyncratic volatilities.

use factorcov::simulation::calibration::truncated_moments;
use factorcov::simulation::{calibrate_truncated_gamma_with, CalibrationMode};

fn main() -> factorcov::Result<()> {
    let (mean, sd, floor) = (0.66081, 0.3275, 0.1950);
    for mode in [CalibrationMode::Approximate, CalibrationMode::Exact] {
        let c = calibrate_truncated_gamma_with(mean, sd, floor, mode)?;
        let (m, m2) = truncated_moments(c.shape, c.scale, floor);
        let s = (m2 - m * m).sqrt();
        println!(
            "{mode:?}: alpha = {:.4}, beta = {:.4} after {} iterations; truncated mean {m:.4}, sd {s:.4}",
            c.shape, c.scale, c.iterations
        );
    }
    Ok(())
}
