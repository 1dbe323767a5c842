//! Empirical covariance of the CLT statistic against its analytic limit.

use factorcov::asymptotics::{run_clt_check, CltConfig};

fn main() -> factorcov::Result<()> {
    let cfg = CltConfig { k: 2, p: 20, n: 400, reps: 800, ..CltConfig::default() };
    let report = run_clt_check(&cfg)?;
    println!("analytic G:{}", report.analytic_g);
    println!("empirical:{}", report.empirical_cov);
    println!("max scaled deviation {:.3}", report.max_rel_dev);
    Ok(())
}
