//! Random draws used by the simulation design.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::linalg;

/// Smallest acceptance probability the truncated-gamma sampler will attempt.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

/// `rows x cols` matrix of independent standard normals, filled column by column.
pub fn standard_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for v in m.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    m
}

/// A square-root factor `L` with `L L' = cov`: Cholesky when it succeeds,
/// otherwise the eigen-based root with tiny negative eigenvalues clipped.
pub fn psd_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::ensure_symmetric(cov, 1e-10)?;
    if let Some(chol) = cov.clone().cholesky() {
        return Ok(chol.l());
    }
    let eig = linalg::sym_eigen_desc(cov);
    let top = eig.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * top.max(1.0) {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let mut root = eig.vectors.clone();
    for (j, l) in eig.values.iter().enumerate() {
        root.column_mut(j).scale_mut(l.max(0.0).sqrt());
    }
    Ok(root)
}

/// `count` independent draws from `N(mean, cov)`, one per column.
pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    count: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if cov.shape() != (mean.len(), mean.len()) {
        return Err(Error::DimensionMismatch(format!(
            "mean has length {}, covariance is {}x{}",
            mean.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    let root = psd_factor(cov)?;
    let z = standard_normal_matrix(mean.len(), count, rng);
    let mut out = root * z;
    for mut col in out.column_iter_mut() {
        col += mean;
    }
    Ok(out)
}

/// Probability that `G(shape, scale)` is at least `floor`.
pub fn gamma_upper_tail(shape: f64, scale: f64, floor: f64) -> f64 {
    if floor <= 0.0 {
        1.0
    } else {
        gamma_ur(shape, floor / scale)
    }
}

/// `count` draws from `G(shape, scale)` conditioned on `value >= floor`,
/// by rejection.
pub fn sample_truncated_gamma<R: Rng + ?Sized>(
    shape: f64,
    scale: f64,
    floor: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(shape > 0.0 && scale > 0.0) || !shape.is_finite() || !scale.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "gamma shape and scale must be positive, got ({shape}, {scale})"
        )));
    }
    let acceptance = gamma_upper_tail(shape, scale, floor);
    if !(acceptance >= MIN_ACCEPTANCE) {
        return Err(Error::RejectionStall { acceptance });
    }
    let dist = Gamma::new(shape, scale).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v = dist.sample(rng);
        if v >= floor {
            out.push(v);
        }
    }
    Ok(out)
}
