//! Discrepancy measures between a covariance estimate and a reference.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::CovarianceEstimate;
use crate::linalg;

/// All losses of one estimate against one reference.
///
/// `entropy` is `None` when the estimate is not positive definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub frobenius: f64,
    pub sigma_norm: f64,
    pub quadratic: f64,
    pub entropy: Option<f64>,
    pub max_eigen_dev: f64,
}

/// `{tr(AA')}^{1/2}`.
pub fn frobenius_norm(a: &DMatrix<f64>) -> f64 {
    a.norm()
}

/// A positive-definite reference matrix with its inverse square root and
/// inverse precomputed, for evaluating several losses against the same `Σ`.
#[derive(Debug, Clone)]
pub struct Reference {
    sigma: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
    inv: DMatrix<f64>,
    spectrum: DVector<f64>,
}

impl Reference {
    pub fn new(sigma: &CovarianceEstimate) -> Result<Self> {
        let eig = linalg::sym_eigen_desc(sigma.matrix());
        let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > linalg::EIGEN_FLOOR) {
            return Err(Error::NotPositiveDefinite {
                what: "reference covariance".into(),
                min_eigenvalue: min,
            });
        }
        Ok(Self {
            sigma: sigma.matrix().clone(),
            inv_sqrt: linalg::spectral_apply(&eig, |l| 1.0 / l.sqrt()),
            inv: linalg::spectral_apply(&eig, |l| 1.0 / l),
            spectrum: eig.values,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    fn check_dim(&self, a: &DMatrix<f64>) -> Result<()> {
        if a.shape() != self.sigma.shape() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, reference is {}x{}",
                a.nrows(),
                a.ncols(),
                self.dim(),
                self.dim()
            )));
        }
        Ok(())
    }

    fn whiten(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        linalg::symmetrize(&(&self.inv_sqrt * a * &self.inv_sqrt))
    }

    /// `p^{-1/2} ‖Σ^{-1/2} A Σ^{-1/2}‖`.
    pub fn sigma_norm(&self, a: &DMatrix<f64>) -> Result<f64> {
        self.check_dim(a)?;
        let p = self.dim() as f64;
        Ok(frobenius_norm(&(&self.inv_sqrt * a * &self.inv_sqrt)) / p.sqrt())
    }

    /// `{tr[(Σ̂Σ⁻¹ − I)²]}^{1/2}`, evaluated on the non-symmetric product.
    pub fn quadratic_loss(&self, shat: &DMatrix<f64>) -> Result<f64> {
        self.check_dim(shat)?;
        let p = self.dim();
        let m = shat * &self.inv - DMatrix::identity(p, p);
        let tr: f64 = (0..p)
            .flat_map(|i| (0..p).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(j, i)])
            .sum();
        Ok(tr.max(0.0).sqrt())
    }

    /// `tr(Σ̂Σ⁻¹) − log|Σ̂Σ⁻¹| − p` via a Cholesky factor of `Σ^{-1/2} Σ̂ Σ^{-1/2}`.
    pub fn entropy_loss(&self, shat: &DMatrix<f64>) -> Result<f64> {
        self.check_dim(shat)?;
        let w = self.whiten(shat);
        let p = self.dim() as f64;
        let trace = w.trace();
        let chol = w.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite {
            what: "estimate".into(),
            min_eigenvalue: linalg::eigenvalues_desc(&w).min(),
        })?;
        let l = chol.l();
        let diag_max = l.diagonal().max();
        let diag_min = l.diagonal().min();
        if !(diag_min * diag_min > linalg::EIGEN_FLOOR * diag_max * diag_max) {
            return Err(Error::NotPositiveDefinite {
                what: "estimate".into(),
                min_eigenvalue: linalg::eigenvalues_desc(&w).min(),
            });
        }
        let logdet: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok((trace - logdet - p).max(0.0))
    }

    /// `max_k |λ_k(Σ̂) − λ_k(Σ)|` with both spectra sorted descending.
    pub fn max_eigen_deviation(&self, shat: &DMatrix<f64>) -> Result<f64> {
        self.check_dim(shat)?;
        let est = linalg::eigenvalues_desc(shat);
        Ok(max_abs_diff(&est, &self.spectrum))
    }

    pub fn report(&self, shat: &CovarianceEstimate) -> Result<LossReport> {
        let s = shat.matrix();
        let diff = s - &self.sigma;
        let entropy = match self.entropy_loss(s) {
            Ok(v) => Some(v),
            Err(Error::NotPositiveDefinite { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(LossReport {
            frobenius: frobenius_norm(&diff),
            sigma_norm: self.sigma_norm(&diff)?,
            quadratic: self.quadratic_loss(s)?,
            entropy,
            max_eigen_dev: self.max_eigen_deviation(s)?,
        })
    }
}

fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn sigma_norm(a: &DMatrix<f64>, sigma: &CovarianceEstimate) -> Result<f64> {
    Reference::new(sigma)?.sigma_norm(a)
}

pub fn quadratic_loss(shat: &CovarianceEstimate, sigma: &CovarianceEstimate) -> Result<f64> {
    Reference::new(sigma)?.quadratic_loss(shat.matrix())
}

pub fn entropy_loss(shat: &CovarianceEstimate, sigma: &CovarianceEstimate) -> Result<f64> {
    Reference::new(sigma)?.entropy_loss(shat.matrix())
}

/// Eigenvalues of a symmetric matrix in decreasing order.
pub fn eigenvalues_desc(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    linalg::ensure_symmetric(a, 1e-10)?;
    Ok(linalg::eigenvalues_desc(a))
}

pub fn max_eigen_deviation(shat: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<f64> {
    if shat.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            shat.nrows(),
            shat.ncols(),
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    Ok(max_abs_diff(&eigenvalues_desc(shat)?, &eigenvalues_desc(sigma)?))
}

/// Full loss report of `shat` against `sigma`.
pub fn loss_report(shat: &CovarianceEstimate, sigma: &CovarianceEstimate) -> Result<LossReport> {
    Reference::new(sigma)?.report(shat)
}
