//! Observable-factor regression and the two covariance estimators built on it.
//!
//! Given a `K x n` factor panel `X` and a `p x n` panel of excess returns `Y`,
//! the factor estimator is
//!
//! ```text
//! Σ̂ = B̂ ĉov(f) B̂' + diag(n⁻¹ Ê Ê'),   B̂ = Y X'(X X')⁻¹,   Ê = Y − B̂ X
//! ```
//!
//! and the sample estimator is the usual unbiased covariance of the columns
//! of `Y`. The factor estimator stays invertible when `p > n`; its inverse is
//! assembled with the Woodbury identity so that only `K x K` systems are
//! solved.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, RCOND_FLOOR};

/// Residual variances at or below this value make `inverse_factor` fail.
pub const RESIDUAL_VARIANCE_FLOOR: f64 = 1e-12;

/// Relative tolerance for the symmetry check on covariance estimates.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// `K x n` matrix of factor observations; row `i` holds factor `f_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPanel {
    data: DMatrix<f64>,
    labels: Option<Vec<u32>>,
}

/// `p x n` matrix of excess returns; row `i` holds asset `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    data: DMatrix<f64>,
    labels: Option<Vec<u32>>,
}

fn check_panel(data: &DMatrix<f64>, labels: &Option<Vec<u32>>, what: &str) -> Result<()> {
    if data.nrows() == 0 || data.ncols() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be non-empty, got {}x{}",
            data.nrows(),
            data.ncols()
        )));
    }
    linalg::ensure_finite(data, what)?;
    if let Some(l) = labels {
        if l.len() != data.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{what} has {} columns but {} labels",
                data.ncols(),
                l.len()
            )));
        }
    }
    Ok(())
}

macro_rules! panel_impl {
    ($ty:ident, $what:literal) => {
        impl $ty {
            pub fn new(data: DMatrix<f64>) -> Result<Self> {
                check_panel(&data, &None, $what)?;
                Ok(Self { data, labels: None })
            }

            pub fn with_labels(data: DMatrix<f64>, labels: Vec<u32>) -> Result<Self> {
                let labels = Some(labels);
                check_panel(&data, &labels, $what)?;
                Ok(Self { data, labels })
            }

            pub fn data(&self) -> &DMatrix<f64> {
                &self.data
            }

            pub fn labels(&self) -> Option<&[u32]> {
                self.labels.as_deref()
            }

            /// Number of observations.
            pub fn n(&self) -> usize {
                self.data.ncols()
            }
        }
    };
}

panel_impl!(FactorPanel, "factor panel");
panel_impl!(ReturnPanel, "return panel");

impl FactorPanel {
    /// Number of factors.
    pub fn k(&self) -> usize {
        self.data.nrows()
    }
}

impl ReturnPanel {
    /// Number of assets.
    pub fn p(&self) -> usize {
        self.data.nrows()
    }
}

/// Divisor applied to `Ê Ê'` when forming the residual variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualDivisor {
    /// `n`, the plain average of squared residuals.
    #[default]
    N,
    /// `n − K`, correcting for the fitted loadings.
    NMinusK,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    pub residual_divisor: ResidualDivisor,
}

/// Fitted factor model.
///
/// `residuals` is `p x n` for a fit to data. Population models built with
/// [`FactorModelFit::from_parts`] carry a `p x 0` residual matrix and `n = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModelFit {
    pub loadings: DMatrix<f64>,
    pub factor_cov: DMatrix<f64>,
    pub resid_diag: DVector<f64>,
    pub residuals: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub factor_mean: DVector<f64>,
    pub n: usize,
}

impl FactorModelFit {
    /// Assembles a model from known parameters, e.g. the true model of a
    /// simulation design. `mean` is set to `loadings * factor_mean`.
    pub fn from_parts(
        loadings: DMatrix<f64>,
        factor_cov: DMatrix<f64>,
        resid_diag: DVector<f64>,
        factor_mean: DVector<f64>,
    ) -> Result<Self> {
        let (p, k) = loadings.shape();
        if factor_cov.shape() != (k, k) || resid_diag.len() != p || factor_mean.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "loadings {p}x{k}, factor_cov {}x{}, resid_diag {}, factor_mean {}",
                factor_cov.nrows(),
                factor_cov.ncols(),
                resid_diag.len(),
                factor_mean.len()
            )));
        }
        linalg::ensure_symmetric(&factor_cov, 1e-10)?;
        if let Some((index, &value)) = resid_diag.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::ZeroResidualVariance { index, value });
        }
        let mean = &loadings * &factor_mean;
        Ok(Self {
            loadings,
            factor_cov,
            resid_diag,
            residuals: DMatrix::zeros(p, 0),
            mean,
            factor_mean,
            n: 0,
        })
    }

    pub fn p(&self) -> usize {
        self.loadings.nrows()
    }

    pub fn k(&self) -> usize {
        self.loadings.ncols()
    }
}

/// Which estimator produced a covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Factor,
    Sample,
    Oracle,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Factor => "factor",
            Method::Sample => "sample",
            Method::Oracle => "oracle",
        }
    }
}

/// Symmetric `p x p` covariance matrix tagged with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    matrix: DMatrix<f64>,
    method: Method,
}

impl CovarianceEstimate {
    /// Validates finiteness and symmetry, then stores the symmetrized matrix.
    pub fn new(matrix: DMatrix<f64>, method: Method) -> Result<Self> {
        linalg::ensure_finite(&matrix, "covariance matrix")?;
        linalg::ensure_symmetric(&matrix, SYMMETRY_TOL)?;
        Ok(Self {
            matrix: linalg::symmetrize(&matrix),
            method,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// Unbiased covariance of the columns of `data`.
fn centered_cov(data: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.ncols() as f64;
    let row_sums = data.column_sum();
    let gram = data * data.transpose();
    let correction = &row_sums * row_sums.transpose() / (n * (n - 1.0));
    linalg::symmetrize(&(gram / (n - 1.0) - correction))
}

fn factor_gram_cholesky(x: &FactorPanel) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let gram = x.data() * x.data().transpose();
    let rcond = linalg::reciprocal_condition(&linalg::eigenvalues_desc(&gram));
    if !(rcond > RCOND_FLOOR) {
        return Err(Error::SingularFactorGram { rcond });
    }
    gram.cholesky()
        .ok_or(Error::SingularFactorGram { rcond })
}

/// Least-squares fit of `Y = B X + E` with the default options.
pub fn fit_factor_model(x: &FactorPanel, y: &ReturnPanel) -> Result<FactorModelFit> {
    fit_factor_model_with(x, y, FitOptions::default())
}

pub fn fit_factor_model_with(x: &FactorPanel, y: &ReturnPanel, opts: FitOptions) -> Result<FactorModelFit> {
    let (k, n) = x.data().shape();
    if y.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "factor panel has {n} observations, return panel has {}",
            y.n()
        )));
    }
    let needed = k.max(2);
    if n < needed {
        return Err(Error::TooFewObservations { needed, got: n });
    }
    let chol = factor_gram_cholesky(x)?;

    // B̂' = (XX')⁻¹ X Y'
    let xy = x.data() * y.data().transpose();
    let loadings = chol.solve(&xy).transpose();
    let residuals = y.data() - &loadings * x.data();

    let divisor = match opts.residual_divisor {
        ResidualDivisor::N => n as f64,
        ResidualDivisor::NMinusK => {
            if n <= k {
                return Err(Error::TooFewObservations { needed: k + 1, got: n });
            }
            (n - k) as f64
        }
    };
    let resid_diag = DVector::from_iterator(
        residuals.nrows(),
        residuals.row_iter().map(|r| r.norm_squared() / divisor),
    );

    let factor_cov = centered_cov(x.data());
    let factor_mean = x.data().column_mean();
    let mean = &loadings * &factor_mean;

    Ok(FactorModelFit {
        loadings,
        factor_cov,
        resid_diag,
        residuals,
        mean,
        factor_mean,
        n,
    })
}

/// `B̂ ĉov(f) B̂' + diag(resid_diag)`.
pub fn covariance_factor(fit: &FactorModelFit) -> Result<CovarianceEstimate> {
    let low_rank = &fit.loadings * &fit.factor_cov * fit.loadings.transpose();
    let mut m = linalg::symmetrize(&low_rank);
    for (i, d) in fit.resid_diag.iter().enumerate() {
        m[(i, i)] += d;
    }
    let method = if fit.n == 0 { Method::Oracle } else { Method::Factor };
    CovarianceEstimate::new(m, method)
}

/// Unbiased sample covariance of the return panel.
pub fn covariance_sample(y: &ReturnPanel) -> Result<CovarianceEstimate> {
    if y.n() < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: y.n() });
    }
    CovarianceEstimate::new(centered_cov(y.data()), Method::Sample)
}

/// Row means of the return panel.
pub fn sample_mean(y: &ReturnPanel) -> DVector<f64> {
    y.data().column_mean()
}

/// Woodbury-form inverse of the factor covariance:
///
/// `Σ̂₀⁻¹ − Σ̂₀⁻¹ B̂ [ĉov(f)⁻¹ + B̂' Σ̂₀⁻¹ B̂]⁻¹ B̂' Σ̂₀⁻¹`
///
/// Only `K x K` matrices are inverted, so this works for `p > n`.
pub fn inverse_factor(fit: &FactorModelFit) -> Result<DMatrix<f64>> {
    if let Some((index, &value)) = fit
        .resid_diag
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > RESIDUAL_VARIANCE_FLOOR))
    {
        return Err(Error::ZeroResidualVariance { index, value });
    }
    let inv_d = fit.resid_diag.map(|d| 1.0 / d);
    let cov_inv = linalg::sym_inverse(&fit.factor_cov).map_err(|rcond| Error::SingularFactorCov { rcond })?;

    // D⁻¹ B̂, scaling row i by 1/d_i
    let mut scaled = fit.loadings.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= inv_d[i];
    }
    let core = cov_inv + fit.loadings.transpose() * &scaled;
    let core_inv = linalg::sym_inverse(&core).map_err(|rcond| Error::SingularMatrix { rcond })?;

    let mut out = -(&scaled * core_inv * scaled.transpose());
    for (i, d) in inv_d.iter().enumerate() {
        out[(i, i)] += d;
    }
    Ok(linalg::symmetrize(&out))
}

/// Dense inverse of a covariance estimate.
pub fn inverse_generic(s: &CovarianceEstimate) -> Result<DMatrix<f64>> {
    linalg::sym_inverse(s.matrix()).map_err(|rcond| Error::SingularMatrix { rcond })
}

/// Projection `H = X'(XX')⁻¹X` onto the row space of the factor panel.
pub fn hat_matrix(x: &FactorPanel) -> Result<DMatrix<f64>> {
    let (k, n) = x.data().shape();
    if n < k {
        return Err(Error::TooFewObservations { needed: k, got: n });
    }
    let chol = factor_gram_cholesky(x)?;
    let h = x.data().transpose() * chol.solve(x.data());
    Ok(linalg::symmetrize(&h))
}
