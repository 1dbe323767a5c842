//! Covariance estimation with observable factors.
//!
//! Fits `y = B f + ε` by least squares and builds the substitution estimator
//! `Σ̂ = B̂ cov(f) B̂' + Σ̂₀` together with its Woodbury inverse, which stays
//! well defined when the number of assets exceeds the number of
//! observations. Around it sit the loss functions used to compare
//! estimators, Markowitz portfolio formulas, the delta-method covariance of
//! the estimator's CLT, and a seeded Monte Carlo harness comparing the
//! factor and sample covariance estimators.
//!
//! ```
//! use factorcov::estimators::{covariance_factor, fit_factor_model, inverse_factor, FactorPanel, ReturnPanel};
//! use nalgebra::DMatrix;
//!
//! let x = FactorPanel::new(DMatrix::from_row_slice(1, 4, &[1.0, 2.0, 3.0, 4.0])).unwrap();
//! let y = ReturnPanel::new(DMatrix::from_row_slice(2, 4, &[2.1, 3.9, 6.2, 7.8, 0.5, 1.1, 1.4, 2.2])).unwrap();
//! let fit = fit_factor_model(&x, &y).unwrap();
//! let sigma = covariance_factor(&fit).unwrap();
//! let inv = inverse_factor(&fit).unwrap();
//! let eye = sigma.matrix() * inv;
//! assert!((eye[(0, 0)] - 1.0).abs() < 1e-10 && eye[(0, 1)].abs() < 1e-10);
//! ```

pub mod asymptotics;
pub mod cli;
pub mod data_io;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod losses;
pub mod portfolio;
pub mod simulation;

pub use error::{Error, ErrorClass, Result};
pub use estimators::{
    covariance_factor, covariance_sample, fit_factor_model, hat_matrix, inverse_factor, inverse_generic,
    sample_mean, CovarianceEstimate, FactorModelFit, FactorPanel, Method, ReturnPanel,
};
