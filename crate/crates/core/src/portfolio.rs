//! Closed-form mean-variance portfolios.
//!
//! With `varphi = 1'Σ⁻¹1`, `psi = 1'Σ⁻¹μ` and `phi = μ'Σ⁻¹μ`, the
//! minimum-variance portfolio with full investment and target return `γ` is
//!
//! ```text
//! ξ = [(phi − γ psi) Σ⁻¹1 + (γ varphi − psi) Σ⁻¹μ] / (varphi phi − psi²)
//! ```
//!
//! with variance `(varphi γ² − 2 psi γ + phi) / (varphi phi − psi²)`. Dropping
//! the return constraint gives `Σ⁻¹1 / varphi` with variance `1 / varphi`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::{self, CovarianceEstimate, FactorModelFit};

/// Relative floor on `varphi * phi - psi^2`.
pub const FRONTIER_FLOOR: f64 = 1e-10;

const BUDGET_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortfolioScalars {
    pub varphi: f64,
    pub psi: f64,
    pub phi: f64,
}

impl PortfolioScalars {
    pub fn determinant(&self) -> f64 {
        self.varphi * self.phi - self.psi * self.psi
    }

    fn checked_determinant(&self) -> Result<f64> {
        let det = self.determinant();
        let floor = FRONTIER_FLOOR * (self.varphi * self.phi).abs();
        if !(det > floor) || !det.is_finite() {
            return Err(Error::DegenerateFrontier { determinant: det });
        }
        Ok(det)
    }
}

/// Portfolio weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioWeights {
    weights: DVector<f64>,
    target_return: Option<f64>,
}

impl PortfolioWeights {
    pub fn new(weights: DVector<f64>, target_return: Option<f64>) -> Result<Self> {
        if !weights.iter().all(|w| w.is_finite()) {
            return Err(Error::NonFinite("portfolio weights".into()));
        }
        let total = weights.sum();
        if (total - 1.0).abs() > BUDGET_TOL * weights.len().max(1) as f64 {
            return Err(Error::InvalidConfig(format!("portfolio weights sum to {total}, not 1")));
        }
        Ok(Self {
            weights,
            target_return,
        })
    }

    /// `(1/p, …, 1/p)`.
    pub fn equal(p: usize) -> Self {
        Self {
            weights: DVector::from_element(p, 1.0 / p as f64),
            target_return: None,
        }
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn target_return(&self) -> Option<f64> {
        self.target_return
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Fails on the first negative weight.
    pub fn require_long_only(&self) -> Result<()> {
        match self.weights.iter().enumerate().find(|(_, w)| **w < 0.0) {
            Some((index, &weight)) => Err(Error::ShortPosition { index, weight }),
            None => Ok(()),
        }
    }
}

fn check_inverse_dims(sigma_inv: &DMatrix<f64>, mu: Option<&DVector<f64>>) -> Result<usize> {
    let p = sigma_inv.nrows();
    if !sigma_inv.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "inverse covariance is {}x{}",
            sigma_inv.nrows(),
            sigma_inv.ncols()
        )));
    }
    if let Some(mu) = mu {
        if mu.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "mean has length {}, covariance is {p}x{p}",
                mu.len()
            )));
        }
    }
    Ok(p)
}

pub fn portfolio_scalars(sigma_inv: &DMatrix<f64>, mu: &DVector<f64>) -> Result<PortfolioScalars> {
    let p = check_inverse_dims(sigma_inv, Some(mu))?;
    let inv_one = sigma_inv * DVector::from_element(p, 1.0);
    let inv_mu = sigma_inv * mu;
    Ok(PortfolioScalars {
        varphi: inv_one.sum(),
        psi: inv_mu.sum(),
        phi: mu.dot(&inv_mu),
    })
}

/// Minimum-variance weights with `ξ'1 = 1` and `ξ'μ = gamma`.
pub fn markowitz_weights(sigma_inv: &DMatrix<f64>, mu: &DVector<f64>, gamma: f64) -> Result<PortfolioWeights> {
    let p = check_inverse_dims(sigma_inv, Some(mu))?;
    let s = portfolio_scalars(sigma_inv, mu)?;
    let det = s.checked_determinant()?;
    let inv_one = sigma_inv * DVector::from_element(p, 1.0);
    let inv_mu = sigma_inv * mu;
    let a = (s.phi - gamma * s.psi) / det;
    let b = (gamma * s.varphi - s.psi) / det;
    let weights = inv_one * a + inv_mu * b;
    if !weights.iter().all(|w| w.is_finite()) {
        return Err(Error::NonFinite("portfolio weights".into()));
    }
    Ok(PortfolioWeights {
        weights,
        target_return: Some(gamma),
    })
}

/// `ξ'Σξ`.
pub fn portfolio_variance(sigma: &CovarianceEstimate, xi: &PortfolioWeights) -> Result<f64> {
    quadratic_form(sigma.matrix(), xi.weights())
}

fn quadratic_form(m: &DMatrix<f64>, w: &DVector<f64>) -> Result<f64> {
    if m.nrows() != w.len() || m.ncols() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "weights have length {}, covariance is {}x{}",
            w.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(w.dot(&(m * w)))
}

/// Variance of the Markowitz portfolio from the three scalars alone.
pub fn minimum_variance_closed_form(s: &PortfolioScalars, gamma: f64) -> Result<f64> {
    let det = s.checked_determinant()?;
    Ok((s.varphi * gamma * gamma - 2.0 * s.psi * gamma + s.phi) / det)
}

/// `Σ⁻¹1 / (1'Σ⁻¹1)`.
pub fn global_min_variance_weights(sigma_inv: &DMatrix<f64>) -> Result<PortfolioWeights> {
    let p = check_inverse_dims(sigma_inv, None)?;
    let inv_one = sigma_inv * DVector::from_element(p, 1.0);
    let varphi = inv_one.sum();
    if !(varphi > 0.0) || !varphi.is_finite() {
        return Err(Error::DegenerateInverse { varphi });
    }
    Ok(PortfolioWeights {
        weights: inv_one / varphi,
        target_return: None,
    })
}

/// Source of the `(Σ̂, μ̂)` pair for a plug-in portfolio.
#[derive(Debug, Clone, Copy)]
pub enum PlugIn<'a> {
    /// Factor estimator with the substitution mean `B̂ f̄`; inverse via Woodbury.
    Factor(&'a FactorModelFit),
    /// Any covariance estimate with a matching mean vector; dense inverse.
    Covariance {
        sigma: &'a CovarianceEstimate,
        mean: &'a DVector<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlugInPortfolio {
    pub weights: PortfolioWeights,
    /// `ξ̂'Σ̂ξ̂`.
    pub variance: f64,
    pub scalars: PortfolioScalars,
}

/// Estimated optimal portfolio (or the global minimum-variance portfolio
/// when `gamma` is `None`) and its estimated variance.
pub fn plug_in_portfolio(source: PlugIn<'_>, gamma: Option<f64>) -> Result<PlugInPortfolio> {
    let (sigma, sigma_inv, mean) = match source {
        PlugIn::Factor(fit) => (
            estimators::covariance_factor(fit)?,
            estimators::inverse_factor(fit)?,
            fit.mean.clone(),
        ),
        PlugIn::Covariance { sigma, mean } => (sigma.clone(), estimators::inverse_generic(sigma)?, mean.clone()),
    };
    let scalars = portfolio_scalars(&sigma_inv, &mean)?;
    let weights = match gamma {
        Some(g) => markowitz_weights(&sigma_inv, &mean, g)?,
        None => global_min_variance_weights(&sigma_inv)?,
    };
    let variance = portfolio_variance(&sigma, &weights)?;
    Ok(PlugInPortfolio {
        weights,
        variance,
        scalars,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{fit_factor_model, FactorPanel, Method, ReturnPanel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_spd(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::<f64>::from_fn(p, p, |_, _| rng.sample(StandardNormal));
        &a * a.transpose() + DMatrix::identity(p, p)
    }

    fn random_vec(p: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
        DVector::from_fn(p, |_, _| rng.sample(StandardNormal))
    }

    /// Solves the equality-constrained QP through its full KKT system.
    fn kkt_oracle(sigma: &DMatrix<f64>, mu: &DVector<f64>, gamma: f64) -> DVector<f64> {
        let p = sigma.nrows();
        let mut kkt = DMatrix::zeros(p + 2, p + 2);
        kkt.view_mut((0, 0), (p, p)).copy_from(&(sigma * 2.0));
        for i in 0..p {
            kkt[(i, p)] = 1.0;
            kkt[(p, i)] = 1.0;
            kkt[(i, p + 1)] = mu[i];
            kkt[(p + 1, i)] = mu[i];
        }
        let mut rhs = DVector::zeros(p + 2);
        rhs[p] = 1.0;
        rhs[p + 1] = gamma;
        let sol = kkt.lu().solve(&rhs).unwrap();
        sol.rows(0, p).into_owned()
    }

    #[test]
    fn scalar_fixtures() {
        let s = portfolio_scalars(&DMatrix::identity(2, 2), &DVector::from_vec(vec![1.0, 2.0])).unwrap();
        assert_eq!((s.varphi, s.psi, s.phi), (2.0, 3.0, 5.0));
        let z = portfolio_scalars(&DMatrix::identity(3, 3), &DVector::zeros(3)).unwrap();
        assert_eq!((z.psi, z.phi), (0.0, 0.0));
        assert!(matches!(
            portfolio_scalars(&DMatrix::identity(3, 3), &DVector::zeros(2)),
            Err(Error::DimensionMismatch(_))
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..50 {
            let inv = crate::linalg::sym_inverse(&random_spd(5, &mut rng)).unwrap();
            let s = portfolio_scalars(&inv, &random_vec(5, &mut rng)).unwrap();
            assert!(s.determinant() >= -1e-12);
        }
    }

    #[test]
    fn markowitz_fixture() {
        let mu = DVector::from_vec(vec![1.0, 2.0]);
        let xi = markowitz_weights(&DMatrix::identity(2, 2), &mu, 1.5).unwrap();
        assert!((xi.weights() - DVector::from_vec(vec![0.5, 0.5])).amax() < 1e-15);
        let sigma = CovarianceEstimate::new(DMatrix::identity(2, 2), Method::Oracle).unwrap();
        assert!((portfolio_variance(&sigma, &xi).unwrap() - 0.5).abs() < 1e-15);
        let s = PortfolioScalars {
            varphi: 2.0,
            psi: 3.0,
            phi: 5.0,
        };
        assert!((minimum_variance_closed_form(&s, 1.5).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn markowitz_degenerate_when_mean_is_flat() {
        let mu = DVector::from_vec(vec![1.0, 1.0]);
        for gamma in [0.0, 2.0, -3.0] {
            assert!(matches!(
                markowitz_weights(&DMatrix::identity(2, 2), &mu, gamma),
                Err(Error::DegenerateFrontier { .. })
            ));
        }
    }

    #[test]
    fn markowitz_matches_kkt_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let sigma = random_spd(6, &mut rng);
            let mu = random_vec(6, &mut rng);
            let gamma: f64 = rng.sample(StandardNormal);
            let inv = crate::linalg::sym_inverse(&sigma).unwrap();
            let xi = markowitz_weights(&inv, &mu, gamma).unwrap();
            assert!((xi.weights().sum() - 1.0).abs() < 1e-10);
            assert!((xi.weights().dot(&mu) - gamma).abs() < 1e-10);

            let oracle = kkt_oracle(&sigma, &mu, gamma);
            let cov = CovarianceEstimate::new(sigma.clone(), Method::Oracle).unwrap();
            let v = portfolio_variance(&cov, &xi).unwrap();
            let v_oracle = oracle.dot(&(&sigma * &oracle));
            assert!((v - v_oracle).abs() < 1e-9 * v_oracle);
            let closed = minimum_variance_closed_form(&portfolio_scalars(&inv, &mu).unwrap(), gamma).unwrap();
            assert!((v - closed).abs() < 1e-10 * closed);
        }
    }

    #[test]
    fn closed_form_minimized_at_global_return() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let inv = crate::linalg::sym_inverse(&random_spd(4, &mut rng)).unwrap();
            let s = portfolio_scalars(&inv, &random_vec(4, &mut rng)).unwrap();
            let g_star = s.psi / s.varphi;
            let at_min = minimum_variance_closed_form(&s, g_star).unwrap();
            assert!((at_min - 1.0 / s.varphi).abs() < 1e-10 * at_min);
            for _ in 0..10 {
                let g: f64 = rng.sample::<f64, _>(StandardNormal) * 3.0;
                assert!(minimum_variance_closed_form(&s, g).unwrap() >= 1.0 / s.varphi - 1e-12);
            }
        }
    }

    #[test]
    fn global_min_fixtures() {
        let xi = global_min_variance_weights(&DMatrix::identity(4, 4)).unwrap();
        assert!((xi.weights() - DVector::from_element(4, 0.25)).amax() < 1e-15);

        let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let inv = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.25]));
        let xi = global_min_variance_weights(&inv).unwrap();
        assert!((xi.weights() - DVector::from_vec(vec![0.8, 0.2])).amax() < 1e-15);
        let cov = CovarianceEstimate::new(sigma, Method::Oracle).unwrap();
        assert!((portfolio_variance(&cov, &xi).unwrap() - 0.8).abs() < 1e-15);

        assert!(matches!(
            global_min_variance_weights(&DMatrix::zeros(2, 2)),
            Err(Error::DegenerateInverse { .. })
        ));
    }

    #[test]
    fn global_min_beats_random_feasible_portfolios() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let sigma = random_spd(8, &mut rng);
        let inv = crate::linalg::sym_inverse(&sigma).unwrap();
        let cov = CovarianceEstimate::new(sigma, Method::Oracle).unwrap();
        let best = portfolio_variance(&cov, &global_min_variance_weights(&inv).unwrap()).unwrap();
        for _ in 0..100 {
            let raw = random_vec(8, &mut rng);
            let shifted = &raw + DVector::from_element(8, (1.0 - raw.sum()) / 8.0);
            let probe = PortfolioWeights::new(shifted, None).unwrap();
            assert!(portfolio_variance(&cov, &probe).unwrap() >= best - 1e-12);
        }
    }

    #[test]
    fn homogeneous_in_mean_and_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let inv = crate::linalg::sym_inverse(&random_spd(5, &mut rng)).unwrap();
        let mu = random_vec(5, &mut rng);
        let a = markowitz_weights(&inv, &mu, 0.3).unwrap();
        let b = markowitz_weights(&inv, &(&mu * -2.5), 0.3 * -2.5).unwrap();
        assert!((a.weights() - b.weights()).amax() < 1e-10);
    }

    #[test]
    fn equal_weights_and_long_only() {
        let cov = CovarianceEstimate::new(DMatrix::identity(5, 5), Method::Oracle).unwrap();
        assert!((portfolio_variance(&cov, &PortfolioWeights::equal(5)).unwrap() - 0.2).abs() < 1e-15);
        assert!(PortfolioWeights::equal(5).require_long_only().is_ok());
        let short = PortfolioWeights::new(DVector::from_vec(vec![1.5, -0.5]), None).unwrap();
        assert!(matches!(short.require_long_only(), Err(Error::ShortPosition { index: 1, .. })));
        assert!(PortfolioWeights::new(DVector::from_vec(vec![0.5, 0.4]), None).is_err());
    }

    #[test]
    fn plug_in_single_factor_matches_hand_inverse() {
        // Noiseless single-factor data with one idiosyncratic shock per asset
        // placed so that the residuals are orthogonal to the factor.
        let x = DMatrix::from_row_slice(1, 4, &[1.0, -1.0, 2.0, -2.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 0.5]);
        let e = DMatrix::from_row_slice(3, 4, &[2.0, 2.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let y = &b * &x + &e;
        let fit = fit_factor_model(&FactorPanel::new(x.clone()).unwrap(), &ReturnPanel::new(y).unwrap()).unwrap();
        assert!((&fit.loadings.column(0) - &b).amax() < 1e-12);

        // Σ̂ = s b b' + diag(d) with s the factor variance, d = row means of e².
        let s = 10.0 / 3.0;
        let d = DVector::from_vec(vec![2.5, 0.5, 0.5]);
        let mut inv = DMatrix::from_diagonal(&d.map(|v| 1.0 / v));
        let u = b.component_div(&d);
        let denom = 1.0 / s + b.dot(&u);
        inv -= &u * u.transpose() / denom;
        let hand = global_min_variance_weights(&inv).unwrap();

        let got = plug_in_portfolio(PlugIn::Factor(&fit), None).unwrap();
        assert!((got.weights.weights() - hand.weights()).amax() < 1e-12);
        assert!((got.variance - 1.0 / got.scalars.varphi).abs() < 1e-12 * got.variance);
    }

    #[test]
    fn plug_in_handles_p_greater_than_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let x = DMatrix::from_fn(3, 50, |_, _| rng.sample::<f64, _>(StandardNormal) + 0.1);
        let b = DMatrix::from_fn(100, 3, |_, _| rng.sample::<f64, _>(StandardNormal) + 1.0);
        let y = &b * &x + DMatrix::from_fn(100, 50, |_, _| rng.sample::<f64, _>(StandardNormal));
        let yp = ReturnPanel::new(y).unwrap();
        let fit = fit_factor_model(&FactorPanel::new(x).unwrap(), &yp).unwrap();
        let factor = plug_in_portfolio(PlugIn::Factor(&fit), Some(0.1)).unwrap();
        assert!((factor.weights.weights().sum() - 1.0).abs() < 1e-10);

        let sample = estimators::covariance_sample(&yp).unwrap();
        let mean = estimators::sample_mean(&yp);
        let err = plug_in_portfolio(
            PlugIn::Covariance {
                sigma: &sample,
                mean: &mean,
            },
            Some(0.1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }));
    }
}
