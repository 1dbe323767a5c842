//! vec/vech algebra, the duplication matrix and the asymptotic covariance of
//! `√n vech[p⁻² B'(Σ̂ − Σ)B]` for the factor estimator.
//!
//! Index convention: `vech` stacks the lower triangle column by column,
//! `(1,1), (2,1), …, (d,1), (2,2), …, (d,d)`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{covariance_factor, fit_factor_model, FactorModelFit, FactorPanel, ReturnPanel};
use crate::linalg;
use crate::simulation::sampling::{sample_mvn, standard_normal_matrix};

/// Column-major stacking.
pub fn vec(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(a.as_slice())
}

/// Lower-triangle stacking of a symmetric matrix.
pub fn vech(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    linalg::ensure_symmetric(a, 1e-10)?;
    Ok(vech_unchecked(a))
}

fn vech_unchecked(a: &DMatrix<f64>) -> DVector<f64> {
    let d = a.nrows();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for j in 0..d {
        for i in j..d {
            out.push(a[(i, j)]);
        }
    }
    DVector::from_vec(out)
}

/// Position of `(i, j)` (either order) in `vech` of a `d x d` matrix.
pub fn vech_index(d: usize, i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    c * d - c * (c + 1) / 2 + r
}

/// `(i, j)` with `i >= j` for every `vech` coordinate, in order.
pub fn vech_pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|j| (j..d).map(move |i| (i, j))).collect()
}

/// Duplication matrix `D` of order `d` together with `P_D = (D'D)⁻¹D'`.
#[derive(Debug, Clone, PartialEq)]
pub struct DuplicationMatrix {
    order: usize,
    matrix: DMatrix<f64>,
    pseudo_inverse: DMatrix<f64>,
}

impl DuplicationMatrix {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `d² x d(d+1)/2` 0/1 matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `P_D`, with entries 1 on diagonal positions and ½ on off-diagonal ones.
    pub fn pseudo_inverse(&self) -> &DMatrix<f64> {
        &self.pseudo_inverse
    }
}

pub fn duplication_matrix(d: usize) -> DuplicationMatrix {
    let m = d * (d + 1) / 2;
    let mut dup = DMatrix::zeros(d * d, m);
    let mut pinv = DMatrix::zeros(m, d * d);
    for j in 0..d {
        for i in 0..d {
            let row = j * d + i;
            let col = vech_index(d, i, j);
            dup[(row, col)] = 1.0;
            // D'D is diagonal: 1 for (i,i), 2 for i != j.
            pinv[(col, row)] = if i == j { 1.0 } else { 0.5 };
        }
    }
    DuplicationMatrix {
        order: d,
        matrix: dup,
        pseudo_inverse: pinv,
    }
}

/// Kronecker product `(a_ij B)`.
pub fn kronecker(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            out.view_mut((i * br, j * bc), (br, bc)).copy_from(&(b * a[(i, j)]));
        }
    }
    out
}

/// Central fourth moments `E[(f_i − Ef_i)(f_j − Ef_j)(f_k − Ef_k)(f_l − Ef_l)]`.
pub trait FourthMoments {
    fn fourth(&self, i: usize, j: usize, k: usize, l: usize) -> Option<f64>;
}

impl<F> FourthMoments for F
where
    F: Fn(usize, usize, usize, usize) -> Option<f64>,
{
    fn fourth(&self, i: usize, j: usize, k: usize, l: usize) -> Option<f64> {
        self(i, j, k, l)
    }
}

/// Isserlis moments of a centred Gaussian vector.
#[derive(Debug, Clone)]
pub struct GaussianMoments {
    pub cov: DMatrix<f64>,
}

impl FourthMoments for GaussianMoments {
    fn fourth(&self, i: usize, j: usize, k: usize, l: usize) -> Option<f64> {
        let s = &self.cov;
        let d = s.nrows();
        if i >= d || j >= d || k >= d || l >= d {
            return None;
        }
        Some(s[(i, j)] * s[(k, l)] + s[(i, k)] * s[(j, l)] + s[(i, l)] * s[(j, k)])
    }
}

/// `cov[vech(U)]` for Gaussian factors: `σ_ik σ_jl + σ_il σ_jk`.
pub fn gaussian_h(cov_f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::ensure_symmetric(cov_f, 1e-10)?;
    let pairs = vech_pairs(cov_f.nrows());
    let s = cov_f;
    Ok(DMatrix::from_fn(pairs.len(), pairs.len(), |a, b| {
        let (i, j) = pairs[a];
        let (k, l) = pairs[b];
        s[(i, k)] * s[(j, l)] + s[(i, l)] * s[(j, k)]
    }))
}

/// `cov[vech(U)]` from central fourth moments.
///
/// The covariance of `(f_i − Ef_i)(f_j − Ef_j)` and `(f_k − Ef_k)(f_l − Ef_l)`
/// is `m_ijkl − σ_ij σ_kl`, which equals the fourth cumulant plus
/// `σ_ik σ_jl + σ_il σ_jk`.
pub fn general_h<M: FourthMoments + ?Sized>(moments: &M, cov_f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::ensure_symmetric(cov_f, 1e-10)?;
    let pairs = vech_pairs(cov_f.nrows());
    let m = pairs.len();
    let mut h = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let (i, j) = pairs[a];
            let (k, l) = pairs[b];
            let fourth = moments.fourth(i, j, k, l).ok_or(Error::MissingMoment(i, j, k, l))?;
            let v = fourth - cov_f[(i, j)] * cov_f[(k, l)];
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    Ok(h)
}

/// `G = P_D (A⊗A) D H D' (A⊗A) P_D'`.
pub fn asymptotic_g(a: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = a.nrows();
    let m = k * (k + 1) / 2;
    if !a.is_square() || h.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, H is {}x{} (expected {m}x{m})",
            a.nrows(),
            a.ncols(),
            h.nrows(),
            h.ncols()
        )));
    }
    let dup = duplication_matrix(k);
    let aa = kronecker(a, a);
    let left = dup.pseudo_inverse() * &aa * dup.matrix();
    let g = &left * h * left.transpose();
    Ok(linalg::symmetrize(&g))
}

/// `√n vech(p⁻² B'(Σ̂ − Σ)B)`.
pub fn clt_statistic(
    loadings: &DMatrix<f64>,
    sigma_hat: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    n: usize,
) -> Result<DVector<f64>> {
    let p = loadings.nrows();
    if sigma_hat.shape() != (p, p) || sigma.shape() != (p, p) {
        return Err(Error::DimensionMismatch(format!(
            "loadings have {p} rows, covariances are {}x{} and {}x{}",
            sigma_hat.nrows(),
            sigma_hat.ncols(),
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let inner = loadings.transpose() * (sigma_hat - sigma) * loadings / (p as f64).powi(2);
    Ok(vech_unchecked(&linalg::symmetrize(&inner)) * (n as f64).sqrt())
}

/// Design for a Monte Carlo check of the factor-estimator CLT.
///
/// Loadings have a first column of ones; further columns are standard normal
/// draws fixed by `seed`. Factors are centred Gaussian with covariance
/// `factor_var * I`, idiosyncratic errors are standard normal.
#[derive(Debug, Clone)]
pub struct CltConfig {
    pub k: usize,
    pub p: usize,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub factor_var: f64,
    pub workers: Option<usize>,
}

impl Default for CltConfig {
    fn default() -> Self {
        Self {
            k: 1,
            p: 20,
            n: 400,
            reps: 2000,
            seed: 1,
            factor_var: 10.0,
            workers: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CltCheckReport {
    pub empirical_cov: DMatrix<f64>,
    pub analytic_g: DMatrix<f64>,
    /// `max |E_ab − G_ab| / sqrt(G_aa G_bb)`.
    pub max_rel_dev: f64,
}

const LOADINGS_STREAM: u64 = u64::MAX;

pub fn run_clt_check(cfg: &CltConfig) -> Result<CltCheckReport> {
    if cfg.k == 0 || cfg.k > cfg.p {
        return Err(Error::InvalidConfig(format!("need 1 <= K <= p, got K={} p={}", cfg.k, cfg.p)));
    }
    if cfg.n <= cfg.k {
        return Err(Error::InvalidConfig(format!("need n > K, got n={} K={}", cfg.n, cfg.k)));
    }
    if cfg.reps < 2 {
        return Err(Error::InvalidConfig("need at least 2 replications".into()));
    }
    if !(cfg.factor_var > 0.0) {
        return Err(Error::InvalidConfig("factor variance must be positive".into()));
    }
    let (k, p, n) = (cfg.k, cfg.p, cfg.n);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(LOADINGS_STREAM);
    let mut loadings = standard_normal_matrix(p, k, &mut rng);
    loadings.column_mut(0).fill(1.0);

    let cov_f = DMatrix::identity(k, k) * cfg.factor_var;
    let truth = FactorModelFit::from_parts(loadings.clone(), cov_f.clone(), DVector::from_element(p, 1.0), DVector::zeros(k))?;
    let sigma = covariance_factor(&truth)?.into_matrix();

    let a = loadings.transpose() * &loadings / p as f64;
    let analytic_g = asymptotic_g(&a, &gaussian_h(&cov_f)?)?;

    let one_rep = |rep: usize| -> Result<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(rep as u64);
        let x = sample_mvn(&DVector::zeros(k), &cov_f, n, &mut rng)?;
        let y = &loadings * &x + standard_normal_matrix(p, n, &mut rng);
        let fit = fit_factor_model(&FactorPanel::new(x)?, &ReturnPanel::new(y)?)?;
        clt_statistic(&loadings, covariance_factor(&fit)?.matrix(), &sigma, n)
    };
    let stats: Vec<DVector<f64>> = crate::simulation::with_workers(cfg.workers, || {
        (0..cfg.reps).into_par_iter().map(one_rep).collect::<Result<Vec<_>>>()
    })??;

    let m = analytic_g.nrows();
    let mean = stats.iter().fold(DVector::zeros(m), |acc, s| acc + s) / cfg.reps as f64;
    let mut empirical_cov = DMatrix::zeros(m, m);
    for s in &stats {
        let c = s - &mean;
        empirical_cov += &c * c.transpose();
    }
    empirical_cov /= (cfg.reps - 1) as f64;

    let mut max_rel_dev = 0.0_f64;
    for a in 0..m {
        for b in 0..m {
            let scale = (analytic_g[(a, a)] * analytic_g[(b, b)]).sqrt();
            max_rel_dev = max_rel_dev.max((empirical_cov[(a, b)] - analytic_g[(a, b)]).abs() / scale);
        }
    }
    Ok(CltCheckReport {
        empirical_cov,
        analytic_g,
        max_rel_dev,
    })
}
