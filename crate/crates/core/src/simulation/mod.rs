//! Monte Carlo comparison of the factor and sample covariance estimators.
//!
//! Each replication draws one `K x n` factor sample, then for every `p` in the
//! grid draws loadings, truncated-gamma idiosyncratic volatilities and
//! Gaussian errors, forms `Y = B X + E`, fits both estimators and records
//! their losses against the true covariance. Randomness is keyed on
//! `(seed, replication, p index)` so results do not depend on scheduling.

pub mod calibration;
pub mod config;
pub mod sampling;
pub mod tables;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    covariance_factor, covariance_sample, fit_factor_model, inverse_factor, inverse_generic, sample_mean,
    CovarianceEstimate, FactorModelFit, FactorPanel, Method, ReturnPanel,
};
use crate::losses::{frobenius_norm, Reference};
use crate::portfolio::{
    global_min_variance_weights, markowitz_weights, minimum_variance_closed_form, portfolio_scalars,
    portfolio_variance, PortfolioWeights,
};

pub use calibration::{calibrate_truncated_gamma, calibrate_truncated_gamma_with, CalibrationMode, GammaCalibration};
pub use sampling::{sample_mvn, sample_truncated_gamma};
pub use tables::emit_figure_tables;

/// Parameters of the simulation design, taken from a three-factor fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationParams {
    pub mu_f: DVector<f64>,
    pub cov_f: DMatrix<f64>,
    pub mu_b: DVector<f64>,
    pub cov_b: DMatrix<f64>,
    pub gamma_shape: f64,
    pub gamma_scale: f64,
    pub sd_floor: f64,
    pub target_mean: f64,
    pub target_sd: f64,
}

/// Factor and loading moments of the Fama-French fit to 30 industry
/// portfolios (daily, May 2002 to August 2005) and the matching
/// truncated-gamma volatility law.
pub fn default_calibration() -> CalibrationParams {
    CalibrationParams {
        mu_f: DVector::from_vec(vec![0.023558, 0.012989, 0.020714]),
        cov_f: DMatrix::from_row_slice(
            3,
            3,
            &[
                1.2507, -0.034999, -0.20419, //
                -0.034999, 0.31564, -0.0022526, //
                -0.20419, -0.0022526, 0.19303,
            ],
        ),
        mu_b: DVector::from_vec(vec![0.78282, 0.51803, 0.41003]),
        cov_b: DMatrix::from_row_slice(
            3,
            3,
            &[
                0.029145, 0.023873, 0.010184, //
                0.023873, 0.053951, -0.006967, //
                0.010184, -0.006967, 0.086856,
            ],
        ),
        gamma_shape: 3.3586,
        gamma_scale: 0.1876,
        sd_floor: 0.1950,
        target_mean: 0.66081,
        target_sd: 0.3275,
    }
}

impl CalibrationParams {
    pub fn k(&self) -> usize {
        self.mu_f.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if self.cov_f.shape() != (k, k) || self.mu_b.len() != k || self.cov_b.shape() != (k, k) {
            return Err(Error::InvalidConfig(format!(
                "calibration shapes disagree: mu_f {k}, cov_f {}x{}, mu_b {}, cov_b {}x{}",
                self.cov_f.nrows(),
                self.cov_f.ncols(),
                self.mu_b.len(),
                self.cov_b.nrows(),
                self.cov_b.ncols()
            )));
        }
        for (name, m) in [("cov_f", &self.cov_f), ("cov_b", &self.cov_b)] {
            sampling::psd_factor(m).map_err(|e| Error::InvalidConfig(format!("{name}: {e}")))?;
        }
        if !(self.gamma_shape > 0.0 && self.gamma_scale > 0.0) {
            return Err(Error::InvalidConfig("gamma shape and scale must be positive".into()));
        }
        if !(self.sd_floor > 0.0) {
            return Err(Error::InvalidConfig("sd_floor must be positive".into()));
        }
        Ok(())
    }
}

/// Quantities recorded per replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Frobenius,
    SigmaNorm,
    Entropy,
    InverseFrobenius,
    OptimalVariance,
    GlobalMinVariance,
    EqualWeightVariance,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Frobenius,
        Metric::SigmaNorm,
        Metric::Entropy,
        Metric::InverseFrobenius,
        Metric::OptimalVariance,
        Metric::GlobalMinVariance,
        Metric::EqualWeightVariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Frobenius => "frobenius",
            Metric::SigmaNorm => "sigma_norm",
            Metric::Entropy => "entropy",
            Metric::InverseFrobenius => "inverse_frobenius",
            Metric::OptimalVariance => "optimal_variance",
            Metric::GlobalMinVariance => "global_min_variance",
            Metric::EqualWeightVariance => "equal_weight_variance",
        }
    }

    /// Variance metrics store signed estimation errors and report an MSE;
    /// the others store non-negative losses.
    pub fn is_variance_error(self) -> bool {
        matches!(
            self,
            Metric::OptimalVariance | Metric::GlobalMinVariance | Metric::EqualWeightVariance
        )
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric {s:?}")))
    }
}

pub const METHODS: [Method; 2] = [Method::Factor, Method::Sample];

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub n: usize,
    pub p_grid: Vec<usize>,
    pub k: usize,
    pub replications: usize,
    pub gamma_target: f64,
    pub seed: u64,
    pub calibration: CalibrationParams,
    pub metrics: BTreeSet<Metric>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n: 756,
            p_grid: (16..=996).step_by(20).collect(),
            k: 3,
            replications: 500,
            gamma_target: 0.10,
            seed: 1,
            calibration: default_calibration(),
            metrics: Metric::ALL.into_iter().collect(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n < self.k.max(2) {
            return Err(Error::InvalidConfig(format!(
                "need n >= max(K, 2), got n={} K={}",
                self.n, self.k
            )));
        }
        if self.p_grid.is_empty() || self.p_grid[0] == 0 {
            return Err(Error::InvalidConfig("p grid must be non-empty and positive".into()));
        }
        if self.p_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("p grid must be strictly ascending".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if !self.gamma_target.is_finite() {
            return Err(Error::InvalidConfig("gamma must be finite".into()));
        }
        if self.calibration.k() != self.k {
            return Err(Error::InvalidConfig(format!(
                "K={} but the calibration describes {} factors",
                self.k,
                self.calibration.k()
            )));
        }
        self.calibration.validate()
    }
}

/// One replication at one dimension. `None` marks an undefined value, e.g.
/// the entropy loss of a singular sample covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub p: usize,
    pub values: BTreeMap<(Metric, Method), Option<f64>>,
}

impl ReplicationRecord {
    pub fn get(&self, metric: Metric, method: Method) -> Option<f64> {
        self.values.get(&(metric, method)).copied().flatten()
    }
}

/// Per-cell summary over replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    /// Replications with a defined value.
    pub count: usize,
    /// Replications where the value was undefined.
    pub excluded: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation (divisor `count − 1`).
    pub sd: Option<f64>,
    /// Mean squared error, for variance-error metrics.
    pub mse: Option<f64>,
}

impl Aggregate {
    pub fn from_values(values: &[Option<f64>], with_mse: bool) -> Self {
        let defined: Vec<f64> = values.iter().flatten().copied().collect();
        let count = defined.len();
        let excluded = values.len() - count;
        if count == 0 {
            return Self {
                count,
                excluded,
                mean: None,
                sd: None,
                mse: None,
            };
        }
        let mean = defined.iter().sum::<f64>() / count as f64;
        let sd = (count > 1)
            .then(|| (defined.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt());
        let mse = with_mse.then(|| defined.iter().map(|v| v * v).sum::<f64>() / count as f64);
        Self {
            count,
            excluded,
            mean: Some(mean),
            sd,
            mse,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub config: SimulationConfig,
    pub cells: BTreeMap<(usize, Metric, Method), Aggregate>,
    /// Replication-level records ordered by `(p index, replication)`, when kept.
    pub raw: Option<Vec<ReplicationRecord>>,
}

impl SimulationResult {
    pub fn get(&self, p: usize, metric: Metric, method: Method) -> Option<&Aggregate> {
        self.cells.get(&(p, metric, method))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExecOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    /// Print one line per completed `p` to standard error.
    pub progress: bool,
    pub keep_raw: bool,
}

/// Runs `f` inside a dedicated pool of `workers` threads, or directly on the
/// global pool when `workers` is `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

const FACTOR_STREAM: u64 = 0;

fn stream_rng(seed: u64, rep: usize, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((rep as u64) << 32) | tag);
    rng
}

/// Factor sample for replication `rep`, shared by every `p` in the grid.
pub fn replication_factors(config: &SimulationConfig, rep: usize) -> Result<DMatrix<f64>> {
    let mut rng = stream_rng(config.seed, rep, FACTOR_STREAM);
    sample_mvn(&config.calibration.mu_f, &config.calibration.cov_f, config.n, &mut rng)
}

/// One replication with freshly drawn factors.
pub fn run_replication(config: &SimulationConfig, p: usize, rng: &mut ChaCha8Rng) -> Result<ReplicationRecord> {
    let factors = sample_mvn(&config.calibration.mu_f, &config.calibration.cov_f, config.n, rng)?;
    run_replication_with_factors(config, &factors, p, rng)
}

/// One replication on a given `K x n` factor sample.
pub fn run_replication_with_factors(
    config: &SimulationConfig,
    factors: &DMatrix<f64>,
    p: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ReplicationRecord> {
    let design = draw_design(config, factors, p, rng, false)?;
    evaluate(config, &design)
}

/// Everything a replication draws, plus the implied truth.
pub(crate) struct Design {
    pub factors: DMatrix<f64>,
    pub returns: DMatrix<f64>,
    pub truth: FactorModelFit,
}

pub(crate) fn draw_design(
    config: &SimulationConfig,
    factors: &DMatrix<f64>,
    p: usize,
    rng: &mut ChaCha8Rng,
    zero_noise: bool,
) -> Result<Design> {
    let cal = &config.calibration;
    if factors.shape() != (config.k, config.n) {
        return Err(Error::DimensionMismatch(format!(
            "factor sample is {}x{}, expected {}x{}",
            factors.nrows(),
            factors.ncols(),
            config.k,
            config.n
        )));
    }
    let loadings = sample_mvn(&cal.mu_b, &cal.cov_b, p, rng)?.transpose();
    let sds = sample_truncated_gamma(cal.gamma_shape, cal.gamma_scale, cal.sd_floor, p, rng)?;
    let mut returns = &loadings * factors;
    if !zero_noise {
        let mut noise = sampling::standard_normal_matrix(p, config.n, rng);
        for (i, mut row) in noise.row_iter_mut().enumerate() {
            row *= sds[i];
        }
        returns += noise;
    }
    let resid_var = DVector::from_iterator(p, sds.iter().map(|s| s * s));
    let truth = FactorModelFit::from_parts(loadings, cal.cov_f.clone(), resid_var, cal.mu_f.clone())?;
    Ok(Design {
        factors: factors.clone(),
        returns,
        truth,
    })
}

fn evaluate(config: &SimulationConfig, design: &Design) -> Result<ReplicationRecord> {
    let metrics = &config.metrics;
    let wants = |m: Metric| metrics.contains(&m);
    let p = design.truth.p();
    let n = config.n;

    let sigma = covariance_factor(&design.truth)?;
    let mu = &design.truth.mean;

    let x = FactorPanel::new(design.factors.clone())?;
    let y = ReturnPanel::new(design.returns.clone())?;
    let fit = fit_factor_model(&x, &y)?;
    let estimates = [
        (Method::Factor, covariance_factor(&fit)?, fit.mean.clone()),
        (Method::Sample, covariance_sample(&y)?, sample_mean(&y)),
    ];
    let sample_full_rank = p < n;

    let needs_reference = wants(Metric::SigmaNorm) || wants(Metric::Entropy);
    let reference = if needs_reference { Some(Reference::new(&sigma)?) } else { None };

    let needs_inverse = wants(Metric::InverseFrobenius) || wants(Metric::OptimalVariance) || wants(Metric::GlobalMinVariance);
    let true_inv = if needs_inverse { Some(inverse_factor(&design.truth)?) } else { None };
    let true_scalars = match &true_inv {
        Some(inv) => Some(portfolio_scalars(inv, mu)?),
        None => None,
    };

    let mut values = BTreeMap::new();
    for (method, est, mean) in &estimates {
        let method = *method;
        let diff = est.matrix() - sigma.matrix();
        let mut put = |m: Metric, v: Option<f64>| {
            if wants(m) {
                values.insert((m, method), v);
            }
        };
        put(Metric::Frobenius, Some(frobenius_norm(&diff)));
        if let Some(r) = &reference {
            put(Metric::SigmaNorm, Some(r.sigma_norm(&diff)?));
            let entropy = if method == Method::Sample && !sample_full_rank {
                None
            } else {
                r.entropy_loss(est.matrix()).ok()
            };
            put(Metric::Entropy, entropy);
        }

        let ew = PortfolioWeights::equal(p);
        let ew_err = portfolio_variance(est, &ew)? - portfolio_variance(&sigma, &ew)?;
        put(Metric::EqualWeightVariance, Some(ew_err));

        if let (Some(t_inv), Some(t_scalars)) = (&true_inv, &true_scalars) {
            let est_inv = match method {
                Method::Factor => inverse_factor(&fit).ok(),
                _ if sample_full_rank => inverse_generic(est).ok(),
                _ => None,
            };
            let (inv_err, opt_err, gmv_err) = match &est_inv {
                Some(inv) => {
                    let inv_err = frobenius_norm(&(inv - t_inv));
                    let opt = estimated_optimal_variance(est, inv, mean, config.gamma_target)
                        .zip(minimum_variance_closed_form(t_scalars, config.gamma_target).ok())
                        .map(|(e, t)| e - t);
                    let gmv = global_min_variance_weights(inv)
                        .and_then(|w| portfolio_variance(est, &w))
                        .ok()
                        .map(|e| e - 1.0 / t_scalars.varphi);
                    (Some(inv_err), opt, gmv)
                }
                None => (None, None, None),
            };
            put(Metric::InverseFrobenius, inv_err);
            put(Metric::OptimalVariance, opt_err);
            put(Metric::GlobalMinVariance, gmv_err);
        }
    }
    Ok(ReplicationRecord { p, values })
}

fn estimated_optimal_variance(
    est: &CovarianceEstimate,
    inv: &DMatrix<f64>,
    mean: &DVector<f64>,
    gamma: f64,
) -> Option<f64> {
    let w = markowitz_weights(inv, mean, gamma).ok()?;
    portfolio_variance(est, &w).ok()
}

pub fn run_experiment(config: &SimulationConfig) -> Result<SimulationResult> {
    run_experiment_with(config, ExecOptions::default())
}

/// Runs every `(p, replication)` task, possibly in parallel, and aggregates
/// in a fixed order so the result is identical for any worker count.
pub fn run_experiment_with(config: &SimulationConfig, opts: ExecOptions) -> Result<SimulationResult> {
    config.validate()?;
    let reps = config.replications;
    let tasks: Vec<(usize, usize)> = (0..config.p_grid.len())
        .flat_map(|pi| (0..reps).map(move |rep| (pi, rep)))
        .collect();
    let done: Vec<AtomicUsize> = config.p_grid.iter().map(|_| AtomicUsize::new(0)).collect();

    let run_task = |&(pi, rep): &(usize, usize)| -> Result<ReplicationRecord> {
        let p = config.p_grid[pi];
        let factors = replication_factors(config, rep)?;
        let mut rng = stream_rng(config.seed, rep, pi as u64 + 1);
        let record = run_replication_with_factors(config, &factors, p, &mut rng)?;
        if opts.progress && done[pi].fetch_add(1, Ordering::SeqCst) + 1 == reps {
            eprintln!("p = {p}: {reps} replications done");
        }
        Ok(record)
    };
    let records: Vec<ReplicationRecord> =
        with_workers(opts.workers, || tasks.par_iter().map(run_task).collect::<Result<Vec<_>>>())??;

    let mut cells = BTreeMap::new();
    for (pi, &p) in config.p_grid.iter().enumerate() {
        let block = &records[pi * reps..(pi + 1) * reps];
        for &metric in &config.metrics {
            for method in METHODS {
                let vals: Vec<Option<f64>> = block.iter().map(|r| r.get(metric, method)).collect();
                cells.insert((p, metric, method), Aggregate::from_values(&vals, metric.is_variance_error()));
            }
        }
    }
    Ok(SimulationResult {
        config: config.clone(),
        cells,
        raw: opts.keep_raw.then_some(records),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues_desc, max_abs};

    fn small_config() -> SimulationConfig {
        SimulationConfig {
            n: 60,
            p_grid: vec![16],
            replications: 2,
            seed: 11,
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn default_calibration_values() {
        let c = default_calibration();
        assert_eq!(c.cov_f[(0, 0)], 1.2507);
        assert_eq!(c.mu_b.as_slice(), &[0.78282, 0.51803, 0.41003]);
        assert_eq!((c.gamma_shape, c.gamma_scale), (3.3586, 0.1876));
        assert_eq!(c.sd_floor, 0.1950);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn default_grid_is_literal() {
        let cfg = SimulationConfig::default();
        assert_eq!(cfg.p_grid.first(), Some(&16));
        assert_eq!(cfg.p_grid.last(), Some(&996));
        assert_eq!(cfg.p_grid.len(), 50);
        assert_eq!((cfg.n, cfg.replications, cfg.gamma_target), (756, 500, 0.10));
    }

    #[test]
    fn replication_smoke_is_deterministic() {
        let cfg = SimulationConfig {
            replications: 1,
            ..small_config()
        };
        let a = run_replication(&cfg, 16, &mut stream_rng(5, 0, 1)).unwrap();
        let b = run_replication(&cfg, 16, &mut stream_rng(5, 0, 1)).unwrap();
        assert_eq!(a, b);
        for metric in Metric::ALL {
            for method in METHODS {
                let v = a.get(metric, method).unwrap();
                assert!(v.is_finite());
                if !metric.is_variance_error() {
                    assert!(v >= 0.0);
                }
            }
        }
    }

    #[test]
    fn truth_is_positive_definite_and_assembled_consistently() {
        let cfg = small_config();
        let factors = replication_factors(&cfg, 0).unwrap();
        let d = draw_design(&cfg, &factors, 40, &mut stream_rng(1, 0, 1), false).unwrap();
        let sigma = covariance_factor(&d.truth).unwrap();
        let b = &d.truth.loadings;
        let direct = b * &cfg.calibration.cov_f * b.transpose() + DMatrix::from_diagonal(&d.truth.resid_diag);
        assert!(max_abs(&(sigma.matrix() - direct)) < 1e-12);
        let floor2 = cfg.calibration.sd_floor.powi(2);
        assert!(eigenvalues_desc(sigma.matrix()).min() >= floor2 * (1.0 - 1e-9));
    }

    #[test]
    fn noiseless_design_leaves_only_factor_covariance_error() {
        let cfg = small_config();
        let factors = replication_factors(&cfg, 0).unwrap();
        let d = draw_design(&cfg, &factors, 20, &mut stream_rng(2, 0, 1), true).unwrap();
        let fit = fit_factor_model(
            &FactorPanel::new(d.factors.clone()).unwrap(),
            &ReturnPanel::new(d.returns.clone()).unwrap(),
        )
        .unwrap();
        let est = covariance_factor(&fit).unwrap();
        let sigma = covariance_factor(&d.truth).unwrap();
        let b = &d.truth.loadings;
        let cov_err = &fit.factor_cov - &cfg.calibration.cov_f;
        let expected = b * cov_err * b.transpose() - DMatrix::from_diagonal(&d.truth.resid_diag);
        assert!(max_abs(&(est.matrix() - sigma.matrix() - expected)) < 1e-9);
    }

    #[test]
    fn aggregate_is_average_of_records() {
        let cfg = small_config();
        let res = run_experiment_with(
            &cfg,
            ExecOptions {
                keep_raw: true,
                ..Default::default()
            },
        )
        .unwrap();
        let raw = res.raw.as_ref().unwrap();
        assert_eq!(raw.len(), 2);
        for metric in Metric::ALL {
            for method in METHODS {
                let a = raw[0].get(metric, method).unwrap();
                let b = raw[1].get(metric, method).unwrap();
                let cell = res.get(16, metric, method).unwrap();
                assert_eq!(cell.count, 2);
                assert!((cell.mean.unwrap() - (a + b) / 2.0).abs() < 1e-15 * (a.abs() + b.abs()).max(1e-300));
                if metric.is_variance_error() {
                    assert!((cell.mse.unwrap() - (a * a + b * b) / 2.0).abs() <= 1e-15 * (a * a + b * b));
                }
            }
        }
    }

    #[test]
    fn singular_sample_cells_are_excluded() {
        let cfg = SimulationConfig {
            n: 20,
            p_grid: vec![30],
            replications: 3,
            ..small_config()
        };
        let res = run_experiment(&cfg).unwrap();
        for metric in [Metric::Entropy, Metric::InverseFrobenius, Metric::OptimalVariance, Metric::GlobalMinVariance] {
            let s = res.get(30, metric, Method::Sample).unwrap();
            assert_eq!((s.count, s.excluded, s.mean), (0, 3, None));
            let f = res.get(30, metric, Method::Factor).unwrap();
            assert_eq!(f.count, 3);
        }
        assert_eq!(res.get(30, Metric::Frobenius, Method::Sample).unwrap().count, 3);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = SimulationConfig {
            p_grid: vec![16, 36],
            replications: 3,
            ..small_config()
        };
        let one = run_experiment_with(
            &cfg,
            ExecOptions {
                workers: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        let many = run_experiment_with(
            &cfg,
            ExecOptions {
                workers: Some(4),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn metric_subset_only_records_requested_metrics() {
        let cfg = SimulationConfig {
            metrics: [Metric::Frobenius].into_iter().collect(),
            ..small_config()
        };
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.cells.len(), 2);
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_config();
        cfg.p_grid = vec![0];
        assert!(cfg.validate().is_err());
        cfg.p_grid = vec![20, 10];
        assert!(cfg.validate().is_err());
        cfg.p_grid = vec![10];
        cfg.k = 2;
        assert!(cfg.validate().is_err());
    }
}
