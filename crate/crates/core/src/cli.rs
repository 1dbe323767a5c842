//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 data
//! error, 3 numerical error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};

use crate::data_io::{self, LoadOptions, MissingPolicy};
use crate::error::{Error, Result};
use crate::estimators::{self, CovarianceEstimate, FactorModelFit, Method};
use crate::losses::Reference;
use crate::portfolio::{plug_in_portfolio, PlugIn, PlugInPortfolio};
use crate::simulation::{self, config, ExecOptions, SimulationConfig};
use crate::asymptotics;

/// Environment variable overriding the worker thread count.
pub const WORKERS_ENV: &str = "FACTORCOV_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "factorcov", version, about = "Factor-model covariance estimation and its Monte Carlo study")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the Monte Carlo study and write one CSV per figure panel.
    Simulate(SimulateArgs),
    /// Fit the factor model and/or sample covariance to data files.
    Fit(FitArgs),
    /// Plug-in optimal or global minimum-variance portfolio.
    Portfolio(PortfolioArgs),
    /// Losses of an estimated covariance against a reference.
    Losses(LossesArgs),
    /// Calibrate the truncated gamma law for idiosyncratic volatilities.
    CalibrateGamma(CalibrateArgs),
    /// Monte Carlo check of the asymptotic normality of the factor estimator.
    CltCheck(CltArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Flat key = value config; flags given alongside override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma list or start:stop:step.
    #[arg(long)]
    pub p_grid: Option<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma list of metric names, or "all".
    #[arg(long)]
    pub metrics: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Suppress per-p progress on standard error.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMethod {
    Factor,
    Sample,
    Both,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub factors: PathBuf,
    #[arg(long)]
    pub returns: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = FitMethod::Both)]
    pub method: FitMethod,
    /// Also write the inverse of the sample covariance.
    #[arg(long)]
    pub inverse: bool,
    /// Drop rows with missing-value markers instead of failing.
    #[arg(long)]
    pub drop_missing: bool,
    /// Returns are already in excess of the risk-free rate.
    #[arg(long)]
    pub no_rf: bool,
}

#[derive(Debug, Args)]
pub struct PortfolioArgs {
    #[arg(long, conflicts_with = "fit", required_unless_present = "fit")]
    pub sigma: Option<PathBuf>,
    /// Directory written by `fit`; uses the Woodbury inverse.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    #[arg(long)]
    pub mu: Option<PathBuf>,
    #[arg(long, conflicts_with = "global_min", required_unless_present = "global_min")]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub global_min: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LossesArgs {
    #[arg(long)]
    pub est: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 0.66081)]
    pub mean: f64,
    #[arg(long, default_value_t = 0.3275)]
    pub sd: f64,
    #[arg(long, default_value_t = 0.1950)]
    pub floor: f64,
    /// Use exact truncated moments instead of the linearised ones.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct CltArgs {
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub p: usize,
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10.0)]
    pub factor_var: f64,
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.class().exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Portfolio(a) => portfolio(a),
        Command::Losses(a) => losses_cmd(a),
        Command::CalibrateGamma(a) => calibrate(a),
        Command::CltCheck(a) => clt_check(a),
    }
}

fn workers(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|w| *w > 0)
            .map(Some)
            .ok_or_else(|| Error::InvalidConfig(format!("{WORKERS_ENV}={v:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

pub fn simulation_config(a: &SimulateArgs) -> Result<SimulationConfig> {
    let mut cfg = match &a.config {
        Some(path) => config::load_config(path)?,
        None => SimulationConfig::default(),
    };
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(g) = &a.p_grid {
        cfg.p_grid = config::parse_p_grid(g)?;
    }
    if let Some(r) = a.reps {
        cfg.replications = r;
    }
    if let Some(k) = a.k {
        cfg.k = k;
    }
    if let Some(g) = a.gamma {
        cfg.gamma_target = g;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(m) = &a.metrics {
        cfg.metrics = config::parse_metrics(m)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let cfg = simulation_config(a)?;
    let opts = ExecOptions {
        workers: workers(a.workers)?,
        progress: !a.quiet,
        keep_raw: false,
    };
    let result = simulation::run_experiment_with(&cfg, opts)?;
    let files = simulation::emit_figure_tables(&result, &a.out)?;

    let manifest = a.out.join("manifest.cfg");
    let text = format!(
        "# factorcov {} simulate\n# feed back with: factorcov simulate --config manifest.cfg --out DIR\n{}",
        env!("CARGO_PKG_VERSION"),
        config::format_config(&cfg)
    );
    std::fs::write(&manifest, text).map_err(|e| Error::io(&manifest, e))?;
    for f in files.iter().chain(std::iter::once(&manifest)) {
        println!("{}", f.display());
    }
    Ok(())
}

fn fit(a: &FitArgs) -> Result<()> {
    let opts = LoadOptions {
        missing: if a.drop_missing { MissingPolicy::DropRows } else { MissingPolicy::Reject },
    };
    let factors = data_io::load_factor_csv_with(&a.factors, opts)?;
    let returns = data_io::load_returns_csv_with(&a.returns, opts)?;
    let align = data_io::AlignOptions {
        subtract_rf: !a.no_rf,
        ..Default::default()
    };
    let aligned = data_io::align_and_excess_with(&factors, &returns, &align)?;
    eprintln!(
        "aligned {} dates ({} factor-only, {} return-only dates dropped), p = {}",
        aligned.dates.len(),
        aligned.dropped_factor_dates,
        aligned.dropped_return_dates,
        aligned.returns.p()
    );
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let write = |name: &str, m: &DMatrix<f64>| -> Result<()> {
        let path = a.out.join(name);
        data_io::write_matrix_csv(m, &path)?;
        println!("{}", path.display());
        Ok(())
    };
    let column = |v: &DVector<f64>| DMatrix::from_column_slice(v.len(), 1, v.as_slice());

    if matches!(a.method, FitMethod::Factor | FitMethod::Both) {
        let f = estimators::fit_factor_model(&aligned.factors, &aligned.returns)?;
        let sigma = estimators::covariance_factor(&f)?;
        let inverse = estimators::inverse_factor(&f)?;
        write("loadings.csv", &f.loadings)?;
        write("factor_cov.csv", &f.factor_cov)?;
        write("resid_diag.csv", &column(&f.resid_diag))?;
        write("factor_mean.csv", &column(&f.factor_mean))?;
        write("mean.csv", &column(&f.mean))?;
        write("sigma_factor.csv", sigma.matrix())?;
        write("sigma_factor_inv.csv", &inverse)?;
    }
    if matches!(a.method, FitMethod::Sample | FitMethod::Both) {
        let sigma = estimators::covariance_sample(&aligned.returns)?;
        write("sigma_sample.csv", sigma.matrix())?;
        write("mean_sample.csv", &column(&estimators::sample_mean(&aligned.returns)))?;
        if a.inverse {
            write("sigma_sample_inv.csv", &estimators::inverse_generic(&sigma)?)?;
        }
    }
    Ok(())
}

fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let m = data_io::read_matrix_csv(path)?;
    if m.ncols() == 1 {
        Ok(m.column(0).into_owned())
    } else if m.nrows() == 1 {
        Ok(m.row(0).transpose())
    } else {
        Err(Error::parse(path, 1, format!("expected a vector, found {}x{}", m.nrows(), m.ncols())))
    }
}

fn read_fit_dir(dir: &Path) -> Result<FactorModelFit> {
    FactorModelFit::from_parts(
        data_io::read_matrix_csv(&dir.join("loadings.csv"))?,
        data_io::read_matrix_csv(&dir.join("factor_cov.csv"))?,
        read_vector(&dir.join("resid_diag.csv"))?,
        read_vector(&dir.join("factor_mean.csv"))?,
    )
}

fn check_len(what: &str, v: &DVector<f64>, p: usize) -> Result<()> {
    if v.len() != p {
        return Err(Error::DimensionMismatch(format!("{what} has length {}, expected {p}", v.len())));
    }
    Ok(())
}

fn portfolio(a: &PortfolioArgs) -> Result<()> {
    let gamma = if a.global_min { None } else { a.gamma };
    let result: PlugInPortfolio = match (&a.fit, &a.sigma) {
        (Some(dir), _) => {
            let mut fit = read_fit_dir(dir)?;
            if let Some(mu) = &a.mu {
                let mu = read_vector(mu)?;
                check_len("mu", &mu, fit.p())?;
                fit.mean = mu;
            }
            plug_in_portfolio(PlugIn::Factor(&fit), gamma)?
        }
        (None, Some(path)) => {
            let sigma = CovarianceEstimate::new(data_io::read_matrix_csv(path)?, Method::Sample)?;
            let mean = match &a.mu {
                Some(mu) => read_vector(mu)?,
                None if gamma.is_none() => DVector::zeros(sigma.dim()),
                None => return Err(Error::InvalidConfig("--gamma needs --mu".into())),
            };
            check_len("mu", &mean, sigma.dim())?;
            plug_in_portfolio(PlugIn::Covariance { sigma: &sigma, mean: &mean }, gamma)?
        }
        (None, None) => return Err(Error::InvalidConfig("one of --sigma or --fit is required".into())),
    };

    let mut text = String::from("field,value\n");
    let s = &result.scalars;
    let _ = writeln!(text, "variance,{}", result.variance);
    if let Some(g) = gamma {
        let _ = writeln!(text, "gamma,{g}");
    }
    let _ = writeln!(text, "varphi,{}\npsi,{}\nphi,{}", s.varphi, s.psi, s.phi);
    for (i, w) in result.weights.weights().iter().enumerate() {
        let _ = writeln!(text, "weight_{},{w}", i + 1);
    }
    std::fs::write(&a.out, text).map_err(|e| Error::io(&a.out, e))?;
    println!("variance = {}", result.variance);
    Ok(())
}

fn losses_cmd(a: &LossesArgs) -> Result<()> {
    let est = CovarianceEstimate::new(data_io::read_matrix_csv(&a.est)?, Method::Sample)?;
    let reference = CovarianceEstimate::new(data_io::read_matrix_csv(&a.reference)?, Method::Oracle)?;
    if est.dim() != reference.dim() {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {0}x{0}, reference is {1}x{1}",
            est.dim(),
            reference.dim()
        )));
    }
    let r = Reference::new(&reference)?.report(&est)?;
    let na = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
    let text = format!(
        "metric,value\nfrobenius,{}\nsigma_norm,{}\nquadratic,{}\nentropy,{}\nmax_eigen_dev,{}\n",
        r.frobenius,
        r.sigma_norm,
        r.quadratic,
        na(r.entropy),
        r.max_eigen_dev
    );
    std::fs::write(&a.out, &text).map_err(|e| Error::io(&a.out, e))?;
    print!("{}", &text["metric,value\n".len()..]);
    Ok(())
}

fn calibrate(a: &CalibrateArgs) -> Result<()> {
    let mode = if a.exact {
        simulation::CalibrationMode::Exact
    } else {
        simulation::CalibrationMode::Approximate
    };
    let c = simulation::calibrate_truncated_gamma_with(a.mean, a.sd, a.floor, mode)?;
    println!("alpha = {:.6}", c.shape);
    println!("beta = {:.6}", c.scale);
    println!("iterations = {}", c.iterations);
    Ok(())
}

fn clt_check(a: &CltArgs) -> Result<()> {
    let cfg = asymptotics::CltConfig {
        k: a.k,
        p: a.p,
        n: a.n,
        reps: a.reps,
        seed: a.seed,
        factor_var: a.factor_var,
        workers: workers(a.workers)?,
    };
    let r = asymptotics::run_clt_check(&cfg)?;
    println!("index,empirical_variance,analytic_variance");
    for i in 0..r.analytic_g.nrows() {
        println!("{},{:.6},{:.6}", i + 1, r.empirical_cov[(i, i)], r.analytic_g[(i, i)]);
    }
    println!("max_rel_dev = {:.6}", r.max_rel_dev);
    Ok(())
}
