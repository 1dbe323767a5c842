//! Loads a factor file and a portfolio-returns file in the layout of the
//! Kenneth French data library, aligns them and fits both estimators.
//!
//! cargo run --example fama_french_ingest -- F-F_Research_Data_Factors_daily.CSV 25_Portfolios_5x5_Daily.CSV
//!
//! Without arguments a small built-in sample is used.

use std::path::PathBuf;

use factorcov::data_io::{align_and_excess, load_factor_csv_with, load_returns_csv_with, LoadOptions, MissingPolicy};
use factorcov::{covariance_factor, covariance_sample, fit_factor_model};

const FACTORS: &str = "Sample factor file\n\n,Mkt-RF,SMB,HML,RF\n\
20050103,-0.91,-0.62,0.02,0.008\n20050104,-1.28,-0.44,0.33,0.008\n20050105,-0.43,-0.86,0.11,0.008\n\
20050106,0.32,-0.04,0.15,0.008\n20050107,-0.19,-0.69,0.12,0.008\n20050110,0.38,0.25,-0.20,0.008\n\
20050111,-0.66,0.10,0.41,0.008\n20050112,0.31,-0.05,-0.12,0.008\n\nAnnual Factors\n";

const RETURNS: &str = ",SMALL LoBM,ME1 BM2,BIG HiBM\n\
20050103,-1.20,-0.90,-0.85\n20050104,-1.50,-1.10,-1.31\n20050105,-0.93,-0.88,-0.40\n\
20050106,0.41,-99.99,0.66\n20050107,-0.60,-0.45,-0.02\n20050110,0.72,0.44,0.30\n\
20050111,-0.10,-0.02,-0.44\n20050112,0.35,0.21,0.18\n";

fn main() -> factorcov::Result<()> {
    let args: Vec<PathBuf> = std::env::args_os().skip(1).map(PathBuf::from).collect();
    let (fpath, rpath) = match args.as_slice() {
        [f, r] => (f.clone(), r.clone()),
        _ => {
            let dir = std::env::temp_dir().join(format!("factorcov-ff-{}", std::process::id()));
            std::fs::create_dir_all(&dir).expect("temp dir");
            std::fs::write(dir.join("factors.csv"), FACTORS).expect("write");
            std::fs::write(dir.join("returns.csv"), RETURNS).expect("write");
            (dir.join("factors.csv"), dir.join("returns.csv"))
        }
    };

    let opts = LoadOptions { missing: MissingPolicy::DropRows };
    let factors = load_factor_csv_with(&fpath, opts)?;
    let returns = load_returns_csv_with(&rpath, opts)?;
    if !returns.dropped_dates().is_empty() {
        println!("dropped rows with missing values: {:?}", returns.dropped_dates());
    }
    let a = align_and_excess(&factors, &returns)?;
    println!("{} common dates, {} assets", a.dates.len(), a.asset_names.len());

    let fit = fit_factor_model(&a.factors, &a.returns)?;
    println!("loadings:{}", fit.loadings);
    println!("factor estimate:{}", covariance_factor(&fit)?.matrix());
    println!("sample estimate:{}", covariance_sample(&a.returns)?.matrix());
    Ok(())
}
