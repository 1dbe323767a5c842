use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

use factorcov::data_io::{read_matrix_csv, write_matrix_csv};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn factorcov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_factorcov"))
        .args(args)
        .env_remove("FACTORCOV_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fields(path: &Path) -> Vec<(String, String)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (k, v) = l.split_once(',').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn field(rows: &[(String, String)], key: &str) -> f64 {
    rows.iter().find(|(k, _)| k == key).unwrap().1.parse().unwrap()
}

/// Writes a factor file with an RF column and a returns file with `p`
/// assets over `n` consecutive dates.
fn write_panels(dir: &Path, p: usize, n: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut f = String::from("Date,Mkt-RF,SMB,HML,RF\n");
    let mut r = String::from("Date");
    for j in 0..p {
        let _ = write!(r, ",A{j}");
    }
    r.push('\n');
    let loadings: Vec<[f64; 3]> = (0..p).map(|_| [1.0 + rng.random::<f64>(), rng.random(), rng.random()]).collect();
    for t in 0..n {
        let date = 20100101 + t as u32;
        let x: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let _ = writeln!(f, "{date},{},{},{},0.01", x[0], x[1], x[2]);
        let _ = write!(r, "{date}");
        for b in &loadings {
            let e: f64 = rng.sample(StandardNormal);
            let _ = write!(r, ",{}", 0.01 + b[0] * x[0] + b[1] * x[1] + b[2] * x[2] + 0.3 * e);
        }
        r.push('\n');
    }
    std::fs::write(dir.join("factors.csv"), f).unwrap();
    std::fs::write(dir.join("returns.csv"), r).unwrap();
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&factorcov(&["--help"])), 0);
    assert_eq!(code(&factorcov(&[])), 1);
    assert_eq!(code(&factorcov(&["simulate", "--bogus"])), 1);
}

#[test]
fn calibrate_gamma_reports_table_values() {
    let out = factorcov(&["calibrate-gamma"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("alpha = 3.35"), "{text}");
    assert!(text.contains("beta = 0.18"), "{text}");

    let bad = factorcov(&["calibrate-gamma", "--mean", "0.1", "--floor", "0.2"]);
    assert_eq!(code(&bad), 1);
}

#[test]
fn portfolio_closed_form_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_matrix_csv(&DMatrix::identity(2, 2), &d.join("eye.csv")).unwrap();
    write_matrix_csv(&DMatrix::from_column_slice(2, 1, &[1.0, 2.0]), &d.join("mu.csv")).unwrap();
    write_matrix_csv(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]), &d.join("diag.csv")).unwrap();
    write_matrix_csv(&DMatrix::from_column_slice(2, 1, &[0.3, 0.3]), &d.join("flat.csv")).unwrap();

    let out = d.join("opt.csv");
    let run = factorcov(&["portfolio", "--sigma", s(&d.join("eye.csv")), "--mu", s(&d.join("mu.csv")), "--gamma", "1.5", "--out", s(&out)]);
    assert_eq!(code(&run), 0);
    let rows = fields(&out);
    assert!((field(&rows, "weight_1") - 0.5).abs() < 1e-12);
    assert!((field(&rows, "weight_2") - 0.5).abs() < 1e-12);
    assert!((field(&rows, "variance") - 0.5).abs() < 1e-12);
    assert_eq!((field(&rows, "varphi"), field(&rows, "psi"), field(&rows, "phi")), (2.0, 3.0, 5.0));

    let out = d.join("gmv.csv");
    let run = factorcov(&["portfolio", "--sigma", s(&d.join("diag.csv")), "--global-min", "--out", s(&out)]);
    assert_eq!(code(&run), 0);
    let rows = fields(&out);
    assert!((field(&rows, "weight_1") - 0.8).abs() < 1e-12);
    assert!((field(&rows, "weight_2") - 0.2).abs() < 1e-12);
    assert!((field(&rows, "variance") - 0.8).abs() < 1e-12);

    // A mean proportional to the unit vector leaves the frontier undefined.
    let run = factorcov(&["portfolio", "--sigma", s(&d.join("eye.csv")), "--mu", s(&d.join("flat.csv")), "--gamma", "0.3", "--out", s(&d.join("x.csv"))]);
    assert_eq!(code(&run), 3);

    let run = factorcov(&["portfolio", "--sigma", s(&d.join("missing.csv")), "--global-min", "--out", s(&d.join("x.csv"))]);
    assert_eq!(code(&run), 2);
}

#[test]
fn fit_writes_estimates_and_portfolio_reads_them_back() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_panels(d, 6, 120);
    let out = d.join("fit");
    let run = factorcov(&["fit", "--factors", s(&d.join("factors.csv")), "--returns", s(&d.join("returns.csv")), "--out", s(&out), "--inverse"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    for name in ["loadings", "factor_cov", "resid_diag", "factor_mean", "mean", "sigma_factor", "sigma_factor_inv", "sigma_sample", "mean_sample", "sigma_sample_inv"] {
        assert!(out.join(format!("{name}.csv")).exists(), "{name}");
    }
    let sigma = read_matrix_csv(&out.join("sigma_factor.csv")).unwrap();
    let inv = read_matrix_csv(&out.join("sigma_factor_inv.csv")).unwrap();
    assert_eq!(sigma.shape(), (6, 6));
    assert!((&sigma * &inv - DMatrix::identity(6, 6)).norm() < 1e-9);
    assert_eq!(read_matrix_csv(&out.join("loadings.csv")).unwrap().shape(), (6, 3));

    let via_fit = d.join("pf_fit.csv");
    let via_sigma = d.join("pf_sigma.csv");
    assert_eq!(code(&factorcov(&["portfolio", "--fit", s(&out), "--global-min", "--out", s(&via_fit)])), 0);
    assert_eq!(code(&factorcov(&["portfolio", "--sigma", s(&out.join("sigma_factor.csv")), "--global-min", "--out", s(&via_sigma)])), 0);
    let (a, b) = (fields(&via_fit), fields(&via_sigma));
    for i in 1..=6 {
        let key = format!("weight_{i}");
        assert!((field(&a, &key) - field(&b, &key)).abs() < 1e-8);
    }

    let losses = d.join("losses.csv");
    let run = factorcov(&["losses", "--est", s(&out.join("sigma_factor.csv")), "--ref", s(&out.join("sigma_sample.csv")), "--out", s(&losses)]);
    assert_eq!(code(&run), 0);
    let rows = fields(&losses);
    let names: Vec<&str> = rows.iter().map(|(k, _)| k.as_str()).collect();
    assert_eq!(names, ["frobenius", "sigma_norm", "quadratic", "entropy", "max_eigen_dev"]);
    assert!(field(&rows, "frobenius") > 0.0);
}

#[test]
fn sample_inverse_fails_when_assets_exceed_observations() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_panels(d, 40, 20);
    let args = |method: &str, out: &str| -> Vec<String> {
        ["fit", "--factors", s(&d.join("factors.csv")), "--returns", s(&d.join("returns.csv")), "--out", out, "--method", method]
            .iter()
            .map(|a| a.to_string())
            .collect()
    };
    let factor_out = d.join("f");
    let a = args("factor", s(&factor_out));
    assert_eq!(code(&factorcov(&a.iter().map(String::as_str).collect::<Vec<_>>())), 0);
    assert!(factor_out.join("sigma_factor_inv.csv").exists());

    let mut a = args("sample", s(&d.join("s")));
    a.push("--inverse".into());
    assert_eq!(code(&factorcov(&a.iter().map(String::as_str).collect::<Vec<_>>())), 3);
}

#[test]
fn fit_rejects_missing_markers_unless_asked_to_drop() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_panels(d, 3, 30);
    let returns = std::fs::read_to_string(d.join("returns.csv")).unwrap();
    let patched: Vec<String> = returns
        .lines()
        .enumerate()
        .map(|(i, l)| if i == 5 { format!("{},-99.99,{}", &l[..8], l.splitn(3, ',').nth(2).unwrap()) } else { l.to_string() })
        .collect();
    std::fs::write(d.join("returns.csv"), patched.join("\n") + "\n").unwrap();
    let (factors, returns, out) = (d.join("factors.csv"), d.join("returns.csv"), d.join("o"));
    let base = ["fit", "--factors", s(&factors), "--returns", s(&returns), "--out", s(&out)];
    assert_eq!(code(&factorcov(&base)), 2);
    let mut dropped = base.to_vec();
    dropped.push("--drop-missing");
    assert_eq!(code(&factorcov(&dropped)), 0);
}

#[test]
fn losses_mark_undefined_entropy() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_matrix_csv(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]), &d.join("est.csv")).unwrap();
    write_matrix_csv(&DMatrix::identity(2, 2), &d.join("ref.csv")).unwrap();
    let out = d.join("l.csv");
    assert_eq!(code(&factorcov(&["losses", "--est", s(&d.join("est.csv")), "--ref", s(&d.join("ref.csv")), "--out", s(&out)])), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("entropy,NA"), "{text}");

    write_matrix_csv(&DMatrix::identity(3, 3), &d.join("ref3.csv")).unwrap();
    assert_eq!(code(&factorcov(&["losses", "--est", s(&d.join("est.csv")), "--ref", s(&d.join("ref3.csv")), "--out", s(&out)])), 2);
}

#[test]
fn simulate_rejects_bad_grids_and_replays_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&factorcov(&["simulate", "--p-grid", "0", "--out", s(&d.join("x")), "--quiet"])), 1);
    assert_eq!(code(&factorcov(&["simulate", "--p-grid", "30,10", "--out", s(&d.join("x")), "--quiet"])), 1);

    let first = d.join("a");
    let run = factorcov(&["simulate", "--n", "60", "--p-grid", "10,70", "--reps", "3", "--seed", "4", "--out", s(&first), "--quiet"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let second = d.join("b");
    let run = factorcov(&["simulate", "--config", s(&first.join("manifest.cfg")), "--out", s(&second), "--quiet"]);
    assert_eq!(code(&run), 0);
    for entry in std::fs::read_dir(&first).unwrap() {
        let name = entry.unwrap().file_name();
        let a = std::fs::read(first.join(&name)).unwrap();
        let b = std::fs::read(second.join(&name)).unwrap();
        assert_eq!(a, b, "{name:?}");
    }
    let fig1e = std::fs::read_to_string(first.join("fig1e.csv")).unwrap();
    assert_eq!(fig1e.lines().next().unwrap(), "p,factor_entropy_mean,sample_entropy_mean");
    assert!(fig1e.lines().nth(2).unwrap().ends_with(",NA"));
}

#[test]
fn clt_check_validates_dimensions() {
    assert_eq!(code(&factorcov(&["clt-check", "--k", "5", "--p", "3", "--reps", "10"])), 1);
    let run = factorcov(&["clt-check", "--p", "4", "--n", "100", "--reps", "50"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
}
