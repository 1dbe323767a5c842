//! Flat `key = value` configuration files for [`SimulationConfig`].
//!
//! Blank lines and lines starting with `#` are ignored. Vectors are comma
//! separated; matrix rows are separated by `;`. `p_grid` also accepts
//! `start:stop:step`. Keys left out keep their default values.
//!
//! ```text
//! n = 756
//! p_grid = 16:996:20
//! replications = 500
//! metrics = frobenius, sigma_norm, entropy
//! cov_f = 1.2507, -0.034999, -0.20419; -0.034999, 0.31564, -0.0022526; ...
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{Metric, SimulationConfig};
use crate::error::{Error, Result};

pub const KEYS: [&str; 16] = [
    "n",
    "p_grid",
    "k",
    "replications",
    "gamma_target",
    "seed",
    "metrics",
    "mu_f",
    "cov_f",
    "mu_b",
    "cov_b",
    "gamma_shape",
    "gamma_scale",
    "sd_floor",
    "target_mean",
    "target_sd",
];

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::InvalidConfig(format!("{key} = {value:?}: {what}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| bad(key, value, "not a number"))
}

fn parse_vec(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|t| parse_num(key, t)).collect()
}

fn parse_matrix(key: &str, value: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = value.split(';').map(|r| parse_vec(key, r)).collect::<Result<_>>()?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(bad(key, value, "ragged matrix rows"));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.into_iter().flatten()))
}

pub fn parse_p_grid(value: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (usize, usize, usize) = (
                parse_num("p_grid", start)?,
                parse_num("p_grid", stop)?,
                parse_num("p_grid", step)?,
            );
            if step == 0 {
                return Err(bad("p_grid", value, "step must be positive"));
            }
            Ok((start..=stop).step_by(step).collect())
        }
        [_] => value.split(',').map(|t| parse_num("p_grid", t)).collect(),
        _ => Err(bad("p_grid", value, "expected a list or start:stop:step")),
    }
}

pub fn parse_metrics(value: &str) -> Result<BTreeSet<Metric>> {
    if value.trim() == "all" {
        return Ok(Metric::ALL.into_iter().collect());
    }
    value.split(',').map(str::parse).collect()
}

/// Applies `key = value` lines on top of the defaults.
pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    let mut cfg = SimulationConfig::default();
    let mut seen = BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(Error::InvalidConfig(format!("line {}: duplicate key {key}", lineno + 1)));
        }
        let cal = &mut cfg.calibration;
        match key {
            "n" => cfg.n = parse_num(key, value)?,
            "p_grid" => cfg.p_grid = parse_p_grid(value)?,
            "k" => cfg.k = parse_num(key, value)?,
            "replications" => cfg.replications = parse_num(key, value)?,
            "gamma_target" => cfg.gamma_target = parse_num(key, value)?,
            "seed" => cfg.seed = parse_num(key, value)?,
            "metrics" => cfg.metrics = parse_metrics(value)?,
            "mu_f" => cal.mu_f = DVector::from_vec(parse_vec(key, value)?),
            "cov_f" => cal.cov_f = parse_matrix(key, value)?,
            "mu_b" => cal.mu_b = DVector::from_vec(parse_vec(key, value)?),
            "cov_b" => cal.cov_b = parse_matrix(key, value)?,
            "gamma_shape" => cal.gamma_shape = parse_num(key, value)?,
            "gamma_scale" => cal.gamma_scale = parse_num(key, value)?,
            "sd_floor" => cal.sd_floor = parse_num(key, value)?,
            "target_mean" => cal.target_mean = parse_num(key, value)?,
            "target_sd" => cal.target_sd = parse_num(key, value)?,
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "line {}: unknown key {key:?} (known: {})",
                    lineno + 1,
                    KEYS.join(", ")
                )))
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn matrix_text(m: &DMatrix<f64>) -> String {
    m.row_iter()
        .map(|r| join(r.iter().copied()))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Writes every key. Floats use the shortest representation that parses
/// back to the same value.
pub fn format_config(cfg: &SimulationConfig) -> String {
    let cal = &cfg.calibration;
    let mut s = String::new();
    let grid = cfg.p_grid.iter().map(usize::to_string).collect::<Vec<_>>().join(", ");
    let metrics = cfg.metrics.iter().map(|m| m.name()).collect::<Vec<_>>().join(", ");
    let _ = writeln!(s, "n = {}", cfg.n);
    let _ = writeln!(s, "p_grid = {grid}");
    let _ = writeln!(s, "k = {}", cfg.k);
    let _ = writeln!(s, "replications = {}", cfg.replications);
    let _ = writeln!(s, "gamma_target = {}", cfg.gamma_target);
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "metrics = {metrics}");
    let _ = writeln!(s, "mu_f = {}", join(cal.mu_f.iter().copied()));
    let _ = writeln!(s, "cov_f = {}", matrix_text(&cal.cov_f));
    let _ = writeln!(s, "mu_b = {}", join(cal.mu_b.iter().copied()));
    let _ = writeln!(s, "cov_b = {}", matrix_text(&cal.cov_b));
    let _ = writeln!(s, "gamma_shape = {}", cal.gamma_shape);
    let _ = writeln!(s, "gamma_scale = {}", cal.gamma_scale);
    let _ = writeln!(s, "sd_floor = {}", cal.sd_floor);
    let _ = writeln!(s, "target_mean = {}", cal.target_mean);
    let _ = writeln!(s, "target_sd = {}", cal.target_sd);
    s
}
