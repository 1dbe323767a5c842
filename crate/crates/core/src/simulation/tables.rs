//! Plot-ready CSV tables, one per figure panel, plus a long-format summary.

use std::path::{Path, PathBuf};

use super::{Aggregate, Metric, SimulationResult, METHODS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Mean,
    Sd,
    Mse,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::Sd => "sd",
            Statistic::Mse => "mse",
        }
    }

    pub fn of(self, a: &Aggregate) -> Option<f64> {
        match self {
            Statistic::Mean => a.mean,
            Statistic::Sd => a.sd,
            Statistic::Mse => a.mse,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub name: &'static str,
    pub metric: Metric,
    pub statistic: Statistic,
}

pub const PANELS: [Panel; 11] = [
    Panel { name: "fig1a", metric: Metric::Frobenius, statistic: Statistic::Mean },
    Panel { name: "fig1b", metric: Metric::Frobenius, statistic: Statistic::Sd },
    Panel { name: "fig1c", metric: Metric::SigmaNorm, statistic: Statistic::Mean },
    Panel { name: "fig1d", metric: Metric::SigmaNorm, statistic: Statistic::Sd },
    Panel { name: "fig1e", metric: Metric::Entropy, statistic: Statistic::Mean },
    Panel { name: "fig1f", metric: Metric::Entropy, statistic: Statistic::Sd },
    Panel { name: "fig2a", metric: Metric::InverseFrobenius, statistic: Statistic::Mean },
    Panel { name: "fig2b", metric: Metric::InverseFrobenius, statistic: Statistic::Sd },
    Panel { name: "fig3a", metric: Metric::OptimalVariance, statistic: Statistic::Mse },
    Panel { name: "fig3b", metric: Metric::GlobalMinVariance, statistic: Statistic::Mse },
    Panel { name: "fig4", metric: Metric::EqualWeightVariance, statistic: Statistic::Mse },
];

pub const NA: &str = "NA";

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, 0, format!("{other:?}")),
    }
}

pub fn panel_header(panel: &Panel) -> Vec<String> {
    let mut h = vec!["p".to_string()];
    for method in METHODS {
        h.push(format!("{}_{}_{}", method.as_str(), panel.metric.name(), panel.statistic.name()));
    }
    h
}

/// Writes `<panel>.csv` for every panel whose metric was computed, and
/// `summary.csv` with every aggregate. Returns the written paths.
pub fn emit_figure_tables(result: &SimulationResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for panel in PANELS.iter().filter(|p| result.config.metrics.contains(&p.metric)) {
        let path = out_dir.join(format!("{}.csv", panel.name));
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        w.write_record(panel_header(panel)).map_err(|e| csv_err(&path, e))?;
        for &p in &result.config.p_grid {
            let mut row = vec![p.to_string()];
            for method in METHODS {
                row.push(cell(result.get(p, panel.metric, method).and_then(|a| panel.statistic.of(a))));
            }
            w.write_record(&row).map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    let path = out_dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    w.write_record(["p", "metric", "method", "count", "excluded", "mean", "sd", "mse"])
        .map_err(|e| csv_err(&path, e))?;
    for (&(p, metric, method), a) in &result.cells {
        w.write_record([
            p.to_string(),
            metric.name().to_string(),
            method.as_str().to_string(),
            a.count.to_string(),
            a.excluded.to_string(),
            cell(a.mean),
            cell(a.sd),
            cell(a.mse),
        ])
        .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

/// A panel table read back: header and rows of `(p, values)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelTable {
    pub header: Vec<String>,
    pub rows: Vec<(usize, Vec<Option<f64>>)>,
}

pub fn read_panel_table(path: &Path) -> Result<PanelTable> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let p = rec[0]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad p value {:?}", &rec[0])))?;
        let vals = rec
            .iter()
            .skip(1)
            .map(|s| match s {
                NA => Ok(None),
                s => s
                    .parse()
                    .map(Some)
                    .map_err(|_| Error::parse(path, line, format!("bad number {s:?}"))),
            })
            .collect::<Result<_>>()?;
        rows.push((p, vals));
    }
    Ok(PanelTable { header, rows })
}
