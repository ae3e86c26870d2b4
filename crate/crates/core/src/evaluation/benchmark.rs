//! Batch comparison of metrics over a set of patches.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io;
use crate::metric::MetricKind;
use crate::path::Polyline;
use crate::pipeline::{extract, prepare, PipelineConfig};

use super::{digitize, theta, CaseEntry, PatchCase};

/// Score of one case under one metric. Failures score zero.
#[derive(Clone, Debug, Serialize)]
pub struct CaseScore {
    pub id: String,
    pub metric: MetricKind,
    pub theta: f64,
    pub error: Option<String>,
    #[serde(skip)]
    pub path: Option<Polyline>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreRow {
    pub dataset: String,
    pub metric: MetricKind,
    pub avg: f64,
    pub max: f64,
    pub min: f64,
    pub std: f64,
    pub cases: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn row(&self, dataset: &str, metric: MetricKind) -> Option<&ScoreRow> {
        self.rows.iter().find(|r| r.dataset == dataset && r.metric == metric)
    }

    /// `dataset,metric,avg,max,min,std` with four decimals.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Serde(e.to_string());
        w.write_record(["dataset", "metric", "avg", "max", "min", "std"]).map_err(err)?;
        for r in &self.rows {
            w.write_record([
                r.dataset.clone(),
                r.metric.label().to_string(),
                format!("{:.4}", r.avg),
                format!("{:.4}", r.max),
                format!("{:.4}", r.min),
                format!("{:.4}", r.std),
            ])
            .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("ascii output"))
    }

    /// One block of Avg/Max/Min/Std rows per dataset, one column per metric.
    pub fn to_markdown(&self) -> String {
        let mut datasets: Vec<&str> = Vec::new();
        let mut metrics: Vec<MetricKind> = Vec::new();
        for r in &self.rows {
            if !datasets.contains(&r.dataset.as_str()) {
                datasets.push(&r.dataset);
            }
            if !metrics.contains(&r.metric) {
                metrics.push(r.metric);
            }
        }
        metrics.sort();
        let mut out = String::from("| Dataset | |");
        for m in &metrics {
            out.push_str(&format!(" {} |", m.label()));
        }
        out.push_str("\n|---|---|");
        for _ in &metrics {
            out.push_str("---|");
        }
        out.push('\n');
        for d in datasets {
            for (k, stat) in ["Avg", "Max", "Min", "Std"].iter().enumerate() {
                let label = if k == 0 { d } else { "" };
                out.push_str(&format!("| {label} | {stat} |"));
                for m in &metrics {
                    match self.row(d, *m) {
                        Some(r) => {
                            let v = [r.avg, r.max, r.min, r.std][k];
                            out.push_str(&format!(" {v:.2} |"));
                        }
                        None => out.push_str(" - |"),
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct BenchmarkReport {
    pub dataset: String,
    /// Case-major, metrics in the requested order.
    pub scores: Vec<CaseScore>,
    pub table: ScoreTable,
}

fn score_case(case: &PatchCase, metrics: &[MetricKind], config: &PipelineConfig) -> Vec<CaseScore> {
    let fail = |m: MetricKind, e: String| CaseScore {
        id: case.id.clone(),
        metric: m,
        theta: 0.0,
        error: Some(e),
        path: None,
    };
    let prep = match prepare(&case.image, config) {
        Ok(p) => p,
        Err(e) => return metrics.iter().map(|m| fail(*m, e.to_string())).collect(),
    };
    let target = case.target_mask();
    metrics
        .iter()
        .map(|&m| {
            let ex = match extract(&prep, config, case.source, case.end, m) {
                Ok(ex) => ex,
                Err(e) => return fail(m, e.to_string()),
            };
            match theta(&digitize(&ex.path), &target, case.spec()) {
                Ok(t) => CaseScore {
                    id: case.id.clone(),
                    metric: m,
                    theta: t,
                    error: None,
                    path: Some(ex.path),
                },
                Err(e) => fail(m, e.to_string()),
            }
        })
        .collect()
}

fn aggregate(dataset: &str, metric: MetricKind, thetas: &[f64]) -> ScoreRow {
    let n = thetas.len().max(1) as f64;
    let avg = thetas.iter().sum::<f64>() / n;
    let var = thetas.iter().map(|t| (t - avg).powi(2)).sum::<f64>() / n;
    ScoreRow {
        dataset: dataset.to_string(),
        metric,
        avg,
        max: thetas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min: thetas.iter().copied().fold(f64::INFINITY, f64::min),
        std: var.sqrt(),
        cases: thetas.len(),
    }
}

/// Scores every case with every metric. Cases run in parallel; results are
/// aggregated in case order, so the output does not depend on scheduling.
pub fn run_benchmark(
    dataset: &str,
    cases: &[CaseEntry],
    metrics: &[MetricKind],
    config: &PipelineConfig,
) -> Result<BenchmarkReport> {
    if cases.is_empty() {
        return Err(Error::param("benchmark needs at least one case"));
    }
    if metrics.is_empty() {
        return Err(Error::param("benchmark needs at least one metric"));
    }
    config.validate()?;
    let per_case: Vec<Vec<CaseScore>> = cases
        .par_iter()
        .map(|entry| match &entry.case {
            Ok(c) => score_case(c, metrics, config),
            Err(e) => metrics
                .iter()
                .map(|&m| CaseScore {
                    id: entry.id.clone(),
                    metric: m,
                    theta: 0.0,
                    error: Some(e.clone()),
                    path: None,
                })
                .collect(),
        })
        .collect();
    let scores: Vec<CaseScore> = per_case.into_iter().flatten().collect();
    let rows = metrics
        .iter()
        .map(|&m| {
            let t: Vec<f64> = scores.iter().filter(|s| s.metric == m).map(|s| s.theta).collect();
            aggregate(dataset, m, &t)
        })
        .collect();
    Ok(BenchmarkReport {
        dataset: dataset.to_string(),
        scores,
        table: ScoreTable { rows },
    })
}

/// Writes `scores.csv`, `scores.md`, `cases.csv` and per-case overlays.
pub fn write_report(report: &BenchmarkReport, cases: &[CaseEntry], out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("scores.csv"), report.table.to_csv()?)?;
    fs::write(out.join("scores.md"), report.table.to_markdown())?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Serde(e.to_string());
    w.write_record(["case", "metric", "theta", "error"]).map_err(err)?;
    for s in &report.scores {
        w.write_record([
            s.id.clone(),
            s.metric.label().to_string(),
            format!("{:.4}", s.theta),
            s.error.clone().unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    fs::write(out.join("cases.csv"), w.into_inner().map_err(|e| Error::Serde(e.to_string()))?)?;

    let overlays = out.join("overlays");
    fs::create_dir_all(&overlays)?;
    for entry in cases {
        let Ok(case) = &entry.case else { continue };
        for s in report.scores.iter().filter(|s| s.id == entry.id) {
            if let Some(path) = &s.path {
                let img = io::overlay(&case.image, &[(path, [255, 40, 40])]);
                img.save(overlays.join(format!("{}_{}.png", entry.id, s.metric.label())))?;
            }
        }
    }
    Ok(())
}
