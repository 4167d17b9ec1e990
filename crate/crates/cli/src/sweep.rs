//! Parameter sweeps: one report per grid point plus an index CSV.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands;
use crate::config::{Format, RunConfig, SweepCommand};
use crate::error::{CliError, CliResult};
use crate::io::{fmt_f64, write_atomic, Report};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: f64,
    pub p: f64,
    pub m: Option<f64>,
    pub lambda: f64,
}

/// What the index records about a point; stored in its report so reruns can skip it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub status: String,
    pub regime: Option<String>,
    pub lambda_lo: Option<f64>,
    pub lambda_hi: Option<f64>,
    pub sup: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StoredPoint {
    summary: PointSummary,
}

#[derive(Debug, Deserialize)]
struct StoredReport {
    result: StoredPoint,
}

fn axis(values: &[f64], fallback: f64) -> Vec<f64> {
    if values.is_empty() {
        vec![fallback]
    } else {
        values.to_vec()
    }
}

/// Points in row-major order over `n`, `p`, `m`, `λ`.
pub fn points(cfg: &RunConfig) -> CliResult<Vec<SweepPoint>> {
    let s = &cfg.sweep;
    if s.n.is_empty() && s.p.is_empty() && s.m.is_empty() && s.lambda.is_empty() {
        return Err(CliError::Usage("sweep grid is empty: set at least one of sweep.n, sweep.p, sweep.m, sweep.lambda".into()));
    }
    let ms: Vec<Option<f64>> = if s.m.is_empty() { vec![cfg.problem.m] } else { s.m.iter().map(|&m| Some(m)).collect() };
    let mut out = Vec::new();
    for &n in &axis(&s.n, cfg.problem.n) {
        for &p in &axis(&s.p, cfg.problem.p) {
            for &m in &ms {
                for &lambda in &axis(&s.lambda, cfg.problem.lambda) {
                    out.push(SweepPoint { n, p, m, lambda });
                }
            }
        }
    }
    Ok(out)
}

fn point_config(cfg: &RunConfig, pt: &SweepPoint, dir: &Path) -> RunConfig {
    let mut c = cfg.clone();
    c.problem.n = pt.n;
    c.problem.p = pt.p;
    c.problem.m = pt.m;
    c.problem.lambda = pt.lambda;
    c.output.directory = dir.to_path_buf();
    c.output.formats = vec![Format::Csv];
    c
}

fn summarize(command: SweepCommand, outcome: &CliResult<serde_json::Value>) -> PointSummary {
    let mut s = PointSummary { status: "ok".into(), regime: None, lambda_lo: None, lambda_hi: None, sup: None, message: None };
    let value = match outcome {
        Ok(v) => v,
        Err(e @ CliError::Outcome { .. }) => {
            s.status = "outcome".into();
            s.message = Some(e.to_string());
            return s;
        }
        Err(e) => {
            s.status = "error".into();
            s.message = Some(e.to_string());
            return s;
        }
    };
    let r = &value["result"];
    match command {
        SweepCommand::Exponents => s.regime = r["regime"].as_str().map(String::from),
        SweepCommand::LambdaStar => {
            s.lambda_lo = r["bracket"][0].as_f64();
            s.lambda_hi = r["bracket"][1].as_f64();
        }
        SweepCommand::Solve => {
            s.sup = r["sup"].as_f64();
            s.regime = r["estimates"]["regime"].as_str().map(String::from);
        }
    }
    s
}

fn run_point(cfg: &RunConfig, command: SweepCommand, dir: &Path) -> (PointSummary, serde_json::Value) {
    let outcome = match command {
        SweepCommand::Exponents => commands::exponents(cfg),
        SweepCommand::Solve => commands::solve(cfg, dir),
        SweepCommand::LambdaStar => commands::lambda_star(cfg, dir),
    };
    let summary = summarize(command, &outcome);
    let detail = match outcome {
        Ok(v) => v["result"].clone(),
        Err(CliError::Outcome { report: Some(v), .. }) => v["result"].clone(),
        Err(_) => serde_json::Value::Null,
    };
    (summary, detail)
}

#[derive(Debug, Serialize)]
struct PointReport {
    point: SweepPoint,
    summary: PointSummary,
    detail: serde_json::Value,
}

/// Existing summary of a finished point, if its report parses.
fn stored_summary(path: &Path) -> Option<PointSummary> {
    let text = std::fs::read_to_string(path).ok()?;
    let rep: StoredReport = serde_json::from_str(&text).ok()?;
    Some(rep.result.summary)
}

pub struct SweepOutcome {
    pub index: PathBuf,
    pub rows: usize,
    pub skipped: usize,
}

/// Runs every point not already done (all of them with `force`), `jobs` at a time,
/// then writes `index.csv`. Point failures are recorded, not fatal.
pub fn run(cfg: &RunConfig, out: &Path, jobs: usize, force: bool) -> CliResult<SweepOutcome> {
    let pts = points(cfg)?;
    let command = cfg.sweep.command;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(|e| CliError::Internal(e.to_string()))?;
    let results: Vec<CliResult<(PointSummary, bool)>> = pool.install(|| {
        pts.par_iter()
            .enumerate()
            .map(|(i, pt)| {
                let dir = out.join("points").join(format!("{i:04}"));
                let report_path = dir.join("report.json");
                if !force {
                    if let Some(s) = stored_summary(&report_path) {
                        return Ok((s, true));
                    }
                }
                let pcfg = point_config(cfg, pt, &dir);
                let (summary, detail) = run_point(&pcfg, command, &dir);
                let rep = Report::new("sweep-point", &pcfg, PointReport { point: *pt, summary: summary.clone(), detail });
                write_atomic(&report_path, rep.to_json()?.as_bytes())?;
                Ok((summary, false))
            })
            .collect()
    });

    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "n", "p", "m", "lambda", "status", "regime", "lambda_lo", "lambda_hi", "sup", "report"])?;
    let mut skipped = 0;
    for (i, (pt, res)) in pts.iter().zip(results).enumerate() {
        let (s, was_skipped) = res?;
        skipped += usize::from(was_skipped);
        w.write_record([
            format!("{i:04}"),
            fmt_f64(pt.n),
            fmt_f64(pt.p),
            opt(pt.m),
            fmt_f64(pt.lambda),
            s.status,
            s.regime.unwrap_or_default(),
            opt(s.lambda_lo),
            opt(s.lambda_hi),
            opt(s.sup),
            format!("points/{i:04}/report.json"),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    let index = out.join("index.csv");
    write_atomic(&index, &bytes)?;
    Ok(SweepOutcome { index, rows: pts.len(), skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_order_and_fallbacks() {
        let mut cfg = RunConfig::default();
        cfg.sweep.p = vec![2.0, 3.0];
        cfg.sweep.lambda = vec![0.5, 1.0];
        let pts = points(&cfg).unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!((pts[1].p, pts[1].lambda), (2.0, 1.0));
        assert!(pts.iter().all(|p| p.n == 2.0 && p.m.is_none()));
    }

    #[test]
    fn empty_grid_is_a_usage_error() {
        assert_eq!(points(&RunConfig::default()).unwrap_err().exit_code(), 2);
    }
}
