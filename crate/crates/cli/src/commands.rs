//! One function per subcommand. Each returns the JSON report it printed or wrote.

use std::path::{Path, PathBuf};

use plap_core::solver::{bifurcation_curve, lambda_star_estimate, minimal_iterate, ContinuationResult, IterateOutcome};
use plap_core::{
    check_regularity, energy, exact_exponential, exact_power, exponent_report, flux_monotonicity_check, gradient_l1_bound, ode_residual,
    stability_report, EstimateReport, NonlinearitySpec, RadialProfile, StabilityReport, Verdict,
};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{fmt_f64, read_profile, write_atomic, write_profile, Report};

/// Writes `name` under the output directory when JSON output is enabled.
fn emit_json<T: Serialize>(cfg: &RunConfig, out: &Path, name: &str, report: &Report<T>) -> CliResult<serde_json::Value> {
    if cfg.wants(Format::Json) {
        write_atomic(&out.join(name), report.to_json()?.as_bytes())?;
    }
    report.to_value()
}

pub fn exponents(cfg: &RunConfig) -> CliResult<serde_json::Value> {
    let rep = exponent_report(cfg.problem.n, cfg.problem.p)?;
    Report::new("exponents", cfg, rep).to_value()
}

#[derive(Debug, Serialize)]
pub struct DivergenceReport {
    pub lambda: f64,
    pub iterations: usize,
    pub sup: f64,
    pub reason: String,
}

#[derive(Debug, Serialize)]
pub struct SolveResult {
    pub lambda: f64,
    pub iterations: usize,
    pub center: f64,
    pub sup: f64,
    pub residual: f64,
    pub energy: Option<f64>,
    pub flux_monotone: bool,
    pub gradient_bound: Option<plap_core::GradientL1Bound>,
    pub stability: StabilityReport,
    pub estimates: Option<EstimateReport>,
    /// Why the estimates were not evaluated.
    pub estimates_skipped: Option<String>,
    pub profile_csv: Option<PathBuf>,
}

/// Minimal solution at the configured λ, with its stability and regularity reports.
pub fn solve(cfg: &RunConfig, out: &Path) -> CliResult<serde_json::Value> {
    let spec = cfg.problem_spec()?;
    let grid = cfg.grid()?;
    let (profile, iterations) = match minimal_iterate(&spec, &grid, &cfg.iterate_controls())? {
        IterateOutcome::Converged { profile, iterations } => (profile, iterations),
        IterateOutcome::Diverged(d) => {
            let result = DivergenceReport { lambda: spec.lambda(), iterations: d.iterations, sup: d.sup, reason: d.reason.clone() };
            let report = Report::new("solve", cfg, result);
            let value = emit_json(cfg, out, "divergence.json", &report)?;
            return Err(CliError::Outcome {
                message: format!("minimal iteration diverged at lambda = {}: {}", spec.lambda(), d.reason),
                report: Some(value),
            });
        }
    };
    let g = &spec.nonlinearity;
    let profile_csv = if cfg.wants(Format::Csv) {
        let path = out.join("profile.csv");
        write_profile(&path, &profile)?;
        Some(path)
    } else {
        None
    };
    let stability = stability_report(&profile, |u| g.derivative(u), &cfg.stability_controls())?;
    let (estimates, estimates_skipped) = if stability.verdict == Verdict::SemiStable {
        match check_regularity(&profile, &spec, &stability, &cfg.estimates.q, &cfg.estimate_controls()) {
            Ok(e) => (Some(e), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some(format!("stability verdict {:?}", stability.verdict)))
    };
    let result = SolveResult {
        lambda: spec.lambda(),
        iterations,
        center: profile.center(),
        sup: profile.sup(),
        residual: ode_residual(&profile, g)?,
        energy: energy(&profile, g).ok(),
        flux_monotone: flux_monotonicity_check(&profile).monotone,
        gradient_bound: gradient_l1_bound(&profile, g).ok(),
        stability,
        estimates,
        estimates_skipped,
        profile_csv,
    };
    emit_json(cfg, out, "solve.json", &Report::new("solve", cfg, result))
}

fn lambda_csv(res: &ContinuationResult) -> CliResult<Vec<u8>> {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lambda", "converged", "iterations", "sup", "w1p", "f_l1"])?;
    for r in &res.records {
        w.write_record([fmt_f64(r.lambda), r.converged.to_string(), r.iterations.to_string(), fmt_f64(r.sup), opt(r.w1p), opt(r.f_l1)])?;
    }
    w.into_inner().map_err(|e| CliError::Internal(e.to_string()))
}

/// Bracket for λ* by minimal iteration, with every λ tried.
pub fn lambda_star(cfg: &RunConfig, out: &Path) -> CliResult<serde_json::Value> {
    let spec = cfg.problem_spec()?;
    let grid = cfg.grid()?;
    let res = match lambda_star_estimate(&spec, &grid, &cfg.continuation_controls()) {
        Ok(r) => r,
        Err(e @ plap_core::Error::NoDivergence { .. }) => {
            #[derive(Serialize)]
            struct Diagnosis {
                diagnosis: String,
            }
            let report = Report::new("lambda-star", cfg, Diagnosis { diagnosis: e.to_string() });
            let value = emit_json(cfg, out, "lambda_star.json", &report)?;
            return Err(CliError::Outcome { message: e.to_string(), report: Some(value) });
        }
        Err(e) => return Err(e.into()),
    };
    if cfg.wants(Format::Csv) {
        write_atomic(&out.join("lambda_sweep.csv"), &lambda_csv(&res)?)?;
    }
    emit_json(cfg, out, "lambda_star.json", &Report::new("lambda-star", cfg, res))
}

/// λ as a function of the center value, by shooting.
pub fn bifurcate(cfg: &RunConfig, out: &Path) -> CliResult<serde_json::Value> {
    let spec = cfg.problem_spec()?;
    let grid = cfg.grid()?;
    let points = bifurcation_curve(&spec, &cfg.solver.centers, &grid, &cfg.bifurcation_controls())?;
    if cfg.wants(Format::Csv) {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["center", "lambda", "boundary", "iterations", "method"])?;
        for p in &points {
            w.write_record([fmt_f64(p.center), p.lambda.map(fmt_f64).unwrap_or_default(), fmt_f64(p.boundary), p.iterations.to_string(), p.method.clone()])?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
        write_atomic(&out.join("bifurcation.csv"), &bytes)?;
    }
    emit_json(cfg, out, "bifurcation.json", &Report::new("bifurcate", cfg, points))
}

/// Where the profile for `stability` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSource {
    File(PathBuf),
    /// Singular solution of the configured problem, at its own λ.
    Exact,
}

#[derive(Debug, Serialize)]
pub struct StabilityResult {
    pub source: String,
    pub lambda: f64,
    pub report: StabilityReport,
}

pub fn load_profile(cfg: &RunConfig, source: &ProfileSource) -> CliResult<(RadialProfile, NonlinearitySpec, String)> {
    let (n, p) = (cfg.problem.n, cfg.problem.p);
    match source {
        ProfileSource::File(path) => {
            if !path.exists() {
                return Err(CliError::Usage(format!("profile file {} does not exist", path.display())));
            }
            Ok((read_profile(path, n, p)?, cfg.nonlinearity()?, path.display().to_string()))
        }
        ProfileSource::Exact => {
            let exact = match cfg.problem.kind {
                crate::config::Kind::Exponential => exact_exponential(n, p)?,
                crate::config::Kind::Power => {
                    let m = cfg.problem.m.ok_or_else(|| CliError::Usage("problem.m is required for the exact power solution".into()))?;
                    exact_power(n, p, m)?
                }
                crate::config::Kind::Tabulated => return Err(CliError::Usage("no exact solution for a tabulated nonlinearity".into())),
            };
            Ok((exact.sample(&cfg.grid()?)?, exact.nonlinearity(), format!("exact {:?}", exact.kind)))
        }
    }
}

pub fn stability(cfg: &RunConfig, source: &ProfileSource, out: &Path, require_stable: bool) -> CliResult<serde_json::Value> {
    let (profile, g, label) = load_profile(cfg, source)?;
    let report = stability_report(&profile, |u| g.derivative(u), &cfg.stability_controls())?;
    let verdict = report.verdict;
    let value = emit_json(cfg, out, "stability.json", &Report::new("stability", cfg, StabilityResult { source: label, lambda: g.lambda, report }))?;
    if require_stable && verdict != Verdict::SemiStable {
        return Err(CliError::Outcome { message: format!("verdict {verdict:?}"), report: Some(value) });
    }
    Ok(value)
}
