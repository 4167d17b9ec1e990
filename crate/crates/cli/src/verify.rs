//! `verify`: the acceptance checks for one problem, as a pass/fail report.

use std::path::Path;

use plap_core::solver::{extremal_profile, lambda_star_estimate, minimal_iterate, uniform_bound_check, ContinuationResult};
use plap_core::{
    check_regularity, classify_regime, consistency_q0_mcs, critical_dimension, exact_exponential, exact_power, hardy_inequality_check,
    lemma21_identity, m_cs, make_grid, ode_residual, singularity_exponent_fit, stability_report, Error, ExactKind, ExactSolution, LiouvilleDisk,
    NonlinearitySpec, ProblemSpec, RadialProfile, StabilityReport, TestFunctionFamily, Verdict,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::config::{Kind, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{write_atomic, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// `e^u` on the disk.
    GelfandDisk,
    /// `e^u` in dimension 12.
    SupercriticalExp,
    /// `(1+u)^m` in dimension 15 at the critical power.
    PowerCritical,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::GelfandDisk => "gelfand-disk",
            Preset::SupercriticalExp => "supercritical-exp",
            Preset::PowerCritical => "power-critical",
        }
    }

    /// Overwrites the problem block and tightens the λ tolerance.
    pub fn apply(self, cfg: &mut RunConfig) -> CliResult<()> {
        let pr = &mut cfg.problem;
        pr.p = 2.0;
        pr.lambda = 1.0;
        pr.table = None;
        match self {
            Preset::GelfandDisk => {
                pr.n = 2.0;
                pr.kind = Kind::Exponential;
                pr.m = None;
                cfg.solver.tol_lambda = 1e-6;
            }
            Preset::SupercriticalExp => {
                pr.n = 12.0;
                pr.kind = Kind::Exponential;
                pr.m = None;
                cfg.solver.tol_lambda = 1e-12;
            }
            Preset::PowerCritical => {
                pr.n = 15.0;
                pr.kind = Kind::Power;
                pr.m = Some(m_cs(15.0, 2.0)?.to_f64());
                cfg.solver.tol_lambda = 1e-12;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub checks: Vec<CheckLine>,
    pub passed: bool,
}

#[derive(Default)]
struct Checks(Vec<CheckLine>);

impl Checks {
    /// Records `f`; an error counts as a failure with its message as detail.
    fn run(&mut self, name: &str, f: impl FnOnce() -> plap_core::Result<(bool, String)>) {
        let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        self.0.push(CheckLine { name: name.into(), passed, detail });
    }
}

const LAMBDA_TOL: f64 = 0.01;
const MATCH_TOL: f64 = 0.05;
/// Parameters `λ_lo (1 - 2^-j)` for `j = 1..=UNIFORM_STEPS`.
const UNIFORM_STEPS: usize = 16;
const BRANCH: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 0.9];

/// Singular solution of the problem, if it has one in closed form.
fn exact_for(spec: &ProblemSpec) -> Option<ExactSolution> {
    match spec.nonlinearity.kind {
        plap_core::NonlinearityKind::Exponential => exact_exponential(spec.n, spec.p).ok(),
        plap_core::NonlinearityKind::Power { m } => exact_power(spec.n, spec.p, m).ok(),
        _ => None,
    }
}

/// Whether the singular solution is the extremal one: stable in the closed-form sense.
fn singular_is_extremal(exact: &ExactSolution) -> plap_core::Result<bool> {
    Ok(match exact.kind {
        ExactKind::ExponentialSingular => exact.n >= critical_dimension(exact.p)?,
        ExactKind::PowerSingular { m } => m_cs(exact.n, exact.p)?.finite().is_some_and(|mcs| m >= mcs),
    })
}

fn known_lambda_star(spec: &ProblemSpec, exact: Option<&ExactSolution>) -> plap_core::Result<Option<f64>> {
    if spec.n == 2.0 && spec.p == 2.0 && matches!(spec.nonlinearity.kind, plap_core::NonlinearityKind::Exponential) {
        return Ok(Some(2.0));
    }
    match exact {
        Some(e) if singular_is_extremal(e)? => Ok(Some(e.lambda_star)),
        _ => Ok(None),
    }
}

fn minimal_at(spec: &ProblemSpec, lambda: f64, cfg: &RunConfig) -> plap_core::Result<RadialProfile> {
    let grid = make_grid(cfg.grid.r_min, cfg.grid.count)?;
    match minimal_iterate(&spec.with_lambda(lambda), &grid, &cfg.iterate_controls())? {
        plap_core::solver::IterateOutcome::Converged { profile, .. } => Ok(profile),
        plap_core::solver::IterateOutcome::Diverged(d) => Err(Error::InvalidArgument(format!("minimal iteration diverged at lambda = {lambda}: {}", d.reason))),
    }
}

fn stability_of(profile: &RadialProfile, g: &NonlinearitySpec, cfg: &RunConfig) -> plap_core::Result<StabilityReport> {
    stability_report(profile, |u| g.derivative(u), &cfg.stability_controls())
}

fn random_etas(seed: u64, count: usize) -> plap_core::Result<Vec<TestFunctionFamily>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let eps = 10f64.powf(rng.random_range(-5.0..-1.0));
            if i % 2 == 0 {
                TestFunctionFamily::sine(rng.random_range(1..=6), eps)
            } else {
                TestFunctionFamily::power_cutoff(rng.random_range(0.1..3.0), eps)
            }
        })
        .collect()
}

/// Three test function families for the identity.
pub fn identity_etas() -> plap_core::Result<Vec<TestFunctionFamily>> {
    Ok(vec![
        TestFunctionFamily::sine(1, 1e-3)?,
        TestFunctionFamily::r_scaled(TestFunctionFamily::sine(2, 1e-3)?),
        TestFunctionFamily::power_cutoff(1.0, 1e-2)?,
    ])
}

/// Window on which a discrete extremal can follow the singular solution. A power
/// singularity outruns any grid near the origin, so it is compared further out.
pub fn match_window(exact: &ExactSolution) -> (f64, f64) {
    match exact.kind {
        ExactKind::ExponentialSingular => (1e-4, 0.5),
        ExactKind::PowerSingular { .. } => (1e-2, 0.5),
    }
}

/// Largest relative deviation of `profile` from `exact` on `[a, b]`.
pub fn extremal_deviation(profile: &RadialProfile, exact: &ExactSolution, (a, b): (f64, f64)) -> f64 {
    profile
        .r()
        .iter()
        .zip(profile.u())
        .filter(|(&r, _)| (a..=b).contains(&r))
        .map(|(&r, &u)| (u - exact.u(r)).abs() / exact.u(r).abs())
        .fold(0.0, f64::max)
}

pub fn run_checks(cfg: &RunConfig, scenario: &str) -> CliResult<VerifyReport> {
    let spec = cfg.problem_spec()?;
    let grid = cfg.grid()?;
    let (n, p) = (spec.n, spec.p);
    let exact = exact_for(&spec);
    let mut c = Checks::default();

    c.run("exponents", || {
        let (regime, summary) = classify_regime(n, p)?;
        if n > critical_dimension(p)? {
            let err = consistency_q0_mcs(n, p)?;
            Ok((err < 1e-9, format!("regime {regime:?}; q0/m_cs consistency {err:e}")))
        } else {
            Ok((true, format!("regime {regime:?}: {summary}")))
        }
    });

    if let Some(e) = &exact {
        c.run("oracle-residual", || {
            let fine = make_grid(cfg.grid.r_min, cfg.grid.count.max(4000))?;
            let res = ode_residual(&e.sample(&fine)?, &e.nonlinearity())?;
            Ok((res < 1e-8, format!("normalized residual {res:e} on {} nodes", fine.len())))
        });
    }

    let known = known_lambda_star(&spec, exact.as_ref())?;
    let cont: Option<ContinuationResult> = match lambda_star_estimate(&spec, &grid, &cfg.continuation_controls()) {
        Ok(res) => {
            let (lo, hi) = res.bracket;
            match known {
                Some(ls) => c.run("lambda-star", || {
                    let ok = (lo - ls).abs() <= LAMBDA_TOL * ls && (hi - ls).abs() <= LAMBDA_TOL * ls;
                    Ok((ok, format!("bracket [{lo}, {hi}] against {ls}")))
                }),
                None => c.run("lambda-star", || Ok((lo < hi, format!("bracket [{lo}, {hi}]; no closed form to compare")))),
            }
            Some(res)
        }
        Err(e) => {
            c.run("lambda-star", || Err(e));
            None
        }
    };

    if let Some(res) = &cont {
        let lo = res.lambda_lo();
        let g_of = |l: f64| spec.nonlinearity.with_lambda(l);

        c.run("minimal-branch-semi-stable", || {
            let mut worst = f64::INFINITY;
            let mut bad = vec![];
            for f in BRANCH {
                let prof = minimal_at(&spec, f * lo, cfg)?;
                let rep = stability_of(&prof, &g_of(f * lo), cfg)?;
                worst = worst.min(rep.mu_1 / rep.scale);
                if rep.verdict != Verdict::SemiStable {
                    bad.push(f);
                }
            }
            Ok((bad.is_empty(), format!("smallest mu_1/scale {worst:e}; failing fractions {bad:?}")))
        });

        let mid = 0.5 * lo;
        c.run("identity", || {
            let prof = minimal_at(&spec, mid, cfg)?;
            let g = g_of(mid);
            let mut worst: f64 = 0.0;
            for eta in identity_etas()? {
                worst = worst.max(lemma21_identity(&prof, &g, &eta, 1e-3)?.rel_err);
            }
            if let Some(e) = &exact {
                let prof = e.sample(&grid)?;
                let eta = TestFunctionFamily::power_cutoff(1.0, 1e-2)?;
                worst = worst.max(lemma21_identity(&prof, &e.nonlinearity(), &eta, 1e-3)?.rel_err);
            }
            Ok((worst < 1e-4, format!("largest relative error {worst:e}")))
        });

        c.run("hardy-random", || {
            let prof = minimal_at(&spec, mid, cfg)?;
            let res = hardy_inequality_check(&prof, &random_etas(7, 20)?)?;
            let held = res.iter().filter(|h| h.satisfied).count();
            Ok((held == res.len(), format!("{held}/{} test functions satisfy the inequality", res.len())))
        });

        c.run("uniform-bound", || {
            let ub = uniform_bound_check(&spec, &grid, lo, UNIFORM_STEPS, &cfg.iterate_controls())?;
            Ok((ub.passed, format!("monotone {}; extrapolated/last {}", ub.monotone, ub.ratio)))
        });

        c.run("regularity", || {
            let supercritical = exact.as_ref().map(singular_is_extremal).transpose()?.unwrap_or(false);
            let (prof, lambda) = if supercritical { (extremal_profile(res)?, lo) } else { (minimal_at(&spec, 0.9 * lo, cfg)?, 0.9 * lo) };
            let sp = spec.with_lambda(lambda);
            let cert = stability_of(&prof, &sp.nonlinearity, cfg)?;
            let est = check_regularity(&prof, &sp, &cert, &cfg.estimates.q, &cfg.estimate_controls())?;
            let failed: Vec<&str> = est.checks.iter().filter(|b| !b.passed).map(|b| b.name.as_str()).collect();
            Ok((est.passed, format!("regime {:?} at lambda = {lambda}; failed {failed:?}", est.regime)))
        });

        if let Some(e) = &exact {
            if singular_is_extremal(e)? {
                c.run("extremal-vs-singular", || {
                    let (a, b) = match_window(e);
                    let dev = extremal_deviation(&extremal_profile(res)?, e, (a, b));
                    Ok((dev < MATCH_TOL, format!("largest relative deviation {dev:e} on [{a:e}, {b}]")))
                });
            }
        }
    }

    if let Some(e) = &exact {
        c.run("singular-stability", || {
            let prof = e.sample(&grid)?;
            let rep = stability_of(&prof, &e.nonlinearity(), cfg)?;
            let expected = if singular_is_extremal(e)? { Verdict::SemiStable } else { Verdict::Unstable };
            Ok((rep.verdict == expected, format!("verdict {:?}, expected {expected:?} (mu_1 = {:e})", rep.verdict, rep.mu_1)))
        });

        c.run("singularity-fit", || {
            let prof = e.sample(&grid)?;
            let (ra, rb) = (1e3 * grid.r_min(), cfg.estimates.fit_outer);
            match (e.kind, singularity_exponent_fit(&prof, ra, rb)) {
                (ExactKind::PowerSingular { .. }, Ok(fit)) => {
                    let want = -e.singular_exponent();
                    Ok(((fit.slope - want).abs() < 1e-3, format!("slope {} against {want}", fit.slope)))
                }
                (ExactKind::ExponentialSingular, Err(Error::LogSingularity { log_slope })) => {
                    Ok(((log_slope - p).abs() < 1e-3, format!("log slope {log_slope} against {p}")))
                }
                (_, Ok(fit)) => Ok((false, format!("unexpected power law with slope {}", fit.slope))),
                (_, Err(err)) => Err(err),
            }
        });
    }

    if scenario == "gelfand-disk" {
        c.run("liouville-oracle", || {
            let sol = LiouvilleDisk::minimal(1.0)?;
            let prof = minimal_at(&spec, 1.0, cfg)?;
            let err = prof.r().iter().zip(prof.u()).map(|(&r, &u)| (u - sol.u(r)).abs()).fold(0.0, f64::max) / sol.center();
            Ok((err < 1e-4, format!("max error relative to the center value {err:e}")))
        });
    }

    let passed = c.0.iter().all(|l| l.passed);
    Ok(VerifyReport { scenario: scenario.into(), checks: c.0, passed })
}

/// Runs the checks, writes `verify.json` and fails with exit 3 if any check did.
pub fn verify(cfg: &RunConfig, scenario: &str, out: &Path) -> CliResult<serde_json::Value> {
    let rep = run_checks(cfg, scenario)?;
    let passed = rep.passed;
    let failed: Vec<String> = rep.checks.iter().filter(|l| !l.passed).map(|l| l.name.clone()).collect();
    let report = Report::new("verify", cfg, rep);
    if cfg.wants(crate::config::Format::Json) {
        write_atomic(&out.join("verify.json"), report.to_json()?.as_bytes())?;
    }
    let value = report.to_value()?;
    if !passed {
        return Err(CliError::Outcome { message: format!("failed checks: {}", failed.join(", ")), report: Some(value) });
    }
    Ok(value)
}
