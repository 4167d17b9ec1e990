//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use plap_cli::verify::{extremal_deviation, identity_etas, match_window};
use plap_core::solver::{extremal_profile, lambda_star_estimate, minimal_iterate, uniform_bound_check, ContinuationControls, IterateControls};
use plap_core::{
    critical_dimension, exact_exponential, exact_power, hardy_inequality_check, lemma21_identity, lemma21_rhs, lq_norm, m_cs, make_grid,
    ode_residual, q_exponent, singularity_exponent_fit, stability_report, w1q_norm, Error, ExtendedReal, LiouvilleDisk, NonlinearitySpec,
    ProblemSpec, RadialProfile, StabilityControls, StabilityReport, TestFunctionFamily, Verdict,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e2s<T>(r: plap_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn minimal(n: f64, p: f64, lambda: f64, count: usize) -> Result<(RadialProfile, NonlinearitySpec), String> {
    let spec = e2s(ProblemSpec::new(n, p, NonlinearitySpec::exponential(lambda)))?;
    let grid = e2s(make_grid(1e-8, count))?;
    let out = e2s(minimal_iterate(&spec, &grid, &IterateControls::default()))?;
    let prof = out.converged().ok_or(format!("minimal iteration diverged at n = {n}, p = {p}, lambda = {lambda}"))?.clone();
    Ok((prof, spec.nonlinearity))
}

fn stability(prof: &RadialProfile, g: &NonlinearitySpec) -> Result<StabilityReport, String> {
    e2s(stability_report(prof, |u| g.derivative(u), &StabilityControls::default()))
}

fn bracket(n: f64, p: f64, tol: f64) -> Result<(f64, f64), String> {
    let spec = e2s(ProblemSpec::new(n, p, NonlinearitySpec::exponential(1.0)))?;
    let grid = e2s(make_grid(1e-8, 2000))?;
    let res = e2s(lambda_star_estimate(&spec, &grid, &ContinuationControls { tol_lambda: tol, ..Default::default() }))?;
    Ok(res.bracket)
}

fn within(bracket: (f64, f64), target: f64, rel: f64) -> bool {
    (bracket.0 - target).abs() <= rel * target && (bracket.1 - target).abs() <= rel * target && bracket.0 < bracket.1
}

fn c1() -> Outcome {
    let got = [3.0, 2.0, 5.0].map(|p| critical_dimension(p).unwrap());
    ensure(got == [9.0, 10.0, 10.0], format!("{got:?}"))?;
    Ok(format!("{got:?}"))
}

fn c2() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = rng.random_range(1.1..6.0);
        let n = e2s(critical_dimension(p))? + rng.random_range(0.05..40.0);
        let mcs = e2s(m_cs(n, p))?.to_f64();
        let q0 = e2s(q_exponent(n, p, 0))?.to_f64();
        worst = worst.max((n * (mcs - (p - 1.0)) / p - q0).abs() / q0);
    }
    ensure(worst < 1e-9, format!("worst relative gap {worst:e}"))?;
    Ok(format!("worst relative gap {worst:e}"))
}

fn c3() -> Outcome {
    let cases = [e2s(exact_exponential(12.0, 2.0))?, e2s(exact_power(15.0, 2.0, 5.0))?];
    let mut lines = vec![];
    for s in cases {
        let res: Vec<f64> = [1000, 2000, 4000]
            .iter()
            .map(|&k| ode_residual(&s.sample(&make_grid(1e-8, k)?)?, &s.nonlinearity()))
            .collect::<plap_core::Result<_>>()
            .map_err(|e| e.to_string())?;
        let order = (res[0] / res[1]).log2();
        ensure(res[2] < 1e-8, format!("{:?}: residual {:e} on N = 4000", s.kind, res[2]))?;
        ensure(order >= 2.0, format!("{:?}: order {order} from {res:?}", s.kind))?;
        lines.push(format!("{:?} residual {:.1e} order {order:.2}", s.kind, res[2]));
    }
    Ok(lines.join("; "))
}

fn c4() -> Outcome {
    let a = bracket(12.0, 2.0, 1e-3)?;
    ensure(within(a, 20.0, 0.01), format!("(12, 2): {a:?}"))?;
    let b = bracket(10.0, 3.0, 1e-3)?;
    ensure(within(b, 63.0, 0.01), format!("(10, 3): {b:?}"))?;
    Ok(format!("(12, 2) {a:?}; (10, 3) {b:?}"))
}

fn c5() -> Outcome {
    let peak = LiouvilleDisk { b: 1.0 }.lambda();
    let sides = [0.9, 1.1].map(|b| LiouvilleDisk { b }.lambda());
    ensure(peak == 2.0 && sides.iter().all(|&l| l < peak), format!("closed form peak {peak}, neighbours {sides:?}"))?;
    let br = bracket(2.0, 2.0, 1e-3)?;
    ensure(within(br, 2.0, 0.01), format!("{br:?}"))?;
    Ok(format!("{br:?}"))
}

fn c6() -> Outcome {
    let mut worst = f64::INFINITY;
    for (n, p) in [(2.0, 2.0), (5.0, 3.0)] {
        let (lo, hi) = bracket(n, p, 1e-3)?;
        let est = 0.5 * (lo + hi);
        for f in [0.2, 0.4, 0.6, 0.8, 0.9] {
            let (prof, g) = minimal(n, p, f * est, 2000)?;
            let rep = stability(&prof, &g)?;
            ensure(
                rep.verdict == Verdict::SemiStable && rep.mu_1 >= -1e-6 * rep.scale,
                format!("(n, p) = ({n}, {p}) at {f} lambda*: {:?}, mu_1 = {:e}", rep.verdict, rep.mu_1),
            )?;
            worst = worst.min(rep.mu_1 / rep.scale);
        }
    }
    Ok(format!("10 profiles semi-stable, smallest mu_1/scale {worst:e}"))
}

fn c7() -> Outcome {
    let mut mus = vec![];
    for n in [8.0, 9.0, 9.5, 10.5, 11.0, 12.0] {
        let s = e2s(exact_exponential(n, 2.0))?;
        let rep = stability(&e2s(s.sample(&e2s(make_grid(1e-8, 2000))?))?, &s.nonlinearity())?;
        let want = if n < 10.0 { Verdict::Unstable } else { Verdict::SemiStable };
        ensure(rep.verdict == want, format!("n = {n}: {:?}, mu_1 = {:e}", rep.verdict, rep.mu_1))?;
        mus.push((n, rep.mu_1));
    }
    Ok(format!("mu_1 by n {mus:.3?}"))
}

fn c8() -> Outcome {
    let etas = identity_etas().map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let (prof, g) = minimal(2.0, 2.0, 1.0, 2000)?;
    let s = e2s(exact_exponential(12.0, 2.0))?;
    let exact = e2s(s.sample(&e2s(make_grid(1e-8, 2000))?))?;
    for eta in &etas {
        let r = e2s(lemma21_identity(&prof, &g, eta, 1e-4))?;
        ensure(r.rhs == e2s(lemma21_rhs(&prof, eta))?, "g-free side differs")?;
        worst = worst.max(r.rel_err);
    }
    let cut = e2s(TestFunctionFamily::power_cutoff(1.0, 1e-2))?;
    worst = worst.max(e2s(lemma21_identity(&exact, &s.nonlinearity(), &cut, 1e-4))?.rel_err);
    ensure(worst < 1e-4, format!("largest relative error {worst:e}"))?;

    let mut orders = vec![];
    for eta in &etas {
        let errs: Vec<f64> = [1000, 2000, 4000]
            .iter()
            .map(|&k| {
                let (p, g) = minimal(2.0, 2.0, 1.0, k)?;
                e2s(lemma21_identity(&p, &g, eta, 1e-4)).map(|r| r.rel_err)
            })
            .collect::<Result<_, String>>()?;
        let order = (errs[0] / errs[1]).log2().min((errs[1] / errs[2]).log2());
        ensure(order >= 1.8, format!("order {order} from {errs:?}"))?;
        orders.push(order);
    }
    Ok(format!("largest relative error {worst:.1e}; orders {orders:.2?}"))
}

fn random_etas(seed: u64) -> Result<Vec<TestFunctionFamily>, String> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..20)
        .map(|i| {
            let eps = 10f64.powf(rng.random_range(-5.0..-1.0));
            e2s(if i % 2 == 0 { TestFunctionFamily::sine(rng.random_range(1..=6), eps) } else { TestFunctionFamily::power_cutoff(rng.random_range(0.1..3.0), eps) })
        })
        .collect()
}

fn c9() -> Outcome {
    let grid = e2s(make_grid(1e-8, 2000))?;
    let (minimal_prof, g) = minimal(2.0, 2.0, 1.0, 2000)?;
    let s11 = e2s(exact_exponential(11.0, 2.0))?;
    let exact11 = e2s(s11.sample(&grid))?;
    for (name, prof, g) in [("minimal (2, 2)", &minimal_prof, &g), ("singular n = 11", &exact11, &s11.nonlinearity())] {
        ensure(stability(prof, g)?.verdict == Verdict::SemiStable, format!("{name} not semi-stable"))?;
        let res = e2s(hardy_inequality_check(prof, &random_etas(9)?))?;
        ensure(res.iter().all(|h| h.satisfied), format!("{name}: {res:?}"))?;
    }
    let s8 = e2s(exact_exponential(8.0, 2.0))?;
    let cutoffs: Vec<TestFunctionFamily> = [0.5, 1.0, 2.0, 3.0].iter().map(|&a| TestFunctionFamily::power_cutoff(a, 1e-3)).collect::<plap_core::Result<_>>().map_err(|e| e.to_string())?;
    let res = e2s(hardy_inequality_check(&e2s(s8.sample(&grid))?, &cutoffs))?;
    let violated = res.iter().filter(|h| !h.satisfied).count();
    ensure(violated > 0, "no power cutoff violates the inequality at n = 8")?;
    Ok(format!("40/40 hold on semi-stable profiles; {violated}/{} cutoffs violate at n = 8", res.len()))
}

fn c10() -> Outcome {
    let grid = e2s(make_grid(1e-8, 2000))?;
    let mcs = e2s(m_cs(15.0, 2.0))?.to_f64();
    let s = e2s(exact_power(15.0, 2.0, mcs))?;
    let fit = e2s(singularity_exponent_fit(&e2s(s.sample(&grid))?, 1e-7, 0.1))?;
    let want = -0.5 * (15.0 - 2.0 * 14f64.sqrt() - 4.0);
    ensure((fit.slope - want).abs() < 1e-3, format!("slope {} against {want}", fit.slope))?;
    let s = e2s(exact_exponential(12.0, 2.0))?;
    let log_slope = match singularity_exponent_fit(&e2s(s.sample(&grid))?, 1e-7, 0.1) {
        Err(Error::LogSingularity { log_slope }) => log_slope,
        other => return Err(format!("expected a logarithmic singularity, got {other:?}")),
    };
    ensure((log_slope - 2.0).abs() < 1e-3, format!("log slope {log_slope}"))?;
    Ok(format!("power slope {:.7} against {want:.7}; log slope {log_slope:.7}", fit.slope))
}

/// First `q` on a 0.1% ladder from `0.9 target` with an infinite norm.
fn threshold(prof: &RadialProfile, target: f64, norm: fn(&RadialProfile, ExtendedReal) -> plap_core::Result<ExtendedReal>) -> Result<f64, String> {
    let mut q = 0.9 * target;
    while q < 1.1 * target {
        if !e2s(norm(prof, ExtendedReal::Finite(q)))?.is_finite() {
            return Ok(q);
        }
        q += 1e-3 * target;
    }
    Err(format!("no divergence below {q}"))
}

fn c11() -> Outcome {
    let grid = e2s(make_grid(1e-8, 2000))?;
    let mut lines = vec![];
    for (n, p, m) in [(15.0, 2.0, 5.0), (12.0, 2.0, 4.0), (10.0, 3.0, 6.0)] {
        let prof = e2s(e2s(exact_power(n, p, m))?.sample(&grid))?;
        let want = n * (m - (p - 1.0)) / p;
        let got = threshold(&prof, want, lq_norm)?;
        ensure((got - want).abs() < 0.02 * want, format!("L^q ({n}, {p}, {m}): {got} against {want}"))?;
        lines.push(format!("L^q ({n},{p},{m}) {got:.3}/{want}"));
    }
    let mcs = e2s(m_cs(15.0, 2.0))?.to_f64();
    let prof = e2s(e2s(exact_power(15.0, 2.0, mcs))?.sample(&grid))?;
    let want = e2s(q_exponent(15.0, 2.0, 1))?.to_f64();
    let got = threshold(&prof, want, w1q_norm)?;
    ensure((got - want).abs() < 0.02 * want, format!("W^(1,q): {got} against {want}"))?;
    lines.push(format!("W^1q at m_cs {got:.3}/{want:.3}"));
    Ok(lines.join("; "))
}

fn c12() -> Outcome {
    let spec = e2s(ProblemSpec::new(12.0, 2.0, NonlinearitySpec::exponential(1.0)))?;
    let grid = e2s(make_grid(1e-8, 2000))?;
    let res = e2s(lambda_star_estimate(&spec, &grid, &ContinuationControls { tol_lambda: 1e-12, ..Default::default() }))?;
    let ub = e2s(uniform_bound_check(&spec, &grid, res.lambda_lo(), 16, &IterateControls::default()))?;
    ensure(ub.monotone && ub.ratio <= 1.05, format!("monotone {}, ratio {}", ub.monotone, ub.ratio))?;
    let s = e2s(exact_exponential(12.0, 2.0))?;
    let window = match_window(&s);
    ensure(window == (1e-4, 0.5), format!("window {window:?}"))?;
    let dev = extremal_deviation(&e2s(extremal_profile(&res))?, &s, window);
    ensure(dev < 0.05, format!("extremal deviates by {dev} from -2 log r"))?;
    Ok(format!("ratio {:.4}, monotone; extremal within {dev:.1e} of -2 log r", ub.ratio))
}

fn c13() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("run.toml"), "[sweep]\ncommand = \"lambda-star\"\np = [1.5, 2.0, 3.0, 5.0]\n").map_err(|e| e.to_string())?;
    let mut indexes = vec![];
    for (out, jobs) in [("a", "4"), ("b", "1")] {
        let st = Command::new(env!("CARGO_BIN_EXE_plap"))
            .current_dir(dir.path())
            .args(["--config", "run.toml", "--out", out, "--jobs", jobs, "sweep"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(st.status.success(), String::from_utf8_lossy(&st.stderr).to_string())?;
        indexes.push(std::fs::read(dir.path().join(out).join("index.csv")).map_err(|e| e.to_string())?);
    }
    ensure(indexes[0] == indexes[1], "index files differ")?;
    Ok(format!("{} bytes, identical", indexes[0].len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 13] = [
        ("critical dimensions", c1, 1),
        ("exponent identity", c2, 1),
        ("oracle residuals", c3, 5),
        ("lambda* closed form", c4, 120),
        ("lambda* Liouville", c5, 30),
        ("minimal branch semi-stable", c6, 60),
        ("stability threshold", c7, 30),
        ("identity", c8, 30),
        ("Hardy-type inequality", c9, 10),
        ("singularity exponents", c10, 5),
        ("integrability thresholds", c11, 10),
        ("uniform bound", c12, 120),
        ("sweep determinism", c13, 60),
    ];
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let mut res = f();
        let dt = t.elapsed();
        if res.is_ok() && dt > Duration::from_secs(*budget) {
            res = Err(format!("took {dt:.1?}, budget {budget} s"));
        }
        match res {
            Ok(msg) => println!("PASS {:>2} {name} ({:.2} s): {msg}", i + 1, dt.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({:.2} s): {msg}", i + 1, dt.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
