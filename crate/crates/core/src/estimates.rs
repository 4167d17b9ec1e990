//! Norms, singularity fits and the regularity checks for semi-stable profiles.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exponents::{classify_regime, gradient_power, q_exponent, singular_power, ExtendedReal, Regime};
use crate::grid::integrate_radial;
use crate::nonlinearity::{NonlinearitySpec, ProblemSpec};
use crate::profile::RadialProfile;
use crate::stability::{StabilityReport, Verdict};

/// Relative growth of an integral between `2 r_min` and `r_min` above which it is declared divergent.
pub const DIVERGENCE_GROWTH: f64 = 0.05;

/// Relative change of `u` between `2 r_min` and `r_min` above which `sup |u|` is declared infinite.
pub const SUP_GROWTH: f64 = 1e-3;

fn check_q(q: ExtendedReal) -> Result<()> {
    match q {
        ExtendedReal::Finite(v) if !(v >= 1.0) || !v.is_finite() => Err(invalid(format!("q must be >= 1, got {v}"))),
        _ => Ok(()),
    }
}

/// Index of the node closest to `2 r_min`.
fn doubled_index(profile: &RadialProfile) -> usize {
    profile.grid().nearest_index(2.0 * profile.grid().r_min()).max(1)
}

/// `∫ |v|^q r^(n-1)` or `+∞` when the head-corrected integral keeps growing as `r_min` shrinks.
fn power_integral(profile: &RadialProfile, values: &[f64], q: f64) -> Result<ExtendedReal> {
    let rule = profile.quadrature()?;
    let h: Vec<f64> = values.iter().map(|v| v.abs().powf(q)).collect();
    let full = integrate_radial(&h, &rule)?;
    let k = doubled_index(profile);
    let n = profile.n();
    let inner = profile.r()[k].powf(n) / n * h[k] + rule.tail_from(&h, k);
    if inner > 0.0 && (full - inner) / inner > DIVERGENCE_GROWTH {
        return Ok(ExtendedReal::PosInfinity);
    }
    Ok(ExtendedReal::Finite(full))
}

fn sup_norm(profile: &RadialProfile, values: &[f64]) -> ExtendedReal {
    let sup = values.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let k = doubled_index(profile);
    let jump = values[0].abs() - values[k].abs();
    if jump > SUP_GROWTH * sup.max(1.0) {
        ExtendedReal::PosInfinity
    } else {
        ExtendedReal::Finite(sup)
    }
}

fn lq_of(profile: &RadialProfile, values: &[f64], q: ExtendedReal) -> Result<ExtendedReal> {
    check_q(q)?;
    match q {
        ExtendedReal::PosInfinity => Ok(sup_norm(profile, values)),
        ExtendedReal::Finite(q) => Ok(match power_integral(profile, values, q)? {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(v.powf(1.0 / q)),
            inf => inf,
        }),
    }
}

/// `‖u‖_{L^q}` in radial units (the sphere area is left out).
pub fn lq_norm(profile: &RadialProfile, q: ExtendedReal) -> Result<ExtendedReal> {
    lq_of(profile, profile.u(), q)
}

/// `(‖u‖_q^q + ‖u_r‖_q^q)^(1/q)`, or the larger of the two sup norms for `q = ∞`.
pub fn w1q_norm(profile: &RadialProfile, q: ExtendedReal) -> Result<ExtendedReal> {
    let a = lq_of(profile, profile.u(), q)?;
    let b = lq_of(profile, profile.u_r(), q)?;
    Ok(match (a, b, q) {
        (ExtendedReal::Finite(a), ExtendedReal::Finite(b), ExtendedReal::Finite(q)) => {
            ExtendedReal::Finite((a.powf(q) + b.powf(q)).powf(1.0 / q))
        }
        (ExtendedReal::Finite(a), ExtendedReal::Finite(b), ExtendedReal::PosInfinity) => ExtendedReal::Finite(a.max(b)),
        _ => ExtendedReal::PosInfinity,
    })
}

/// Least-squares line `y = slope x + c`, with the standard error of the slope.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let c = my - slope * mx;
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - c).powi(2)).sum();
    let stderr = if xs.len() > 2 { (ssr / (m - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, stderr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityFit {
    /// `u ~ r^slope` near the origin.
    pub slope: f64,
    pub stderr: f64,
    pub r_a: f64,
    pub r_b: f64,
}

fn window_indices(profile: &RadialProfile, r_a: f64, r_b: f64) -> Vec<usize> {
    profile
        .r()
        .iter()
        .enumerate()
        .filter(|(_, &r)| r >= r_a * (1.0 - 1e-12) && r <= r_b * (1.0 + 1e-12))
        .map(|(i, _)| i)
        .collect()
}

/// Slope of `|u_r|` in log-log coordinates over the window, as `(slope, stderr)`.
fn gradient_slope(profile: &RadialProfile, idx: &[usize]) -> Option<(f64, f64)> {
    if idx.iter().any(|&i| profile.u_r()[i] == 0.0) {
        return None;
    }
    let xs: Vec<f64> = idx.iter().map(|&i| profile.r()[i].ln()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| profile.u_r()[i].abs().ln()).collect();
    Some(linear_fit(&xs, &ys))
}

/// Power-law exponent of `u` near the origin, fitted on `[r_a, r_b]`.
///
/// The fit runs on `log |u_r|`, which is insensitive to additive constants in
/// `u`; the exponent of `u` is one more than the gradient slope. A vanishing
/// exponent means a logarithmic singularity, reported with the slope of `u`
/// against `|log r|`.
pub fn singularity_exponent_fit(profile: &RadialProfile, r_a: f64, r_b: f64) -> Result<SingularityFit> {
    let r_min = profile.grid().r_min();
    let bad = |reason: &str| Err(Error::BadWindow { a: r_a, b: r_b, reason: reason.into() });
    if !(r_a >= 10.0 * r_min * (1.0 - 1e-12)) || !(r_b <= 0.1 * (1.0 + 1e-12)) {
        return bad("window must lie inside [10 r_min, 0.1]");
    }
    if !(r_b >= 10.0 * r_a * (1.0 - 1e-12)) {
        return bad("window must span at least one decade");
    }
    let idx = window_indices(profile, r_a, r_b);
    if idx.len() < 3 {
        return bad("fewer than three nodes in the window");
    }
    let u_b = profile.u_at(r_b);
    let Some((gs, stderr)) = gradient_slope(profile, &idx) else {
        return Err(Error::NotSingular);
    };
    let slope = gs + 1.0;
    if slope.abs() < 0.02 {
        let xs: Vec<f64> = idx.iter().map(|&i| profile.r()[i].ln().abs()).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| profile.u()[i]).collect();
        let (log_slope, _) = linear_fit(&xs, &ys);
        if log_slope > 0.0 {
            return Err(Error::LogSingularity { log_slope });
        }
    }
    if !(profile.center() > 10.0 * u_b) || slope >= 0.0 {
        return Err(Error::NotSingular);
    }
    Ok(SingularityFit { slope, stderr, r_a, r_b })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEntry {
    pub q: f64,
    pub value: ExtendedReal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub passed: bool,
    pub implied_constant: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateControls {
    /// Allowance on growth exponents, absorbing the logarithmic factors over the fit window.
    pub slope_tol: f64,
    /// Outer end of the singularity fit window.
    pub fit_outer: f64,
}

impl Default for EstimateControls {
    fn default() -> Self {
        Self { slope_tol: 0.05, fit_outer: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub regime: Regime,
    pub non_integer_dimension: bool,
    pub sup: ExtendedReal,
    pub lq: Vec<NormEntry>,
    pub w1q: Vec<NormEntry>,
    /// `‖∇u‖_{L^p}`.
    pub gradient_lp: f64,
    /// Present only for power-law singular profiles.
    pub fit: Option<SingularityFit>,
    /// Slope of `u` against `|log r|` for logarithmic singularities.
    pub log_slope: Option<f64>,
    /// Growth exponent allowed for `u`.
    pub target_exponent: f64,
    /// Growth exponent allowed for `|u_r|` on `B_{1/4}`.
    pub gradient_target: f64,
    pub checks: Vec<BoundCheck>,
    pub passed: bool,
}

/// Regularity checks for a semi-stable profile: boundedness below the critical
/// dimension, logarithmic growth at it, power growth and integrability above
/// it, and the gradient growth bound whenever the source is nonnegative.
pub fn check_regularity(
    profile: &RadialProfile,
    spec: &ProblemSpec,
    certificate: &StabilityReport,
    q_values: &[f64],
    controls: &EstimateControls,
) -> Result<EstimateReport> {
    if certificate.verdict != Verdict::SemiStable {
        return Err(Error::NotSemiStable(format!("verdict is {:?} (mu_1 = {:e})", certificate.verdict, certificate.mu_1)));
    }
    let (n, p) = (profile.n(), profile.p());
    if n != spec.n || p != spec.p {
        return Err(Error::RegimeMismatch(format!("profile has (n, p) = ({n}, {p}), problem has ({}, {})", spec.n, spec.p)));
    }
    let (regime, _) = classify_regime(n, p)?;
    let r_min = profile.grid().r_min();
    let sup = lq_norm(profile, ExtendedReal::PosInfinity)?;
    let lq = q_values.iter().map(|&q| Ok(NormEntry { q, value: lq_norm(profile, ExtendedReal::Finite(q))? })).collect::<Result<Vec<_>>>()?;
    let w1q = q_values.iter().map(|&q| Ok(NormEntry { q, value: w1q_norm(profile, ExtendedReal::Finite(q))? })).collect::<Result<Vec<_>>>()?;
    let gradient_lp = match lq_of(profile, profile.u_r(), ExtendedReal::Finite(p))? {
        ExtendedReal::Finite(v) => v,
        ExtendedReal::PosInfinity => return Err(Error::RegimeMismatch("gradient is not in L^p".into())),
    };
    let w1p = w1q_norm(profile, ExtendedReal::Finite(p))?.to_f64();
    let normalized = |v: f64| if w1p > 0.0 { v / w1p } else { 0.0 };
    let target_exponent = singular_power(n, p);
    let gradient_target = gradient_power(n, p);

    let mut checks = Vec::new();
    let mut fit = None;
    let mut log_slope = None;
    match regime {
        Regime::A => {
            let passed = sup.is_finite();
            checks.push(BoundCheck {
                name: "bounded".into(),
                passed,
                implied_constant: sup.finite().map(normalized),
                detail: format!("sup |u| = {sup}"),
            });
        }
        Regime::B => {
            let ratio_from = |start: f64| {
                profile.r().iter().zip(profile.u()).filter(|(&r, _)| r >= start).fold(0.0, |a: f64, (&r, &u)| a.max(u / (r.ln().abs() + 1.0)))
            };
            let (full, inner) = (ratio_from(r_min), ratio_from(10.0 * r_min));
            let passed = full <= inner * (1.0 + DIVERGENCE_GROWTH) || full == 0.0;
            checks.push(BoundCheck {
                name: "log-growth".into(),
                passed,
                implied_constant: Some(normalized(full)),
                detail: format!("max u/(|log r|+1) = {full:.6} on [r_min, 1], {inner:.6} on [10 r_min, 1]"),
            });
        }
        Regime::C => {
            let growth = match singularity_exponent_fit(profile, 10.0 * r_min, controls.fit_outer) {
                Ok(f) => {
                    fit = Some(f);
                    -f.slope
                }
                Err(Error::LogSingularity { log_slope: s }) => {
                    log_slope = Some(s);
                    0.0
                }
                Err(Error::NotSingular) => 0.0,
                Err(e) => return Err(e),
            };
            let implied = profile
                .r()
                .iter()
                .zip(profile.u())
                .filter(|(&r, _)| r <= controls.fit_outer)
                .fold(0.0, |a: f64, (&r, &u)| a.max(u.abs() * r.powf(target_exponent) / (r.ln().abs().powf(1.0 / p) + 1.0)));
            checks.push(BoundCheck {
                name: "power-growth".into(),
                passed: growth <= target_exponent + controls.slope_tol,
                implied_constant: Some(normalized(implied)),
                detail: format!("growth exponent {growth:.6}, allowed {target_exponent:.6} + {}", controls.slope_tol),
            });
            let q0 = q_exponent(n, p, 0)?;
            let q = 0.95 * q0.to_f64();
            let value = lq_norm(profile, ExtendedReal::Finite(q))?;
            checks.push(BoundCheck {
                name: "lq-integrability".into(),
                passed: value.is_finite(),
                implied_constant: value.finite().map(normalized),
                detail: format!("|u|_L^{q:.4} = {value} (q0 = {q0})"),
            });
        }
    }

    if source_nonnegative(profile, &spec.nonlinearity)? {
        let idx = window_indices(profile, 10.0 * r_min, 0.25);
        let (passed, growth) = match gradient_slope(profile, &idx) {
            Some((s, _)) => (-s <= gradient_target + controls.slope_tol, -s),
            None => (true, f64::NEG_INFINITY),
        };
        let implied = idx
            .iter()
            .map(|&i| (profile.r()[i], profile.u_r()[i].abs()))
            .fold(0.0, |a: f64, (r, d)| a.max(d * r.powf(gradient_target) / r.ln().abs().powf(1.0 / p)));
        checks.push(BoundCheck {
            name: "gradient-growth".into(),
            passed,
            implied_constant: Some(normalized(implied)),
            detail: format!("gradient growth exponent {growth:.6} on B_1/4, allowed {gradient_target:.6} + {}", controls.slope_tol),
        });
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(EstimateReport {
        regime,
        non_integer_dimension: n.fract() != 0.0,
        sup,
        lq,
        w1q,
        gradient_lp,
        fit,
        log_slope,
        target_exponent,
        gradient_target,
        checks,
        passed,
    })
}

fn source_nonnegative(profile: &RadialProfile, g: &NonlinearitySpec) -> Result<bool> {
    for &u in profile.u() {
        if g.value(u)? < 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientL1Bound {
    /// `‖∇u‖_{L^p}`.
    pub lhs: f64,
    /// `‖(u - u(1))^(p-1)‖_{L^1}^(1/(p-1))`.
    pub term1: f64,
    /// `‖g(u)‖_{L^1}^(1/(p-1))`.
    pub term2: f64,
    pub implied_constant: f64,
}

/// The gradient bound by the two L¹ terms, with its implied constant.
pub fn gradient_l1_bound(profile: &RadialProfile, g: &NonlinearitySpec) -> Result<GradientL1Bound> {
    let p = profile.p();
    let rule = profile.quadrature()?;
    let mut source = Vec::with_capacity(profile.len());
    for &u in profile.u() {
        let v = g.value(u)?;
        if v < 0.0 {
            return Err(Error::NegativeSource { u, value: v });
        }
        source.push(v);
    }
    let b = profile.boundary();
    let grad: Vec<f64> = profile.u_r().iter().map(|d| d.abs().powf(p)).collect();
    let shifted: Vec<f64> = profile.u().iter().map(|u| (u - b).abs().powf(p - 1.0)).collect();
    let lhs = integrate_radial(&grad, &rule)?.powf(1.0 / p);
    let term1 = integrate_radial(&shifted, &rule)?.powf(1.0 / (p - 1.0));
    let term2 = integrate_radial(&source, &rule)?.powf(1.0 / (p - 1.0));
    let implied_constant = if lhs == 0.0 { 0.0 } else { lhs / (term1 + term2) };
    Ok(GradientL1Bound { lhs, term1, term2, implied_constant })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxMonotonicity {
    pub monotone: bool,
    /// Largest decrease of `-w` between neighbouring nodes.
    pub max_violation: f64,
    /// Radius where it occurs.
    pub at: Option<f64>,
}

/// Whether `r^(n-1) |u_r|^(p-1) = -w` is nondecreasing, up to `1e-10`.
pub fn flux_monotonicity_check(profile: &RadialProfile) -> FluxMonotonicity {
    let mut worst = 0.0;
    let mut at = None;
    for (i, pair) in profile.w().windows(2).enumerate() {
        let drop = pair[1] - pair[0];
        if drop > worst {
            worst = drop;
            at = Some(profile.r()[i + 1]);
        }
    }
    FluxMonotonicity { monotone: worst <= 1e-10, max_violation: worst, at }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::oracle::{exact_exponential, exact_power};
    use approx::assert_relative_eq;

    #[test]
    fn constant_profile_norms() {
        let grid = make_grid(1e-8, 400).unwrap();
        let prof = RadialProfile::from_derivative(grid, 3.0, 2.0, vec![1.0; 400], vec![0.0; 400]).unwrap();
        let l2 = lq_norm(&prof, ExtendedReal::Finite(2.0)).unwrap().to_f64();
        assert_relative_eq!(l2, (1.0f64 / 3.0).sqrt(), max_relative = 1e-12);
        assert_eq!(lq_norm(&prof, ExtendedReal::PosInfinity).unwrap(), ExtendedReal::Finite(1.0));
        assert_eq!(w1q_norm(&prof, ExtendedReal::Finite(2.0)).unwrap().to_f64(), l2);
        assert!(lq_norm(&prof, ExtendedReal::Finite(0.5)).is_err());
    }

    #[test]
    fn power_solution_integrability_threshold() {
        let s = exact_power(15.0, 2.0, 5.0).unwrap();
        let prof = s.sample(&make_grid(1e-8, 2000).unwrap()).unwrap();
        assert!(lq_norm(&prof, ExtendedReal::Finite(29.0)).unwrap().is_finite());
        assert_eq!(lq_norm(&prof, ExtendedReal::Finite(31.0)).unwrap(), ExtendedReal::PosInfinity);
        assert_eq!(lq_norm(&prof, ExtendedReal::PosInfinity).unwrap(), ExtendedReal::PosInfinity);
    }

    #[test]
    fn log_singular_gradient_threshold() {
        let s = exact_exponential(12.0, 2.0).unwrap();
        let prof = s.sample(&make_grid(1e-8, 2000).unwrap()).unwrap();
        assert!(w1q_norm(&prof, ExtendedReal::Finite(11.0)).unwrap().is_finite());
        assert_eq!(w1q_norm(&prof, ExtendedReal::Finite(12.5)).unwrap(), ExtendedReal::PosInfinity);
        match singularity_exponent_fit(&prof, 1e-7, 0.1) {
            Err(Error::LogSingularity { log_slope }) => assert_relative_eq!(log_slope, 2.0, max_relative = 1e-10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exact_power_law_slope() {
        let s = exact_power(15.0, 2.0, 5.0).unwrap();
        let prof = s.sample(&make_grid(1e-8, 2000).unwrap()).unwrap();
        let fit = singularity_exponent_fit(&prof, 1e-7, 0.1).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn fit_window_validation() {
        let s = exact_power(15.0, 2.0, 5.0).unwrap();
        let prof = s.sample(&make_grid(1e-8, 2000).unwrap()).unwrap();
        assert!(matches!(singularity_exponent_fit(&prof, 1e-8, 0.1), Err(Error::BadWindow { .. })));
        assert!(matches!(singularity_exponent_fit(&prof, 1e-3, 5e-3), Err(Error::BadWindow { .. })));
        assert!(matches!(singularity_exponent_fit(&prof, 1e-3, 0.5), Err(Error::BadWindow { .. })));
    }

    #[test]
    fn gradient_bound_closed_form() {
        let s = exact_exponential(12.0, 2.0).unwrap();
        let prof = s.sample(&make_grid(1e-8, 2000).unwrap()).unwrap();
        let b = gradient_l1_bound(&prof, &s.nonlinearity()).unwrap();
        // ∫ 4 r^9 = 0.4, ∫ -2 log r r^11 = 1/72, ∫ 20 r^9 = 2
        assert_relative_eq!(b.lhs, 0.4f64.sqrt(), max_relative = 1e-6);
        assert_relative_eq!(b.term1, 1.0 / 72.0, max_relative = 1e-6);
        assert_relative_eq!(b.term2, 2.0, max_relative = 1e-6);
        assert_relative_eq!(b.implied_constant, 0.4f64.sqrt() / (2.0 + 1.0 / 72.0), max_relative = 1e-6);
    }

    #[test]
    fn gradient_bound_of_zero() {
        let prof = RadialProfile::zero(make_grid(1e-6, 100).unwrap(), 3.0, 2.0).unwrap();
        let b = gradient_l1_bound(&prof, &NonlinearitySpec::exponential(1.0)).unwrap();
        assert_eq!((b.lhs, b.implied_constant), (0.0, 0.0));
        let neg = NonlinearitySpec::exponential(-1.0);
        assert!(matches!(gradient_l1_bound(&prof, &neg), Err(Error::NegativeSource { .. })));
    }

    #[test]
    fn flux_bump_is_located() {
        let grid = make_grid(1e-4, 50).unwrap();
        let r = grid.nodes().to_vec();
        let mut w: Vec<f64> = r.iter().map(|r| -r * r).collect();
        w[30] = -0.5 * r[30] * r[30];
        let prof = RadialProfile::from_flux(grid, 3.0, 2.0, vec![0.0; 50], w).unwrap();
        let m = flux_monotonicity_check(&prof);
        assert!(!m.monotone);
        assert_eq!(m.at, Some(r[30]));
        let zero = RadialProfile::zero(make_grid(1e-4, 50).unwrap(), 3.0, 2.0).unwrap();
        assert!(flux_monotonicity_check(&zero).monotone);
    }
}
