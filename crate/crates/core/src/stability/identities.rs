use serde::{Deserialize, Serialize};

use super::form::{default_partition, q_apply_on, StabilityControls};
use super::test_functions::TestFunctionFamily;
use crate::error::{invalid, Error, Result};
use crate::grid::gauss_legendre;
use crate::nonlinearity::NonlinearitySpec;
use crate::oracle::ode_residual;
use crate::profile::RadialProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    /// `Q(u_r η)`.
    pub lhs: f64,
    /// The g-free side.
    pub rhs: f64,
    pub rel_err: f64,
    /// Residual of the profile, checked against the caller's bound.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyResult {
    /// `(n-1) ∫ |u_r|^p η²`.
    pub lhs: f64,
    /// `(p-1) ∫ |u_r|^p ((rη)_r)²`.
    pub rhs: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyEstimate {
    /// `∫ |u_r|^p r^(-2α)`.
    pub lhs: f64,
    /// `lhs · ((n-1) - (α-1)²(p-1)) / ∫ |u_r|^p`.
    pub ratio: f64,
}

/// `u_rr` from the flux derivative.
fn second_derivative(profile: &RadialProfile, r: f64) -> f64 {
    let (n, p) = (profile.n(), profile.p());
    let ur = profile.u_r_at(r).abs();
    let wp = profile.w_prime_at(r);
    let top = wp + (n - 1.0) * r.powf(n - 2.0) * ur.powf(p - 1.0);
    let bottom = (p - 1.0) * r.powf(n - 1.0) * ur.powf(p - 2.0);
    top / bottom
}

/// `∫ h(r) r^(n-1) dr` over the partition, Gauss-Legendre per cell.
fn integrate_on<H: Fn(f64) -> f64>(partition: &[f64], n: f64, points: usize, h: H) -> f64 {
    let (gx, gw) = gauss_legendre(points);
    let mut total = 0.0;
    for cell in partition.windows(2) {
        let (half, mid) = (0.5 * (cell[1] - cell[0]), 0.5 * (cell[1] + cell[0]));
        for (&t, &wt) in gx.iter().zip(&gw) {
            let r = mid + half * t;
            total += wt * half * h(r) * r.powf(n - 1.0);
        }
    }
    total
}

fn check_eta(eta: &TestFunctionFamily) -> Result<()> {
    if eta.value(1.0).abs() > 1e-12 {
        return Err(invalid("test function must vanish at r = 1"));
    }
    Ok(())
}

/// `∫ |u_r|^p {(p-1) η_r² - (n-1) η²/r²}`, computed from the profile alone.
pub fn lemma21_rhs(profile: &RadialProfile, eta: &TestFunctionFamily) -> Result<f64> {
    check_eta(eta)?;
    let (n, p) = (profile.n(), profile.p());
    let partition = default_partition(profile, eta);
    let points = StabilityControls::default().gauss_points;
    let v = integrate_on(&partition, n, points, |r| {
        let (e, de) = (eta.value(r), eta.derivative(r));
        if e == 0.0 && de == 0.0 {
            return 0.0;
        }
        profile.u_r_at(r).abs().powf(p) * ((p - 1.0) * de * de - (n - 1.0) * e * e / (r * r))
    });
    finite(v)
}

/// Evaluates both sides of the identity `Q(u_r η) = ∫ |u_r|^p {(p-1) η_r² - (n-1) η²/r²}`.
///
/// The identity holds only on solutions, so the profile's residual must not
/// exceed `residual_bound`.
pub fn lemma21_identity(profile: &RadialProfile, g: &NonlinearitySpec, eta: &TestFunctionFamily, residual_bound: f64) -> Result<IdentityResult> {
    check_eta(eta)?;
    let residual = ode_residual(profile, g)?;
    if !(residual <= residual_bound) {
        return Err(Error::ResidualTooLarge { residual, bound: residual_bound });
    }
    let partition = default_partition(profile, eta);
    let points = StabilityControls::default().gauss_points;
    let lhs = q_apply_on(
        profile,
        |u| g.derivative(u),
        |r| profile.u_r_at(r) * eta.value(r),
        |r| {
            let e = eta.value(r);
            let de = eta.derivative(r);
            let urr = if e == 0.0 { 0.0 } else { second_derivative(profile, r) };
            urr * e + profile.u_r_at(r) * de
        },
        &partition,
        false,
        points,
    )?;
    let rhs = lemma21_rhs(profile, eta)?;
    let rel_err = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    Ok(IdentityResult { lhs, rhs, rel_err, residual })
}

/// `(n-1) ∫ |u_r|^p η² <= (p-1) ∫ |u_r|^p ((rη)_r)²` for each `η`.
pub fn hardy_inequality_check(profile: &RadialProfile, etas: &[TestFunctionFamily]) -> Result<Vec<HardyResult>> {
    let (n, p) = (profile.n(), profile.p());
    let r_min = profile.grid().r_min();
    let points = StabilityControls::default().gauss_points;
    etas.iter()
        .map(|eta| {
            check_eta(eta)?;
            let partition = default_partition(profile, eta);
            let weight = |r: f64| profile.u_r_at(r).abs().powf(p);
            let mut lhs = integrate_on(&partition, n, points, |r| {
                let e = eta.value(r);
                if e == 0.0 { 0.0 } else { weight(r) * e * e }
            });
            let mut rhs = integrate_on(&partition, n, points, |r| {
                let d = eta.value(r) + r * eta.derivative(r);
                if d == 0.0 { 0.0 } else { weight(r) * d * d }
            });
            if eta.support_start() < r_min {
                let head = weight(r_min) * r_min.powf(n) / n;
                let e = eta.value(r_min);
                let d = e + r_min * eta.derivative(r_min);
                lhs += head * e * e;
                rhs += head * d * d;
            }
            let lhs = finite((n - 1.0) * lhs)?;
            let rhs = finite((p - 1.0) * rhs)?;
            Ok(HardyResult { lhs, rhs, satisfied: lhs <= rhs * (1.0 + 1e-8) })
        })
        .collect()
}

/// `∫ |u_r|^p r^(-2α)` for `1 <= α < 1 + sqrt((n-1)/(p-1))`, with the implied constant.
pub fn key_estimate_lhs(profile: &RadialProfile, alpha: f64) -> Result<KeyEstimate> {
    let (n, p) = (profile.n(), profile.p());
    let top = 1.0 + ((n - 1.0) / (p - 1.0)).sqrt();
    if !(alpha >= 1.0 && alpha < top) {
        return Err(invalid(format!("alpha = {alpha} outside [1, {top})")));
    }
    let points = StabilityControls::default().gauss_points;
    let grad = |r: f64| profile.u_r_at(r).abs().powf(p);
    let lhs = finite(integrate_on(profile.r(), n, points, |r| grad(r) * r.powf(-2.0 * alpha)))?;
    let norm = finite(integrate_on(profile.r(), n, points, grad))?;
    let ratio = if norm > 0.0 { lhs * ((n - 1.0) - (alpha - 1.0).powi(2) * (p - 1.0)) / norm } else { 0.0 };
    Ok(KeyEstimate { lhs, ratio })
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { index: 0, value: v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::oracle::exact_exponential;
    use approx::assert_relative_eq;

    fn exact(n: f64) -> (RadialProfile, NonlinearitySpec) {
        let s = exact_exponential(n, 2.0).unwrap();
        (s.sample(&make_grid(1e-8, 2000).unwrap()).unwrap(), s.nonlinearity())
    }

    #[test]
    fn zero_eta() {
        let (prof, g) = exact(12.0);
        let res = lemma21_identity(&prof, &g, &TestFunctionFamily::Zero, 1e-6).unwrap();
        assert_eq!((res.lhs, res.rhs, res.rel_err), (0.0, 0.0, 0.0));
        let h = hardy_inequality_check(&prof, &[TestFunctionFamily::Zero]).unwrap();
        assert_eq!((h[0].lhs, h[0].rhs), (0.0, 0.0));
        assert!(h[0].satisfied);
    }

    #[test]
    fn identity_on_exact_solution() {
        let (prof, g) = exact(12.0);
        let eta = TestFunctionFamily::power_cutoff(1.0, 1e-2).unwrap();
        let res = lemma21_identity(&prof, &g, &eta, 1e-6).unwrap();
        assert!(res.rel_err < 1e-4, "{res:?}");
    }

    #[test]
    fn identity_needs_a_solution() {
        let (prof, _) = exact(12.0);
        let wrong = NonlinearitySpec::exponential(3.0);
        let eta = TestFunctionFamily::sine(1, 1e-3).unwrap();
        assert!(matches!(lemma21_identity(&prof, &wrong, &eta, 1e-6), Err(Error::ResidualTooLarge { .. })));
    }

    #[test]
    fn hardy_violated_below_threshold() {
        let (prof, _) = exact(8.0);
        let eta = TestFunctionFamily::power_cutoff(3.0, 1e-3).unwrap();
        let h = hardy_inequality_check(&prof, &[eta]).unwrap();
        assert!(!h[0].satisfied, "{h:?}");
    }

    #[test]
    fn hardy_holds_above_threshold() {
        let (prof, _) = exact(12.0);
        let etas: Vec<_> = [1.0, 3.0, 4.0, 5.0].iter().map(|&a| TestFunctionFamily::power_cutoff(a, 1e-3).unwrap()).collect();
        assert!(hardy_inequality_check(&prof, &etas).unwrap().iter().all(|h| h.satisfied));
    }

    #[test]
    fn key_estimate_closed_form() {
        let (prof, _) = exact(12.0);
        // 4 ∫ r^(n-3-2α) dr = 4/(n-2-2α)
        let k = key_estimate_lhs(&prof, 1.5).unwrap();
        assert_relative_eq!(k.lhs, 4.0 / 7.0, max_relative = 1e-6);
        // ∫|u_r|² = 4/(n-2)
        assert_relative_eq!(k.ratio, 4.0 / 7.0 * (11.0 - 0.25) / 0.4, max_relative = 1e-6);
        assert!(key_estimate_lhs(&prof, 1.0 + 11f64.sqrt()).is_err());
        assert!(key_estimate_lhs(&prof, 0.9).is_err());
    }

    #[test]
    fn key_estimate_of_flat_profile() {
        let prof = RadialProfile::zero(make_grid(1e-6, 100).unwrap(), 3.0, 2.0).unwrap();
        let k = key_estimate_lhs(&prof, 1.2).unwrap();
        assert_eq!((k.lhs, k.ratio), (0.0, 0.0));
    }
}
