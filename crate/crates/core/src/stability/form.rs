use serde::{Deserialize, Serialize};

use super::eigen::{inverse_iteration, min_eigenvalue, EigenBracket, Tridiagonal};
use super::identities::hardy_inequality_check;
use super::test_functions::TestFunctionFamily;
use crate::error::{invalid, Error, Result};
use crate::grid::gauss_legendre;
use crate::profile::RadialProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityControls {
    /// Test functions vanish on `[0, r_trunc]`.
    pub r_trunc: f64,
    /// Cells of the eigen grid.
    pub n_eig: usize,
    pub tol_eig: f64,
    /// Gauss points per cell.
    pub gauss_points: usize,
    /// Repeat the eigenvalue with `r_trunc` one decade larger.
    pub sensitivity: bool,
}

impl Default for StabilityControls {
    fn default() -> Self {
        Self { r_trunc: 1e-6, n_eig: 512, tol_eig: 1e-8, gauss_points: 5, sensitivity: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    SemiStable,
    Unstable,
    Marginal,
}

/// `(p-1)|u_r|^(p-2) r^(n-1)`, `g'(u) r^(n-1)` and `r^(n-1)` at `r`.
fn coefficients<G>(profile: &RadialProfile, g_prime: &G, r: f64) -> Result<(f64, f64, f64)>
where
    G: Fn(f64) -> Result<f64>,
{
    let (n, p) = (profile.n(), profile.p());
    let weight = r.powf(n - 1.0);
    let ur = profile.u_r_at(r).abs();
    let a = if p == 2.0 { weight } else { (p - 1.0) * ur.powf(p - 2.0) * weight };
    let b = g_prime(profile.u_at(r))? * weight;
    Ok((a, b, weight))
}

/// Cells for integrating a test function against a profile: its own nodes for
/// P1 functions, otherwise the profile nodes on its support plus its kinks.
pub fn default_partition(profile: &RadialProfile, xi: &TestFunctionFamily) -> Vec<f64> {
    if let TestFunctionFamily::Nodal { nodes, .. } = xi {
        return nodes.clone();
    }
    let r_min = profile.grid().r_min();
    let start = xi.support_start().max(r_min);
    if start >= 1.0 {
        return vec![];
    }
    let mut pts: Vec<f64> = profile.r().iter().copied().filter(|&r| r > start).collect();
    pts.push(start);
    pts.extend(xi.breakpoints().into_iter().filter(|&b| b > start && b < 1.0));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs());
    pts
}

/// `Q(ξ)` for `ξ` given by value and derivative closures, integrated cell by
/// cell with Gauss-Legendre on `partition`. With `head`, `ξ` is taken constant
/// on `[0, partition[0]]` and that interval contributes its potential term.
pub fn q_apply_on<G, V, D>(profile: &RadialProfile, g_prime: G, value: V, deriv: D, partition: &[f64], head: bool, points: usize) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
    V: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (gx, gw) = gauss_legendre(points);
    let mut total = 0.0;
    for cell in partition.windows(2) {
        let (lo, hi) = (cell[0], cell[1]);
        let (half, mid) = (0.5 * (hi - lo), 0.5 * (hi + lo));
        for (&t, &wt) in gx.iter().zip(&gw) {
            let r = mid + half * t;
            let (x, dx) = (value(r), deriv(r));
            if x == 0.0 && dx == 0.0 {
                continue;
            }
            let (a, b, _) = coefficients(profile, &g_prime, r)?;
            let mut term = 0.0;
            if dx != 0.0 {
                if !a.is_finite() {
                    return Err(Error::NonFiniteCoefficient { a: lo, b: hi });
                }
                term += a * dx * dx;
            }
            if x != 0.0 {
                if !b.is_finite() {
                    return Err(Error::NonFiniteCoefficient { a: lo, b: hi });
                }
                term -= b * x * x;
            }
            total += wt * half * term;
        }
    }
    if head && !partition.is_empty() {
        let r0 = partition[0];
        let x = value(r0);
        if x != 0.0 {
            let n = profile.n();
            let (_, b, _) = coefficients(profile, &g_prime, r0)?;
            total -= b * x * x * r0 / n;
        }
    }
    if !total.is_finite() {
        return Err(Error::NonFinite { index: 0, value: total });
    }
    Ok(total)
}

/// `Q(ξ) = ∫ (p-1)|u_r|^(p-2) ξ_r² - g'(u) ξ²` in radial units.
pub fn q_apply<G>(profile: &RadialProfile, g_prime: G, xi: &TestFunctionFamily) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    q_apply_points(profile, g_prime, xi, StabilityControls::default().gauss_points)
}

pub(crate) fn q_apply_points<G>(profile: &RadialProfile, g_prime: G, xi: &TestFunctionFamily, points: usize) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    if xi.value(1.0).abs() > 1e-12 {
        return Err(invalid("test function must vanish at r = 1"));
    }
    let partition = default_partition(profile, xi);
    let head = xi.support_start() < profile.grid().r_min();
    q_apply_on(profile, g_prime, |r| xi.value(r), |r| xi.derivative(r), &partition, head, points)
}

/// P1 discretization of `Q` on a log-spaced grid over `[r_trunc, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledForm {
    /// Grid radii including both Dirichlet ends.
    pub nodes: Vec<f64>,
    /// Stiffness, coefficient `(p-1)|u_r|^(p-2) r^(n-1)`.
    pub a: Tridiagonal,
    /// Potential, coefficient `g'(u) r^(n-1)`.
    pub b: Tridiagonal,
    /// Mass, coefficient `r^(n-1)`.
    pub m: Tridiagonal,
    pub gauss_points: usize,
}

impl AssembledForm {
    /// The P1 function with interior nodal values `x`.
    pub fn function(&self, x: &[f64]) -> Result<TestFunctionFamily> {
        let mut values = Vec::with_capacity(self.nodes.len());
        values.push(0.0);
        values.extend_from_slice(x);
        values.push(0.0);
        TestFunctionFamily::nodal(self.nodes.clone(), values)
    }

    /// `xᵀ (A - B) x`.
    pub fn q(&self, x: &[f64]) -> f64 {
        self.a.quad(x) - self.b.quad(x)
    }

    /// Largest diagonal entry of the mass matrix.
    pub fn scale(&self) -> f64 {
        self.m.diag.iter().fold(0.0, |a: f64, &b| a.max(b))
    }
}

pub fn assemble_q<G>(profile: &RadialProfile, g_prime: G, r_trunc: f64, n_eig: usize, gauss_points: usize) -> Result<AssembledForm>
where
    G: Fn(f64) -> Result<f64>,
{
    if n_eig < 32 {
        return Err(invalid(format!("eigen grid needs at least 32 cells, got {n_eig}")));
    }
    let r_min = profile.grid().r_min();
    if !(r_trunc >= r_min * (1.0 - 1e-12) && r_trunc < 1.0) {
        return Err(invalid(format!("r_trunc = {r_trunc:e} must lie in [{r_min:e}, 1)")));
    }
    let step = -r_trunc.ln() / n_eig as f64;
    let mut nodes: Vec<f64> = (0..=n_eig).map(|i| (r_trunc.ln() + i as f64 * step).exp()).collect();
    nodes[0] = r_trunc;
    nodes[n_eig] = 1.0;

    let unknowns = n_eig - 1;
    let (mut a, mut b, mut m) = (Tridiagonal::zeros(unknowns), Tridiagonal::zeros(unknowns), Tridiagonal::zeros(unknowns));
    let (gx, gw) = gauss_legendre(gauss_points);
    for c in 0..n_eig {
        let (lo, hi) = (nodes[c], nodes[c + 1]);
        let (len, half, mid) = (hi - lo, 0.5 * (hi - lo), 0.5 * (hi + lo));
        let (mut ka, mut kb, mut km) = ([0.0; 3], [0.0; 3], [0.0; 3]);
        for (&t, &wt) in gx.iter().zip(&gw) {
            let r = mid + half * t;
            let (ca, cb, cm) = coefficients(profile, &g_prime, r)?;
            if !(ca.is_finite() && cb.is_finite()) {
                return Err(Error::NonFiniteCoefficient { a: lo, b: hi });
            }
            let (pl, pr) = ((hi - r) / len, (r - lo) / len);
            let q = wt * half;
            // Local entries (left-left, left-right, right-right).
            ka[0] += q * ca / (len * len);
            ka[1] -= q * ca / (len * len);
            ka[2] += q * ca / (len * len);
            for (k, coef) in [(&mut kb, cb), (&mut km, cm)] {
                k[0] += q * coef * pl * pl;
                k[1] += q * coef * pl * pr;
                k[2] += q * coef * pr * pr;
            }
        }
        for (mat, k) in [(&mut a, ka), (&mut b, kb), (&mut m, km)] {
            // Node c is unknown c - 1.
            if c >= 1 {
                mat.diag[c - 1] += k[0];
            }
            if c + 1 <= unknowns {
                mat.diag[c] += k[2];
            }
            if c >= 1 && c + 1 <= unknowns {
                mat.off[c - 1] += k[1];
            }
        }
    }
    Ok(AssembledForm { nodes, a, b, m, gauss_points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationSensitivity {
    pub r_trunc: f64,
    pub mu_1: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Smallest eigenvalue of `(A - B) x = μ M x`.
    pub mu_1: f64,
    pub bracket: EigenBracket,
    /// Rayleigh quotient `Q(ξ)/∫ξ²` of the computed eigenvector, with `Q` evaluated by quadrature.
    pub rayleigh_min: f64,
    pub verdict: Verdict,
    pub r_trunc: f64,
    pub n_eig: usize,
    pub scale: f64,
    pub tol_eig: f64,
    pub sensitivity: Option<TruncationSensitivity>,
    /// On a semi-stable verdict: whether the weighted Hardy inequality held
    /// for the probe functions it implies.
    pub hardy_implied: Option<bool>,
    pub non_integer_dimension: bool,
}

fn verdict_for(mu: f64, tol: f64) -> Verdict {
    if mu >= -tol {
        Verdict::SemiStable
    } else if mu < -10.0 * tol {
        Verdict::Unstable
    } else {
        Verdict::Marginal
    }
}

fn smallest<G>(profile: &RadialProfile, g_prime: &G, r_trunc: f64, controls: &StabilityControls) -> Result<(AssembledForm, EigenBracket)>
where
    G: Fn(f64) -> Result<f64>,
{
    let form = assemble_q(profile, g_prime, r_trunc, controls.n_eig, controls.gauss_points)?;
    let bracket = min_eigenvalue(&form.a, &form.b, &form.m, 1e-10 * form.scale())?;
    Ok((form, bracket))
}

/// Smallest discrete eigenvalue of `Q` and the resulting verdict.
pub fn stability_report<G>(profile: &RadialProfile, g_prime: G, controls: &StabilityControls) -> Result<StabilityReport>
where
    G: Fn(f64) -> Result<f64>,
{
    let (form, bracket) = smallest(profile, &g_prime, controls.r_trunc, controls)?;
    let mu_1 = bracket.mid();
    let scale = form.scale();
    let tol = controls.tol_eig * scale;
    let verdict = verdict_for(mu_1, tol);

    let k = form.a.combine(1.0, &form.b);
    let shift = mu_1 - (1e-8 * mu_1.abs()).max(bracket.width());
    let x = inverse_iteration(&k, &form.m, shift, 4);
    let xi = form.function(&x)?;
    let rayleigh_min = q_apply_points(profile, &g_prime, &xi, controls.gauss_points)? / form.m.quad(&x);

    let sensitivity = if controls.sensitivity && controls.r_trunc * 10.0 < 0.1 {
        let rt = controls.r_trunc * 10.0;
        let (f2, b2) = smallest(profile, &g_prime, rt, controls)?;
        Some(TruncationSensitivity { r_trunc: rt, mu_1: b2.mid(), verdict: verdict_for(b2.mid(), controls.tol_eig * f2.scale()) })
    } else {
        None
    };

    let hardy_implied = if verdict == Verdict::SemiStable {
        let probes: Vec<TestFunctionFamily> =
            (1..=3).map(|j| TestFunctionFamily::sine(j, controls.r_trunc)).collect::<Result<_>>()?;
        Some(hardy_inequality_check(profile, &probes)?.iter().all(|h| h.satisfied))
    } else {
        None
    };

    Ok(StabilityReport {
        mu_1,
        bracket,
        rayleigh_min,
        verdict,
        r_trunc: controls.r_trunc,
        n_eig: controls.n_eig,
        scale,
        tol_eig: controls.tol_eig,
        sensitivity,
        hardy_implied,
        non_integer_dimension: profile.n().fract() != 0.0,
    })
}
