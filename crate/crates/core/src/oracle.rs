//! Closed-form singular solutions and the flux-form residual.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::RadialGrid;
use crate::nonlinearity::{validate_np, NonlinearitySpec};
use crate::profile::{flux_from_derivative, RadialProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExactKind {
    /// `u = -p log r` for `f = e^u`.
    ExponentialSingular,
    /// `u = r^(-a) - 1`, `a = p/(m-(p-1))`, for `f = (1+u)^m`.
    PowerSingular { m: f64 },
}

/// An explicit singular solution with its parameter `λ*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactSolution {
    pub kind: ExactKind,
    pub n: f64,
    pub p: f64,
    pub lambda_star: f64,
}

pub fn exact_exponential(n: f64, p: f64) -> Result<ExactSolution> {
    validate_np(n, p)?;
    if n <= p {
        return Err(invalid(format!("exponential solution needs n > p, got n = {n}, p = {p}")));
    }
    Ok(ExactSolution {
        kind: ExactKind::ExponentialSingular,
        n,
        p,
        lambda_star: p.powf(p - 1.0) * (n - p),
    })
}

pub fn exact_power(n: f64, p: f64, m: f64) -> Result<ExactSolution> {
    validate_np(n, p)?;
    if !(m > p - 1.0) {
        return Err(invalid(format!("power solution needs m > p - 1, got m = {m}")));
    }
    let a = p / (m - (p - 1.0));
    let lambda_star = a.powf(p - 1.0) * (n - m * a);
    if !(lambda_star > 0.0) {
        return Err(invalid(format!("lambda* = {lambda_star} is not positive for n = {n}, p = {p}, m = {m}")));
    }
    Ok(ExactSolution { kind: ExactKind::PowerSingular { m }, n, p, lambda_star })
}

impl ExactSolution {
    /// Power-law exponent `a` of the singularity (0 for the logarithmic case).
    pub fn singular_exponent(&self) -> f64 {
        match self.kind {
            ExactKind::ExponentialSingular => 0.0,
            ExactKind::PowerSingular { m } => self.p / (m - (self.p - 1.0)),
        }
    }

    pub fn u(&self, r: f64) -> f64 {
        match self.kind {
            ExactKind::ExponentialSingular => -self.p * r.ln(),
            ExactKind::PowerSingular { .. } => r.powf(-self.singular_exponent()) - 1.0,
        }
    }

    pub fn u_r(&self, r: f64) -> f64 {
        match self.kind {
            ExactKind::ExponentialSingular => -self.p / r,
            ExactKind::PowerSingular { .. } => {
                let a = self.singular_exponent();
                -a * r.powf(-a - 1.0)
            }
        }
    }

    /// `g = λ* f` for which this profile is a solution.
    pub fn nonlinearity(&self) -> NonlinearitySpec {
        match self.kind {
            ExactKind::ExponentialSingular => NonlinearitySpec::exponential(self.lambda_star),
            ExactKind::PowerSingular { m } => NonlinearitySpec::power(m, self.lambda_star),
        }
    }

    /// Samples values and the exact flux on a grid.
    pub fn sample(&self, grid: &RadialGrid) -> Result<RadialProfile> {
        let u = grid.nodes().iter().map(|&r| self.u(r)).collect();
        let w = grid
            .nodes()
            .iter()
            .map(|&r| flux_from_derivative(self.u_r(r), r, self.n, self.p))
            .collect();
        RadialProfile::from_flux(grid.clone(), self.n, self.p, u, w)
    }
}

/// Radial solutions `u = 2 log((1+b)/(1+b r²))` of `-Δu = λ e^u` in the unit disk,
/// with `λ = 8b/(1+b)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiouvilleDisk {
    pub b: f64,
}

impl LiouvilleDisk {
    /// The minimal branch (`b <= 1`) for `0 < λ <= 2`.
    pub fn minimal(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 2.0) {
            return Err(invalid(format!("no disk solution for lambda = {lambda}")));
        }
        let b = ((4.0 - lambda) - 2.0 * (4.0 - 2.0 * lambda).max(0.0).sqrt()) / lambda;
        Ok(Self { b })
    }

    pub fn lambda(&self) -> f64 {
        8.0 * self.b / ((1.0 + self.b) * (1.0 + self.b))
    }

    pub fn center(&self) -> f64 {
        2.0 * self.b.ln_1p()
    }

    pub fn u(&self, r: f64) -> f64 {
        2.0 * ((1.0 + self.b) / (1.0 + self.b * r * r)).ln()
    }

    pub fn u_r(&self, r: f64) -> f64 {
        -4.0 * self.b * r / (1.0 + self.b * r * r)
    }

    pub fn sample(&self, grid: &RadialGrid) -> Result<RadialProfile> {
        let u = grid.nodes().iter().map(|&r| self.u(r)).collect();
        let ur = grid.nodes().iter().map(|&r| self.u_r(r)).collect();
        RadialProfile::from_derivative(grid.clone(), 2.0, 2.0, u, ur)
    }
}

/// Sixth-order centered first derivative in `log r`, at interior nodes `3..N-3`.
pub(crate) fn d_ds(values: &[f64], i: usize, h: f64) -> f64 {
    const C: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
    let mut acc = 0.0;
    for (k, c) in C.iter().enumerate() {
        acc += c * (values[i + k + 1] - values[i - k - 1]);
    }
    acc / h
}

/// Normalized max-norm residual of `w' + r^(n-1) g(u) = 0` at interior nodes.
///
/// `w'` is taken by sixth-order centered differences in `log r`. The result is
/// divided by `max r^(n-1) |g(u)|`, or left absolute when the source vanishes.
pub fn ode_residual(profile: &RadialProfile, g: &NonlinearitySpec) -> Result<f64> {
    let r = profile.r();
    let len = r.len();
    let h = profile.grid().log_step();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 3..len - 3 {
        let source = r[i].powf(profile.n() - 1.0) * g.value(profile.u()[i])?;
        let dw = d_ds(profile.w(), i, h) / r[i];
        worst = worst.max((dw + source).abs());
        scale = scale.max(source.abs());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}
