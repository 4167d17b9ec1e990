//! Discrete radial profiles in flux form.

use crate::error::{invalid, Error, Result};
use crate::grid::{integrate_radial, QuadratureRule, RadialGrid};
use crate::nonlinearity::{validate_np, NonlinearitySpec};

/// `|x|^(e) * sign(x)`.
#[inline]
pub fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(e)
    }
}

/// A radial function on a [`RadialGrid`], stored as values `u` and flux
/// `w = r^(n-1) |u_r|^(p-2) u_r`, with `u_r` derived from `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: RadialGrid,
    n: f64,
    p: f64,
    u: Vec<f64>,
    w: Vec<f64>,
    u_r: Vec<f64>,
}

impl RadialProfile {
    /// Builds a profile from values and flux. The flux must be nonpositive.
    pub fn from_flux(grid: RadialGrid, n: f64, p: f64, u: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        validate_np(n, p)?;
        check_len(&grid, &u)?;
        check_len(&grid, &w)?;
        check_finite(&u)?;
        check_finite(&w)?;
        if let Some(i) = w.iter().position(|&x| x > 0.0) {
            return Err(invalid(format!("flux must be <= 0, got w = {:e} at r = {:e}", w[i], grid.nodes()[i])));
        }
        let u_r = grid
            .nodes()
            .iter()
            .zip(&w)
            .map(|(&r, &wi)| derivative_from_flux(wi, r, n, p))
            .collect();
        Ok(Self { grid, n, p, u, w, u_r })
    }

    /// Builds a profile from values and radial derivative (`u_r <= 0`).
    pub fn from_derivative(grid: RadialGrid, n: f64, p: f64, u: Vec<f64>, u_r: Vec<f64>) -> Result<Self> {
        validate_np(n, p)?;
        check_len(&grid, &u_r)?;
        let w = grid
            .nodes()
            .iter()
            .zip(&u_r)
            .map(|(&r, &d)| flux_from_derivative(d, r, n, p))
            .collect();
        Self::from_flux(grid, n, p, u, w)
    }

    /// `u ≡ 0`.
    pub fn zero(grid: RadialGrid, n: f64, p: f64) -> Result<Self> {
        let len = grid.len();
        Self::from_flux(grid, n, p, vec![0.0; len], vec![0.0; len])
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn r(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn u_r(&self) -> &[f64] {
        &self.u_r
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Value at the innermost node, the proxy for `u(0)`.
    pub fn center(&self) -> f64 {
        self.u[0]
    }

    pub fn boundary(&self) -> f64 {
        self.u[self.u.len() - 1]
    }

    pub fn sup(&self) -> f64 {
        self.u.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b.abs()))
    }

    /// The same profile shifted so that `u(1) = 0`.
    pub fn normalized(&self) -> Self {
        let b = self.boundary();
        Self { u: self.u.iter().map(|v| v - b).collect(), ..self.clone() }
    }

    /// Restriction to the nodes with index `>= start`, as a profile on a coarser inner radius.
    pub fn truncated(&self, start: usize) -> Result<Self> {
        let count = self.len() - start;
        let grid = RadialGrid::new(self.r()[start], count)?;
        Ok(Self {
            grid,
            n: self.n,
            p: self.p,
            u: self.u[start..].to_vec(),
            w: self.w[start..].to_vec(),
            u_r: self.u_r[start..].to_vec(),
        })
    }

    pub fn quadrature(&self) -> Result<QuadratureRule> {
        QuadratureRule::new(&self.grid, self.n)
    }

    /// `u(r)` by local quintic interpolation in `log r`.
    pub fn u_at(&self, r: f64) -> f64 {
        self.interpolate(&self.u, r)
    }

    /// `w(r)` by local quintic interpolation in `log r`.
    pub fn w_at(&self, r: f64) -> f64 {
        self.interpolate(&self.w, r).min(0.0)
    }

    /// `u_r(r)` derived from the interpolated flux.
    pub fn u_r_at(&self, r: f64) -> f64 {
        derivative_from_flux(self.w_at(r), r, self.n, self.p)
    }

    /// `w'(r)` from the derivative of the quintic interpolant.
    pub fn w_prime_at(&self, r: f64) -> f64 {
        lagrange_log_derivative(&self.grid, &self.w, r) / r
    }

    fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        lagrange_log(&self.grid, values, r)
    }
}

fn stencil(grid: &RadialGrid, r: f64) -> (f64, usize) {
    let len = grid.len();
    let pos = (r.ln() - grid.r_min().ln()) / grid.log_step();
    let start = (pos.floor() as isize - 2).clamp(0, len as isize - 6) as usize;
    (pos, start)
}

/// Quintic Lagrange interpolation in `s = log r` of nodal values.
pub(crate) fn lagrange_log(grid: &RadialGrid, values: &[f64], r: f64) -> f64 {
    let (pos, start) = stencil(grid, r);
    let mut acc = 0.0;
    for k in start..start + 6 {
        let mut l = 1.0;
        for j in start..start + 6 {
            if j != k {
                l *= (pos - j as f64) / (k as f64 - j as f64);
            }
        }
        acc += l * values[k];
    }
    acc
}

/// Derivative in `s = log r` of the quintic interpolant.
pub(crate) fn lagrange_log_derivative(grid: &RadialGrid, values: &[f64], r: f64) -> f64 {
    let (pos, start) = stencil(grid, r);
    let mut acc = 0.0;
    for k in start..start + 6 {
        let mut denom = 1.0;
        for j in start..start + 6 {
            if j != k {
                denom *= k as f64 - j as f64;
            }
        }
        let mut sum = 0.0;
        for m in start..start + 6 {
            if m == k {
                continue;
            }
            let mut prod = 1.0;
            for j in start..start + 6 {
                if j != k && j != m {
                    prod *= pos - j as f64;
                }
            }
            sum += prod;
        }
        acc += values[k] * sum / denom;
    }
    acc / grid.log_step()
}

/// `u_r = -(-w r^(1-n))^(1/(p-1))`.
#[inline]
pub fn derivative_from_flux(w: f64, r: f64, n: f64, p: f64) -> f64 {
    -signed_pow(-w * r.powf(1.0 - n), 1.0 / (p - 1.0))
}

/// `w = r^(n-1) |u_r|^(p-2) u_r`.
#[inline]
pub fn flux_from_derivative(u_r: f64, r: f64, n: f64, p: f64) -> f64 {
    r.powf(n - 1.0) * signed_pow(u_r, p - 1.0)
}

fn check_len(grid: &RadialGrid, v: &[f64]) -> Result<()> {
    if v.len() != grid.len() {
        return Err(invalid(format!("expected {} values, got {}", grid.len(), v.len())));
    }
    Ok(())
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(Error::NonFinite { index, value: v[index] }),
        None => Ok(()),
    }
}

/// `(1/p) ∫|∇u|^p − ∫G(u)` in radial units, for a caller-supplied antiderivative `G`.
pub fn energy_with<G: Fn(f64) -> f64>(profile: &RadialProfile, big_g: G) -> Result<f64> {
    let rule = profile.quadrature()?;
    let p = profile.p;
    let grad: Vec<f64> = profile.u_r.iter().map(|d| d.abs().powf(p)).collect();
    let pot: Vec<f64> = profile.u.iter().map(|&v| big_g(v)).collect();
    let e = integrate_radial(&grad, &rule)? / p - integrate_radial(&pot, &rule)?;
    if e.is_finite() {
        Ok(e)
    } else {
        Err(Error::NonFinite { index: 0, value: e })
    }
}

/// Energy with the closed-form antiderivative of `g`.
pub fn energy(profile: &RadialProfile, g: &NonlinearitySpec) -> Result<f64> {
    energy_with(profile, g.antiderivative()?)
}
