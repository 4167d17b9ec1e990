use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::RadialGrid;
use crate::nonlinearity::ProblemSpec;
use crate::profile::{signed_pow, RadialProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootControls {
    /// RK4 substeps per grid cell.
    pub substeps: usize,
    /// `|u|` above this aborts the integration.
    pub blowup: f64,
    /// Largest startup-series correction accepted at the first node; the
    /// integration starts further in when the series is less accurate.
    pub series_tol: f64,
}

impl Default for ShootControls {
    fn default() -> Self {
        Self { substeps: 4, blowup: 1e12, series_tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct ShootResult {
    /// Raw integration, not shifted: `u(r_min)` is close to the center value `M`.
    pub profile: RadialProfile,
    pub center: f64,
    /// `u(1)`.
    pub boundary: f64,
    pub steps: usize,
    /// Smallest step in `r`.
    pub min_step: f64,
    /// Radius where the integration actually started.
    pub start_radius: f64,
    pub warnings: Vec<String>,
}

struct System<'a> {
    spec: &'a ProblemSpec,
    inv: f64,
}

impl System<'_> {
    /// Right side of the flux system in `s = log r`.
    #[inline]
    fn rhs(&self, s: f64, u: f64, w: f64) -> Result<(f64, f64)> {
        let n = self.spec.n;
        let r = s.exp();
        let du = -r * signed_pow(-w * (-(n - 1.0) * s).exp(), self.inv);
        let dw = -(n * s).exp() * self.spec.nonlinearity.value(u)?;
        Ok((du, dw))
    }

    fn step(&self, s: f64, h: f64, u: f64, w: f64) -> Result<(f64, f64)> {
        let (k1u, k1w) = self.rhs(s, u, w)?;
        let (k2u, k2w) = self.rhs(s + 0.5 * h, u + 0.5 * h * k1u, w + 0.5 * h * k1w)?;
        let (k3u, k3w) = self.rhs(s + 0.5 * h, u + 0.5 * h * k2u, w + 0.5 * h * k2w)?;
        let (k4u, k4w) = self.rhs(s + h, u + h * k3u, w + h * k3w)?;
        Ok((
            u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
        ))
    }
}

/// Integrates the regular solution with `u(0) = center` out to `r = 1`.
pub fn shoot(spec: &ProblemSpec, center: f64, grid: &RadialGrid) -> Result<ShootResult> {
    shoot_with(spec, center, grid, &ShootControls::default())
}

pub fn shoot_with(spec: &ProblemSpec, center: f64, grid: &RadialGrid, controls: &ShootControls) -> Result<ShootResult> {
    if !center.is_finite() {
        return Err(invalid(format!("center value must be finite, got {center}")));
    }
    if controls.substeps == 0 {
        return Err(invalid("substeps must be positive"));
    }
    let (n, p) = (spec.n, spec.p);
    let sys = System { spec, inv: 1.0 / (p - 1.0) };
    let g0 = spec.nonlinearity.value(center)?;
    let series = |r: f64| {
        let du = (p - 1.0) / p * signed_pow(g0 / n, sys.inv) * r.powf(p / (p - 1.0));
        (center - du, -r.powf(n) * g0 / n, du.abs())
    };

    let r = grid.nodes();
    let h = grid.log_step() / controls.substeps as f64;
    let mut steps = 0;
    let mut warnings = Vec::new();

    let (_, _, drop_at_min) = series(r[0]);
    let mut start_radius = r[0];
    let tol = controls.series_tol * center.abs().max(1.0);
    if drop_at_min > tol {
        start_radius = r[0] * (tol / drop_at_min).powf((p - 1.0) / p);
    }
    let (mut u, mut w, _) = series(start_radius);
    if start_radius < r[0] {
        let span = (r[0] / start_radius).ln();
        let inner = (span / h).ceil() as usize;
        let hi = span / inner as f64;
        let mut s = start_radius.ln();
        for _ in 0..inner {
            (u, w) = sys.step(s, hi, u, w)?;
            s += hi;
            steps += 1;
        }
        warnings.push(format!("startup series applied at r = {start_radius:e}, inside the grid"));
    }

    let mut us = Vec::with_capacity(r.len());
    let mut ws = Vec::with_capacity(r.len());
    us.push(u);
    ws.push(w);
    for i in 0..r.len() - 1 {
        let s0 = r[i].ln();
        for k in 0..controls.substeps {
            (u, w) = sys.step(s0 + k as f64 * h, h, u, w)?;
            steps += 1;
        }
        if !(u.abs() <= controls.blowup) || !w.is_finite() {
            return Err(Error::BlowUp { r: r[i + 1], u });
        }
        us.push(u);
        ws.push(w);
    }
    if let Some(i) = ws.iter().position(|&x| x > 0.0) {
        return Err(invalid(format!(
            "shot profile is not radially decreasing (flux {:e} at r = {:e})",
            ws[i], r[i]
        )));
    }
    let boundary = us[us.len() - 1];
    let min_step = r[0] * grid.log_step().exp_m1() / controls.substeps as f64;
    let profile = RadialProfile::from_flux(grid.clone(), n, p, us, ws)?;
    Ok(ShootResult { profile, center, boundary, steps, min_step, start_radius, warnings })
}
