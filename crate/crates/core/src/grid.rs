//! Log-spaced radial grids and product quadrature for the measure `r^(n-1) dr`.
//!
//! Integrals over the unit ball of radial functions are reported in radial
//! units: `∫_0^1 h(r) r^(n-1) dr`, i.e. the ball integral divided by the
//! surface measure of the unit sphere.
//!
//! The quadrature interpolates `h` by local quadratics in `r` and integrates
//! the interpolant against the power weight exactly, so it is exact for
//! `h ∈ span{1, r, r²}` and third order for smooth `h`. Because the grid is
//! geometric, every cell is a scaled copy of one reference cell and the
//! weights of the whole grid come from a single reference computation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Smallest admissible node count.
pub const MIN_NODES: usize = 16;
/// Default inner radius.
pub const DEFAULT_R_MIN: f64 = 1e-8;
/// Default node count.
pub const DEFAULT_NODES: usize = 2000;

/// Strictly increasing radii from `r_min` to 1, uniform in `log r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r_min: f64,
    nodes: Vec<f64>,
    log_step: f64,
}

impl RadialGrid {
    pub fn new(r_min: f64, count: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_min < 1.0) {
            return Err(invalid(format!("r_min must lie in (0, 1), got {r_min}")));
        }
        if count < MIN_NODES {
            return Err(invalid(format!("grid needs at least {MIN_NODES} nodes, got {count}")));
        }
        let log_min = r_min.ln();
        let last = (count - 1) as f64;
        let mut nodes: Vec<f64> = (0..count)
            .map(|i| (log_min * (1.0 - i as f64 / last)).exp())
            .collect();
        nodes[0] = r_min;
        nodes[count - 1] = 1.0;
        Ok(Self { r_min, nodes, log_step: -log_min / last })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Uniform spacing in `log r`.
    pub fn log_step(&self) -> f64 {
        self.log_step
    }

    /// Ratio between consecutive nodes.
    pub fn ratio(&self) -> f64 {
        self.log_step.exp()
    }

    /// Index of the node closest to `r` in log distance.
    pub fn nearest_index(&self, r: f64) -> usize {
        let pos = (r.ln() - self.r_min.ln()) / self.log_step;
        (pos.round().max(0.0) as usize).min(self.len() - 1)
    }
}

/// `make_grid` in functional form.
pub fn make_grid(r_min: f64, count: usize) -> Result<RadialGrid> {
    RadialGrid::new(r_min, count)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(points: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(points >= 1);
    if points == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let n = points;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Cell-by-cell integration of `h(r) r^beta dr` on a [`RadialGrid`].
///
/// Cell `[r_i, r_{i+1}]` interpolates `h` through nodes `i, i+1, i+2`
/// (the last cell through `N-3, N-2, N-1`).
#[derive(Debug, Clone)]
pub struct CellRule {
    beta: f64,
    first: [f64; 3],
    second: [f64; 3],
    scale: Vec<f64>,
}

impl CellRule {
    pub fn new(grid: &RadialGrid, beta: f64) -> Self {
        let dq = grid.log_step.exp_m1();
        let q = 1.0 + dq;
        // Local coordinate x = (rho - 1) / (q - 1); stencil nodes sit at 0, 1, 1 + q.
        let xs = [0.0, 1.0, 1.0 + q];
        let (gx, gw) = gauss_legendre(10);
        let integrate = |lo: f64, hi: f64| {
            let mut out = [0.0; 3];
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (&t, &wt) in gx.iter().zip(&gw) {
                let x = mid + half * t;
                let weight = (beta * (dq * x).ln_1p()).exp() * wt * half * dq;
                for (k, o) in out.iter_mut().enumerate() {
                    let mut l = 1.0;
                    for (j, &xj) in xs.iter().enumerate() {
                        if j != k {
                            l *= (x - xj) / (xs[k] - xj);
                        }
                    }
                    *o += l * weight;
                }
            }
            out
        };
        let first = integrate(0.0, 1.0);
        let second = integrate(1.0, 1.0 + q);
        let scale = grid.nodes.iter().map(|r| r.powf(beta + 1.0)).collect();
        Self { beta, first, second, scale }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn cells(&self) -> usize {
        self.scale.len() - 1
    }

    /// Integral of the local interpolant of `h` times `r^beta` over cell `i`.
    #[inline]
    pub fn cell(&self, i: usize, h: &[f64]) -> f64 {
        let last = self.scale.len() - 1;
        if i + 2 <= last {
            self.scale[i]
                * (self.first[0] * h[i] + self.first[1] * h[i + 1] + self.first[2] * h[i + 2])
        } else {
            let j = last - 2;
            self.scale[j]
                * (self.second[0] * h[j] + self.second[1] * h[j + 1] + self.second[2] * h[j + 2])
        }
    }

    /// Node weights of the composite rule over `[r_min, 1]`.
    pub fn node_weights(&self) -> Vec<f64> {
        let n = self.scale.len();
        let mut w = vec![0.0; n];
        for i in 0..n - 1 {
            let (j, ws) = if i + 2 <= n - 1 { (i, &self.first) } else { (n - 3, &self.second) };
            for k in 0..3 {
                w[j + k] += self.scale[j] * ws[k];
            }
        }
        w
    }

    /// Running integrals `C_i = ∫_{r_min}^{r_i} h r^beta dr`, plus `start`.
    pub fn cumulative_from_start(&self, h: &[f64], start: f64, out: &mut [f64]) {
        out[0] = start;
        for i in 0..self.cells() {
            out[i + 1] = out[i] + self.cell(i, h);
        }
    }

    /// Running integrals `T_i = ∫_{r_i}^{1} h r^beta dr`.
    pub fn cumulative_to_end(&self, h: &[f64], out: &mut [f64]) {
        let n = self.scale.len();
        out[n - 1] = 0.0;
        for i in (0..n - 1).rev() {
            out[i] = out[i + 1] + self.cell(i, h);
        }
    }
}

/// Weights for `∫_0^1 h(r) r^(n-1) dr` on a grid, including the head `[0, r_min]`
/// where `h` is taken constant at its `r_min` value.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    dimension: f64,
    cells: CellRule,
    weights: Vec<f64>,
    head: f64,
}

impl QuadratureRule {
    pub fn new(grid: &RadialGrid, dimension: f64) -> Result<Self> {
        if !(dimension >= 1.0) || !dimension.is_finite() {
            return Err(invalid(format!("dimension must be >= 1, got {dimension}")));
        }
        let cells = CellRule::new(grid, dimension - 1.0);
        let weights = cells.node_weights();
        let head = grid.r_min.powf(dimension) / dimension;
        Ok(Self { dimension, cells, weights, head })
    }

    pub fn dimension(&self) -> f64 {
        self.dimension
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight multiplying `h(r_min)` for the head interval.
    pub fn head(&self) -> f64 {
        self.head
    }

    pub fn cells(&self) -> &CellRule {
        &self.cells
    }

    /// `∫_0^1 h r^(n-1) dr` without input validation.
    #[inline]
    pub fn apply(&self, h: &[f64]) -> f64 {
        self.head * h[0] + self.weights.iter().zip(h).map(|(w, v)| w * v).sum::<f64>()
    }

    /// `∫_{r_i}^1 h r^(n-1) dr` (head excluded), for tail studies.
    pub fn tail_from(&self, h: &[f64], start: usize) -> f64 {
        let mut acc = 0.0;
        for i in (start..self.cells.cells()).rev() {
            acc += self.cells.cell(i, h);
        }
        acc
    }
}

/// `∫_0^1 h r^(n-1) dr` for values `h` at the grid nodes.
pub fn integrate_radial(h: &[f64], rule: &QuadratureRule) -> Result<f64> {
    if h.len() != rule.weights.len() {
        return Err(invalid(format!(
            "expected {} values, got {}",
            rule.weights.len(),
            h.len()
        )));
    }
    if let Some((index, &value)) = h.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    Ok(rule.apply(h))
}
