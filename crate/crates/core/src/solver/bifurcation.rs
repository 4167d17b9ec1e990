use serde::{Deserialize, Serialize};

use super::shoot::{shoot_with, ShootControls};
use crate::error::{invalid, Result};
use crate::grid::RadialGrid;
use crate::nonlinearity::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BifurcationControls {
    /// Boundary match `|u(1)| < tol * M`.
    pub tol: f64,
    pub secant_iterations: usize,
    pub bisection_iterations: usize,
    pub shoot: ShootControls,
}

impl Default for BifurcationControls {
    fn default() -> Self {
        Self { tol: 1e-8, secant_iterations: 60, bisection_iterations: 200, shoot: ShootControls::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub center: f64,
    /// `None` when no λ matched the boundary condition.
    pub lambda: Option<f64>,
    /// `u(1)` of the last shot.
    pub boundary: f64,
    pub iterations: usize,
    pub method: String,
}

/// For each center value `M`, the λ whose regular solution with `u(0) = M`
/// vanishes at `r = 1`.
pub fn bifurcation_curve(
    spec: &ProblemSpec,
    centers: &[f64],
    grid: &RadialGrid,
    controls: &BifurcationControls,
) -> Result<Vec<BifurcationPoint>> {
    if centers.iter().any(|m| !(*m > 0.0)) {
        return Err(invalid("center values must be positive"));
    }
    if centers.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("center values must be increasing"));
    }
    centers.iter().map(|&m| solve_point(spec, m, grid, controls)).collect()
}

fn solve_point(spec: &ProblemSpec, m: f64, grid: &RadialGrid, controls: &BifurcationControls) -> Result<BifurcationPoint> {
    // A failed shot overshoots: the profile dropped too fast.
    let boundary = |lambda: f64| match shoot_with(&spec.with_lambda(lambda), m, grid, &controls.shoot) {
        Ok(r) => r.boundary,
        Err(_) => -m,
    };
    let target = controls.tol * m;
    let f_m = spec.nonlinearity.shape(m)?;
    let guess = spec.n * (m * spec.p / (spec.p - 1.0)).powf(spec.p - 1.0) / f_m;

    let mut x0 = guess;
    let mut x1 = 1.1 * guess;
    let mut f0 = boundary(x0);
    let mut f1 = boundary(x1);
    let mut iterations = 2;
    for _ in 0..controls.secant_iterations {
        if f1.abs() < target {
            return Ok(BifurcationPoint { center: m, lambda: Some(x1), boundary: f1, iterations, method: "secant".into() });
        }
        if f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(x2 > 0.0) || !x2.is_finite() {
            break;
        }
        (x0, f0) = (x1, f1);
        x1 = x2;
        f1 = boundary(x1);
        iterations += 1;
    }

    // u(1) decreases in λ: bracket, then bisect.
    let (mut lo, mut hi) = (guess, guess);
    let (mut flo, mut fhi) = (boundary(lo), boundary(hi));
    while flo <= 0.0 && iterations < 4 * controls.bisection_iterations {
        lo *= 0.5;
        flo = boundary(lo);
        iterations += 1;
    }
    while fhi >= 0.0 && iterations < 4 * controls.bisection_iterations {
        hi *= 2.0;
        fhi = boundary(hi);
        iterations += 1;
    }
    if flo > 0.0 && fhi < 0.0 {
        for _ in 0..controls.bisection_iterations {
            let mid = 0.5 * (lo + hi);
            let fm = boundary(mid);
            iterations += 1;
            if fm.abs() < target {
                return Ok(BifurcationPoint { center: m, lambda: Some(mid), boundary: fm, iterations, method: "bisection".into() });
            }
            if fm > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Ok(BifurcationPoint { center: m, lambda: None, boundary: f1, iterations, method: "failed".into() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::nonlinearity::NonlinearitySpec;
    use approx::assert_relative_eq;

    #[test]
    fn gelfand_disk_curve() {
        let spec = ProblemSpec::new(2.0, 2.0, NonlinearitySpec::exponential(1.0)).unwrap();
        let grid = make_grid(1e-8, 1000).unwrap();
        let bs = [0.1, 0.5, 1.0, 2.0, 5.0];
        let centers: Vec<f64> = bs.iter().map(|b: &f64| 2.0 * b.ln_1p()).collect();
        let curve = bifurcation_curve(&spec, &centers, &grid, &BifurcationControls::default()).unwrap();
        for (pt, b) in curve.iter().zip(bs) {
            let exact = 8.0 * b / ((1.0 + b) * (1.0 + b));
            assert_relative_eq!(pt.lambda.unwrap(), exact, max_relative = 1e-6);
        }
    }

    #[test]
    fn small_center_small_parameter() {
        let spec = ProblemSpec::new(3.0, 2.0, NonlinearitySpec::exponential(1.0)).unwrap();
        let grid = make_grid(1e-6, 400).unwrap();
        let curve = bifurcation_curve(&spec, &[1e-6, 1e-4], &grid, &BifurcationControls::default()).unwrap();
        assert!(curve[0].lambda.unwrap() < curve[1].lambda.unwrap());
        assert!(curve[0].lambda.unwrap() < 1e-4);
    }

    #[test]
    fn rejects_unsorted_centers() {
        let spec = ProblemSpec::new(3.0, 2.0, NonlinearitySpec::exponential(1.0)).unwrap();
        let grid = make_grid(1e-6, 100).unwrap();
        assert!(bifurcation_curve(&spec, &[2.0, 1.0], &grid, &BifurcationControls::default()).is_err());
    }
}
