use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{CellRule, QuadratureRule, RadialGrid};
use crate::nonlinearity::ProblemSpec;
use crate::profile::RadialProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IterateControls {
    pub tol_abs: f64,
    pub tol_rel: f64,
    /// Divergence once `sup u` exceeds this.
    pub u_max: f64,
    /// Divergence once this many iterations were spent without converging.
    pub k_max: usize,
}

impl Default for IterateControls {
    fn default() -> Self {
        Self { tol_abs: 1e-10, tol_rel: 1e-10, u_max: 1e6, k_max: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub iterations: usize,
    pub sup: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub enum IterateOutcome {
    Converged { profile: RadialProfile, iterations: usize },
    Diverged(Divergence),
}

impl IterateOutcome {
    pub fn converged(&self) -> Option<&RadialProfile> {
        match self {
            IterateOutcome::Converged { profile, .. } => Some(profile),
            IterateOutcome::Diverged(_) => None,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            IterateOutcome::Converged { iterations, .. } => *iterations,
            IterateOutcome::Diverged(d) => d.iterations,
        }
    }
}

/// Monotone iteration `-Δ_p u^k = λ f(u^(k-1))`, `u^0 = 0`, `u^k(1) = 0`.
///
/// Each step integrates the source twice: once against `t^(n-1)` from the
/// center to get the flux, once in `r` from the boundary to get `u`.
pub fn minimal_iterate(spec: &ProblemSpec, grid: &RadialGrid, controls: &IterateControls) -> Result<IterateOutcome> {
    let g = &spec.nonlinearity;
    if !(g.lambda >= 0.0) {
        return Err(invalid("lambda must be nonnegative"));
    }
    let (n, p) = (spec.n, spec.p);
    let len = grid.len();
    let r = grid.nodes();
    let inner = CellRule::new(grid, n - 1.0);
    let outer = CellRule::new(grid, 0.0);
    let head = QuadratureRule::new(grid, n)?.head();
    let inv = 1.0 / (p - 1.0);
    let r_pow: Vec<f64> = r.iter().map(|x| x.powf(1.0 - n)).collect();

    let mut u = vec![0.0; len];
    let mut next = vec![0.0; len];
    let mut source = vec![0.0; len];
    let mut flux = vec![0.0; len];
    let mut slope = vec![0.0; len];

    for k in 1..=controls.k_max {
        for (s, &v) in source.iter_mut().zip(&u) {
            *s = match g.value(v) {
                Ok(x) => x,
                Err(Error::Evaluation(_)) => {
                    return Ok(IterateOutcome::Diverged(Divergence {
                        iterations: k,
                        sup: u[0],
                        reason: format!("nonlinearity overflowed at u = {v:e}"),
                    }))
                }
                Err(e) => return Err(e),
            };
        }
        inner.cumulative_from_start(&source, head * source[0], &mut flux);
        for i in 0..len {
            let q = (flux[i] * r_pow[i]).max(0.0);
            slope[i] = if inv == 1.0 { q } else { q.powf(inv) };
        }
        outer.cumulative_to_end(&slope, &mut next);

        let sup = next.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if !sup.is_finite() || sup > controls.u_max {
            return Ok(IterateOutcome::Diverged(Divergence {
                iterations: k,
                sup,
                reason: format!("sup u exceeded {:e}", controls.u_max),
            }));
        }
        let slack = 1e-12 * sup + 1e-300;
        let mut change = 0.0f64;
        for i in 0..len {
            let d = next[i] - u[i];
            if d < -slack {
                return Err(Error::MonotonicityViolation { iteration: k, node: i, drop: -d });
            }
            change = change.max(d.abs());
        }
        std::mem::swap(&mut u, &mut next);
        if change < controls.tol_abs + controls.tol_rel * sup {
            let w: Vec<f64> = flux.iter().map(|f| -f.max(0.0)).collect();
            let profile = RadialProfile::from_flux(grid.clone(), n, p, u, w)?;
            return Ok(IterateOutcome::Converged { profile, iterations: k });
        }
    }
    Ok(IterateOutcome::Diverged(Divergence {
        iterations: controls.k_max,
        sup: u[0],
        reason: format!("no convergence within {} iterations", controls.k_max),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::nonlinearity::NonlinearitySpec;
    use crate::oracle::LiouvilleDisk;

    fn gelfand_disk(lambda: f64) -> ProblemSpec {
        ProblemSpec::new(2.0, 2.0, NonlinearitySpec::exponential(lambda)).unwrap()
    }

    #[test]
    fn zero_parameter_gives_zero() {
        let grid = make_grid(1e-8, 200).unwrap();
        let out = minimal_iterate(&gelfand_disk(0.0), &grid, &IterateControls::default()).unwrap();
        match out {
            IterateOutcome::Converged { profile, iterations } => {
                assert_eq!(iterations, 1);
                assert!(profile.u().iter().all(|&u| u == 0.0));
            }
            IterateOutcome::Diverged(d) => panic!("{d:?}"),
        }
    }

    #[test]
    fn liouville_minimal_solution() {
        let grid = make_grid(1e-8, 2000).unwrap();
        let out = minimal_iterate(&gelfand_disk(1.0), &grid, &IterateControls::default()).unwrap();
        let prof = out.converged().expect("converges below the fold");
        let exact = LiouvilleDisk::minimal(1.0).unwrap();
        for (r, u) in grid.nodes().iter().zip(prof.u()) {
            assert!((u - exact.u(*r)).abs() < 1e-7, "r = {r:e}: {u} vs {}", exact.u(*r));
        }
    }

    #[test]
    fn liouville_above_fold_diverges() {
        let grid = make_grid(1e-8, 1000).unwrap();
        let out = minimal_iterate(&gelfand_disk(3.0), &grid, &IterateControls::default()).unwrap();
        assert!(matches!(out, IterateOutcome::Diverged(_)));
    }

    #[test]
    fn quasilinear_iteration_converges() {
        let spec = ProblemSpec::new(5.0, 3.0, NonlinearitySpec::exponential(1.0)).unwrap();
        let grid = make_grid(1e-8, 1000).unwrap();
        let out = minimal_iterate(&spec, &grid, &IterateControls::default()).unwrap();
        let prof = out.converged().unwrap();
        assert!(prof.u().windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(prof.boundary(), 0.0);
    }
}
