use serde::{Deserialize, Serialize};

use super::iterate::{minimal_iterate, IterateControls, IterateOutcome};
use crate::error::{invalid, Error, Result};
use crate::grid::RadialGrid;
use crate::nonlinearity::ProblemSpec;
use crate::profile::RadialProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationControls {
    /// Stop once `(λ_hi - λ_lo)/λ_lo` is below this.
    pub tol_lambda: f64,
    pub lambda_start: f64,
    pub lambda_cap: f64,
    pub lambda_floor: f64,
    pub iterate: IterateControls,
}

impl Default for ContinuationControls {
    fn default() -> Self {
        Self {
            tol_lambda: 1e-3,
            lambda_start: 1.0,
            lambda_cap: 1e12,
            lambda_floor: 1e-12,
            iterate: IterateControls::default(),
        }
    }
}

/// One minimal-iteration run at a fixed λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaRecord {
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `sup u`, or the value reached when divergence was declared.
    pub sup: f64,
    pub w1p: Option<f64>,
    /// `∫ f(u)` without the parameter.
    pub f_l1: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationResult {
    /// Bracket midpoint, for display only.
    pub lambda_star_estimate: f64,
    /// Largest convergent and smallest divergent λ.
    pub bracket: (f64, f64),
    /// Every run, sorted by λ.
    pub records: Vec<LambdaRecord>,
    #[serde(skip)]
    pub extremal: Option<RadialProfile>,
}

impl ContinuationResult {
    pub fn lambda_lo(&self) -> f64 {
        self.bracket.0
    }

    pub fn lambda_hi(&self) -> f64 {
        self.bracket.1
    }

    pub fn relative_width(&self) -> f64 {
        (self.bracket.1 - self.bracket.0) / self.bracket.0
    }

    pub fn converged_records(&self) -> impl Iterator<Item = &LambdaRecord> {
        self.records.iter().filter(|r| r.converged)
    }
}

/// `(∫|u|^p + ∫|u_r|^p)^(1/p)` and `∫ f(u)`, in radial units.
pub(crate) fn branch_norms(profile: &RadialProfile, spec: &ProblemSpec) -> Result<(f64, f64)> {
    let rule = profile.quadrature()?;
    let p = profile.p();
    let values: Vec<f64> = profile.u().iter().map(|v| v.abs().powf(p)).collect();
    let grads: Vec<f64> = profile.u_r().iter().map(|v| v.abs().powf(p)).collect();
    let f: Vec<f64> = profile
        .u()
        .iter()
        .map(|&v| spec.nonlinearity.shape(v))
        .collect::<Result<_>>()?;
    let w1p = (rule.apply(&values) + rule.apply(&grads)).powf(1.0 / p);
    Ok((w1p, rule.apply(&f)))
}

fn run(spec: &ProblemSpec, lambda: f64, grid: &RadialGrid, controls: &IterateControls) -> Result<(LambdaRecord, Option<RadialProfile>)> {
    let s = spec.with_lambda(lambda);
    match minimal_iterate(&s, grid, controls)? {
        IterateOutcome::Converged { profile, iterations } => {
            let (w1p, f_l1) = branch_norms(&profile, &s)?;
            let rec = LambdaRecord {
                lambda,
                converged: true,
                iterations,
                sup: profile.sup(),
                w1p: Some(w1p),
                f_l1: Some(f_l1),
            };
            Ok((rec, Some(profile)))
        }
        IterateOutcome::Diverged(d) => Ok((
            LambdaRecord { lambda, converged: false, iterations: d.iterations, sup: d.sup, w1p: None, f_l1: None },
            None,
        )),
    }
}

/// Brackets the extremal parameter between the largest λ whose monotone
/// iteration converges and the smallest one where it diverges.
///
/// The λ of `spec` is ignored.
pub fn lambda_star_estimate(spec: &ProblemSpec, grid: &RadialGrid, controls: &ContinuationControls) -> Result<ContinuationResult> {
    spec.nonlinearity.check_extremal(spec.p)?;
    if !(controls.tol_lambda > 0.0) || !(controls.lambda_start > 0.0) {
        return Err(invalid("tol_lambda and lambda_start must be positive"));
    }
    let mut records = Vec::new();
    let mut lo: Option<(f64, RadialProfile)> = None;
    let mut hi: Option<f64> = None;
    let mut lambda = controls.lambda_start;

    while lo.is_none() || hi.is_none() {
        let (rec, prof) = run(spec, lambda, grid, &controls.iterate)?;
        records.push(rec);
        match prof {
            Some(p) => {
                lo = Some((lambda, p));
                if hi.is_none() {
                    if lambda >= controls.lambda_cap {
                        return Err(Error::NoDivergence { lambda_cap: controls.lambda_cap });
                    }
                    lambda = (lambda * 2.0).min(controls.lambda_cap);
                }
            }
            None => {
                hi = Some(lambda);
                if lo.is_none() {
                    lambda *= 0.5;
                    if lambda < controls.lambda_floor {
                        return Err(Error::EmptyBracket);
                    }
                }
            }
        }
    }
    let (mut lo, mut hi) = (lo.unwrap(), hi.unwrap());
    while (hi - lo.0) / lo.0 > controls.tol_lambda {
        let mid = 0.5 * (lo.0 + hi);
        if mid <= lo.0 || mid >= hi {
            break;
        }
        let (rec, prof) = run(spec, mid, grid, &controls.iterate)?;
        records.push(rec);
        match prof {
            Some(p) => lo = (mid, p),
            None => hi = mid,
        }
    }
    records.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(ContinuationResult {
        lambda_star_estimate: 0.5 * (lo.0 + hi),
        bracket: (lo.0, hi),
        records,
        extremal: Some(lo.1),
    })
}

/// The minimal solution at the largest convergent λ, approximating `u*`.
pub fn extremal_profile(result: &ContinuationResult) -> Result<RadialProfile> {
    result.extremal.clone().ok_or(Error::EmptyBracket)
}

/// Boundedness of `|u_λ|_W1p + |f(u_λ)|_L1` along `λ_j = λ_top (1 - 2^-j)`.
#[derive(Debug, Clone, Serialize)]
pub struct UniformBound {
    pub records: Vec<LambdaRecord>,
    pub totals: Vec<f64>,
    pub monotone: bool,
    /// Aitken extrapolation of the last three totals.
    pub extrapolated: f64,
    /// `max(totals) / extrapolated` never exceeds 1 for a monotone sequence;
    /// this is `extrapolated / last total`.
    pub ratio: f64,
    pub passed: bool,
}

pub fn uniform_bound_check(
    spec: &ProblemSpec,
    grid: &RadialGrid,
    lambda_top: f64,
    count: usize,
    controls: &IterateControls,
) -> Result<UniformBound> {
    if count < 3 {
        return Err(invalid("need at least three parameters for extrapolation"));
    }
    let mut records = Vec::with_capacity(count);
    let mut totals = Vec::with_capacity(count);
    for j in 1..=count {
        let lambda = lambda_top * (1.0 - 0.5f64.powi(j as i32));
        let (rec, _) = run(spec, lambda, grid, controls)?;
        if !rec.converged {
            return Err(invalid(format!("minimal iteration diverged at lambda = {lambda}, below the bracket")));
        }
        totals.push(rec.w1p.unwrap() + rec.f_l1.unwrap());
        records.push(rec);
    }
    let monotone = totals.windows(2).all(|w| w[1] >= w[0]);
    let k = totals.len();
    let (x1, x2, x3) = (totals[k - 3], totals[k - 2], totals[k - 1]);
    let denom = (x3 - x2) - (x2 - x1);
    let extrapolated = if denom < 0.0 && (x3 - x2) >= 0.0 { x3 - (x3 - x2) * (x3 - x2) / denom } else { x3 };
    let ratio = extrapolated / x3;
    let passed = monotone && ratio.is_finite() && ratio <= 1.05;
    Ok(UniformBound { records, totals, monotone, extrapolated, ratio, passed })
}
