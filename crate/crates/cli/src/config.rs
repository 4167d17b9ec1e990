//! Run configuration: a TOML file with one table per concern, every key optional.

use std::path::{Path, PathBuf};

use plap_core::solver::{BifurcationControls, ContinuationControls, IterateControls, ShootControls};
use plap_core::{make_grid, EstimateControls, NonlinearitySpec, ProblemSpec, RadialGrid, StabilityControls};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Exponential,
    Power,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: f64,
    pub p: f64,
    pub kind: Kind,
    /// Exponent of `(1 + u)^m`; power kind only.
    pub m: Option<f64>,
    pub lambda: f64,
    /// Rows `[t, f(t), f'(t)]`; tabulated kind only.
    pub table: Option<Vec<[f64; 3]>>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self { n: 2.0, p: 2.0, kind: Kind::Exponential, m: None, lambda: 1.0, table: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub r_min: f64,
    pub count: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { r_min: 1e-8, count: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub u_max: f64,
    pub k_max: usize,
    pub tol_lambda: f64,
    pub lambda_start: f64,
    pub lambda_cap: f64,
    pub lambda_floor: f64,
    pub substeps: usize,
    pub blowup: f64,
    pub series_tol: f64,
    pub shoot_tol: f64,
    /// Center values `u(0)` for `bifurcate`.
    pub centers: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let it = IterateControls::default();
        let co = ContinuationControls::default();
        let sh = ShootControls::default();
        Self {
            tol_abs: it.tol_abs,
            tol_rel: it.tol_rel,
            u_max: it.u_max,
            k_max: it.k_max,
            tol_lambda: co.tol_lambda,
            lambda_start: co.lambda_start,
            lambda_cap: co.lambda_cap,
            lambda_floor: co.lambda_floor,
            substeps: sh.substeps,
            blowup: sh.blowup,
            series_tol: sh.series_tol,
            shoot_tol: BifurcationControls::default().tol,
            centers: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub r_trunc: f64,
    pub n_eig: usize,
    pub tol_eig: f64,
    pub gauss_points: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        let c = StabilityControls::default();
        Self { r_trunc: c.r_trunc, n_eig: c.n_eig, tol_eig: c.tol_eig, gauss_points: c.gauss_points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatesConfig {
    pub slope_tol: f64,
    pub fit_outer: f64,
    /// Exponents for the reported `L^q` and `W^{1,q}` norms.
    pub q: Vec<f64>,
}

impl Default for EstimatesConfig {
    fn default() -> Self {
        let c = EstimateControls::default();
        Self { slope_tol: c.slope_tol, fit_outer: c.fit_outer, q: vec![2.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("plap-out"), formats: vec![Format::Json, Format::Csv] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepCommand {
    Exponents,
    Solve,
    LambdaStar,
}

/// Cartesian parameter grid; an empty axis keeps the problem value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub command: SweepCommand,
    pub n: Vec<f64>,
    pub p: Vec<f64>,
    pub m: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { command: SweepCommand::LambdaStar, n: vec![], p: vec![], m: vec![], lambda: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub stability: StabilityConfig,
    pub estimates: EstimatesConfig,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {}", e.message().trim())))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn nonlinearity(&self) -> CliResult<NonlinearitySpec> {
        let pr = &self.problem;
        match pr.kind {
            Kind::Exponential => Ok(NonlinearitySpec::exponential(pr.lambda)),
            Kind::Power => {
                let m = pr.m.ok_or_else(|| CliError::Usage("problem.m is required for kind = \"power\"".into()))?;
                Ok(NonlinearitySpec::power(m, pr.lambda))
            }
            Kind::Tabulated => {
                let rows = pr.table.as_ref().ok_or_else(|| CliError::Usage("problem.table is required for kind = \"tabulated\"".into()))?;
                let nodes = rows.iter().map(|r| (r[0], r[1], r[2])).collect();
                Ok(NonlinearitySpec::tabulated(nodes, pr.lambda)?)
            }
        }
    }

    pub fn problem_spec(&self) -> CliResult<ProblemSpec> {
        Ok(ProblemSpec::new(self.problem.n, self.problem.p, self.nonlinearity()?)?)
    }

    pub fn grid(&self) -> CliResult<RadialGrid> {
        Ok(make_grid(self.grid.r_min, self.grid.count)?)
    }

    pub fn iterate_controls(&self) -> IterateControls {
        let s = &self.solver;
        IterateControls { tol_abs: s.tol_abs, tol_rel: s.tol_rel, u_max: s.u_max, k_max: s.k_max }
    }

    pub fn continuation_controls(&self) -> ContinuationControls {
        let s = &self.solver;
        ContinuationControls {
            tol_lambda: s.tol_lambda,
            lambda_start: s.lambda_start,
            lambda_cap: s.lambda_cap,
            lambda_floor: s.lambda_floor,
            iterate: self.iterate_controls(),
        }
    }

    pub fn bifurcation_controls(&self) -> BifurcationControls {
        let s = &self.solver;
        BifurcationControls {
            tol: s.shoot_tol,
            shoot: ShootControls { substeps: s.substeps, blowup: s.blowup, series_tol: s.series_tol },
            ..BifurcationControls::default()
        }
    }

    pub fn stability_controls(&self) -> StabilityControls {
        let s = &self.stability;
        StabilityControls { r_trunc: s.r_trunc, n_eig: s.n_eig, tol_eig: s.tol_eig, gauss_points: s.gauss_points, sensitivity: true }
    }

    pub fn estimate_controls(&self) -> EstimateControls {
        EstimateControls { slope_tol: self.estimates.slope_tol, fit_outer: self.estimates.fit_outer }
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml("[grid]\nr_mni = 1e-6\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("r_mni"), "{err}");
    }

    #[test]
    fn power_needs_exponent() {
        let cfg = RunConfig::from_toml("[problem]\nkind = \"power\"\n").unwrap();
        assert!(cfg.nonlinearity().is_err());
        let cfg = RunConfig::from_toml("[problem]\nkind = \"power\"\nm = 3.0\nn = 4\n").unwrap();
        assert_eq!(cfg.problem_spec().unwrap().nonlinearity, NonlinearitySpec::power(3.0, 1.0));
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.problem.table = Some(vec![[0.0, 1.0, 1.0], [2.0, 3.0, 1.0]]);
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }
}
