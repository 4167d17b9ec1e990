//! Command-line surface. Flags override the config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, ProfileSource};
use crate::config::{Kind, RunConfig};
use crate::error::{CliError, CliResult};
use crate::sweep;
use crate::verify::{self, Preset};

#[derive(Debug, Parser)]
#[command(name = "plap", version, about = "Radial p-Laplacian reaction problems in the unit ball")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for `sweep`.
    #[arg(long, global = true, default_value_t = 1, value_name = "N")]
    pub jobs: usize,
    /// Recompute sweep points that already have a report.
    #[arg(long, global = true)]
    pub force: bool,
    #[arg(long, global = true)]
    pub n: Option<f64>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long, global = true)]
    pub m: Option<f64>,
    #[arg(long, global = true)]
    pub r_min: Option<f64>,
    #[arg(long, global = true)]
    pub count: Option<usize>,
    #[arg(long, global = true)]
    pub r_trunc: Option<f64>,
    #[arg(long, global = true)]
    pub n_eig: Option<usize>,
    #[arg(long, global = true)]
    pub tol_lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KindArg {
    Exponential,
    Power,
    Tabulated,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Exponential => Kind::Exponential,
            KindArg::Power => Kind::Power,
            KindArg::Tabulated => Kind::Tabulated,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Critical dimension, integrability exponents and regime for (n, p).
    Exponents,
    /// Minimal solution at the configured λ, with stability and regularity reports.
    Solve,
    /// Bracket the extremal parameter λ*.
    LambdaStar,
    /// λ against the center value, by shooting.
    Bifurcate {
        /// Center values, comma separated.
        #[arg(long, value_delimiter = ',')]
        centers: Option<Vec<f64>>,
    },
    /// Semi-stability of a profile read from CSV or of the singular solution.
    Stability {
        #[arg(long, value_name = "CSV", conflicts_with = "exact", required_unless_present = "exact")]
        profile: Option<PathBuf>,
        #[arg(long)]
        exact: bool,
        /// Exit 3 unless the verdict is semi-stable.
        #[arg(long)]
        require_stable: bool,
    },
    /// Run the acceptance checks for one problem.
    Verify {
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Run a command over the `[sweep]` parameter grid.
    Sweep,
}

impl GlobalArgs {
    /// Loads the config file, if any, and applies the flag overrides.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let pr = &mut cfg.problem;
        if let Some(v) = self.n {
            pr.n = v;
        }
        if let Some(v) = self.p {
            pr.p = v;
        }
        if let Some(v) = self.lambda {
            pr.lambda = v;
        }
        if let Some(v) = self.kind {
            pr.kind = v.into();
        }
        if let Some(v) = self.m {
            pr.m = Some(v);
        }
        if let Some(v) = self.r_min {
            cfg.grid.r_min = v;
        }
        if let Some(v) = self.count {
            cfg.grid.count = v;
        }
        if let Some(v) = self.r_trunc {
            cfg.stability.r_trunc = v;
        }
        if let Some(v) = self.n_eig {
            cfg.stability.n_eig = v;
        }
        if let Some(v) = self.tol_lambda {
            cfg.solver.tol_lambda = v;
        }
        if let Some(v) = &self.out {
            cfg.output.directory = v.clone();
        }
        if self.jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        Ok(cfg)
    }
}

/// Runs the parsed command and returns the JSON for stdout.
pub fn run(cli: &Cli) -> CliResult<serde_json::Value> {
    let mut cfg = cli.global.resolve()?;
    let out = cfg.output.directory.clone();
    match &cli.command {
        Command::Exponents => commands::exponents(&cfg),
        Command::Solve => commands::solve(&cfg, &out),
        Command::LambdaStar => commands::lambda_star(&cfg, &out),
        Command::Bifurcate { centers } => {
            if let Some(c) = centers {
                cfg.solver.centers = c.clone();
            }
            commands::bifurcate(&cfg, &out)
        }
        Command::Stability { profile, exact, require_stable } => {
            let source = match (profile, exact) {
                (Some(path), false) => ProfileSource::File(path.clone()),
                _ => ProfileSource::Exact,
            };
            commands::stability(&cfg, &source, &out, *require_stable)
        }
        Command::Verify { preset } => {
            let scenario = match preset {
                Some(p) => {
                    p.apply(&mut cfg)?;
                    p.name().to_string()
                }
                None => "custom".to_string(),
            };
            verify::verify(&cfg, &scenario, &out)
        }
        Command::Sweep => {
            let res = sweep::run(&cfg, &out, cli.global.jobs, cli.global.force)?;
            Ok(serde_json::json!({
                "index": res.index,
                "rows": res.rows,
                "skipped": res.skipped,
            }))
        }
    }
}
