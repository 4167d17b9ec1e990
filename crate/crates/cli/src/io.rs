//! Profile CSV, JSON reports and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use plap_core::{RadialGrid, RadialProfile};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const SCHEMA: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every JSON report: what produced it and the fully resolved config.
#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub result: T,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(command: &'a str, config: &'a RunConfig, result: T) -> Self {
        Self { schema: SCHEMA, tool: "plap", version: VERSION, command, config, result }
    }

    pub fn to_json(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_value(&self) -> CliResult<serde_json::Value> {
        Ok(serde_json::to_value(self)?)
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let name = path.file_name().ok_or_else(|| CliError::Usage(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// 17 significant digits: enough to read back the same binary64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    r: f64,
    u: f64,
    u_r: f64,
    w: f64,
}

pub fn profile_csv(profile: &RadialProfile) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["r", "u", "u_r", "w"])?;
    for i in 0..profile.len() {
        w.write_record([profile.r()[i], profile.u()[i], profile.u_r()[i], profile.w()[i]].map(fmt_f64))?;
    }
    w.into_inner().map_err(|e| CliError::Internal(e.to_string()))
}

pub fn write_profile(path: &Path, profile: &RadialProfile) -> CliResult<()> {
    write_atomic(path, &profile_csv(profile)?)
}

/// Reads a profile written by [`write_profile`]. The radii must form the log
/// grid starting at the first one, and `u_r` must agree with the flux.
pub fn read_profile(path: &Path, n: f64, p: f64) -> CliResult<RadialProfile> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError::Usage(format!("cannot read profile {}: {e}", path.display())))?;
    let headers = rd.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["r", "u", "u_r", "w"] {
        return Err(CliError::Usage(format!("{}: expected header r,u,u_r,w", path.display())));
    }
    let rows: Vec<Row> = rd.deserialize().collect::<Result<_, _>>()?;
    if rows.len() < 8 {
        return Err(CliError::Usage(format!("{}: too few rows", path.display())));
    }
    let grid = RadialGrid::new(rows[0].r, rows.len())?;
    if let Some((i, row)) = grid.nodes().iter().zip(&rows).enumerate().find(|(_, (a, row))| **a != row.r).map(|(i, (_, row))| (i, row)) {
        return Err(CliError::Usage(format!("{}: row {i} radius {} is not on the log grid", path.display(), row.r)));
    }
    let u = rows.iter().map(|r| r.u).collect();
    let w = rows.iter().map(|r| r.w).collect();
    let profile = RadialProfile::from_flux(grid, n, p, u, w)?;
    for (i, (a, row)) in profile.u_r().iter().zip(&rows).enumerate() {
        if (a - row.u_r).abs() > 1e-12 * a.abs().max(row.u_r.abs()) {
            return Err(CliError::Usage(format!("{}: row {i} u_r = {} disagrees with the flux (n = {n}, p = {p})", path.display(), row.u_r)));
        }
    }
    Ok(profile)
}
