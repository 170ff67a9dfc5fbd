//! Result emission: the canonical learning-curve CSV, the run manifest, an
//! optional wide plot-data file, and the sweep summary.
//!
//! All files are assembled in memory and written through a temporary name,
//! so a failing destination never leaves a partially written CSV behind.
//! Float fields use the shortest round-trippable decimal representation,
//! which makes repeated runs byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::experiment::{steady_state_mse, MseTrajectory, ScenarioConfig};

use super::config::{build_manifest, ConfigError};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Fraction of the trajectory used for steady-state summaries.
pub const STEADY_STATE_TAIL: f64 = 0.1;

/// Files produced by one emitted run.
#[derive(Debug)]
pub struct EmittedFiles {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub plot: Option<PathBuf>,
}

fn db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Renders the canonical CSV: header `iteration,algorithm,mse_linear,mse_db`,
/// rows sorted by (algorithm, iteration), LF line endings.
pub fn render_csv(trajectories: &[MseTrajectory]) -> String {
    let mut sorted: Vec<&MseTrajectory> = trajectories.iter().collect();
    sorted.sort_by_key(|t| t.algorithm.label());
    let mut out = String::from("iteration,algorithm,mse_linear,mse_db\n");
    for t in sorted {
        let label = t.algorithm.label();
        for (iteration, mse) in t.mse_per_iteration.iter().enumerate() {
            let _ = writeln!(out, "{iteration},{label},{mse},{}", db(*mse));
        }
    }
    out
}

/// Renders the wide plot-data CSV: one `iteration` column plus one dB column
/// per algorithm, in the sorted label order of the header.
pub fn render_plot_data(trajectories: &[MseTrajectory]) -> String {
    let mut sorted: Vec<&MseTrajectory> = trajectories.iter().filter(|t| !t.mse_per_iteration.is_empty()).collect();
    sorted.sort_by_key(|t| t.algorithm.label());
    let mut out = String::from("iteration");
    for t in &sorted {
        let _ = write!(out, ",{}", t.algorithm.label());
    }
    out.push('\n');
    let rows = sorted.iter().map(|t| t.mse_per_iteration.len()).max().unwrap_or(0);
    for i in 0..rows {
        let _ = write!(out, "{i}");
        for t in &sorted {
            match t.mse_per_iteration.get(i) {
                Some(mse) => {
                    let _ = write!(out, ",{}", db(*mse));
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Renders the sweep summary: steady-state dB per (swept value, algorithm).
/// Trajectories with no completed runs are skipped.
pub fn render_sweep_summary(param: &str, results: &[(f64, Vec<MseTrajectory>)]) -> String {
    let mut out = format!("{param},algorithm,steady_state_db\n");
    for (value, trajectories) in results {
        let mut sorted: Vec<&MseTrajectory> = trajectories.iter().collect();
        sorted.sort_by_key(|t| t.algorithm.label());
        for t in sorted {
            if let Ok(tail_db) = steady_state_mse(t, STEADY_STATE_TAIL) {
                let _ = writeln!(out, "{value},{},{tail_db}", t.algorithm.label());
            }
        }
    }
    out
}

/// Writes `contents` through a sibling temporary file and renames it into
/// place, so the destination never holds a truncated file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), OutputError> {
    let io_err = |source| OutputError::Io { path: path.to_path_buf(), source };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

/// Writes the CSV, the manifest and (optionally) the plot-data file for one
/// completed run under `dest/
/// <basename>.csv`, `<basename>.manifest.toml`, `<basename>.plot.csv`.
pub fn emit_results(
    trajectories: &[MseTrajectory],
    config: &ScenarioConfig,
    dest: &Path,
    basename: &str,
    plot_data: bool,
    created_utc: String,
) -> Result<EmittedFiles, OutputError> {
    let csv_path = dest.join(format!("{basename}.csv"));
    let manifest_path = dest.join(format!("{basename}.manifest.toml"));
    let plot_path = plot_data.then(|| dest.join(format!("{basename}.plot.csv")));

    let csv = render_csv(trajectories);
    let mut outputs = vec![file_name(&csv_path)];
    if let Some(p) = &plot_path {
        outputs.push(file_name(p));
    }
    outputs.push(file_name(&manifest_path));
    let manifest = build_manifest(config, outputs, created_utc)?;
    let plot = plot_path.as_ref().map(|_| render_plot_data(trajectories));

    write_atomic(&csv_path, &csv)?;
    if let (Some(p), Some(body)) = (&plot_path, &plot) {
        write_atomic(p, body)?;
    }
    write_atomic(&manifest_path, &manifest)?;
    Ok(EmittedFiles { csv: csv_path, manifest: manifest_path, plot: plot_path })
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}
