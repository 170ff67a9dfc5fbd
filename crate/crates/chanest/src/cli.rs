//! Command-line front end: scenario ingestion, presets, sweeps and result
//! emission.
//!
//! Exit codes: 0 success, 1 configuration error, 2 every algorithm of a
//! scenario diverged, 3 output I/O error.

pub mod config;
pub mod output;
pub mod presets;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::experiment::{run_monte_carlo, steady_state_mse, MseTrajectory, ScenarioConfig};
use config::ConfigDocument;
use output::{emit_results, render_sweep_summary, write_atomic, OutputError, STEADY_STATE_TAIL};
use presets::{find_preset, list_presets};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "CHANEST_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ALL_DIVERGED: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "chanest", version, about = "Adaptive sparse channel estimation under impulsive noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario described by a TOML config file (or a manifest)
    Run {
        /// Path to the configuration document
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a named preset scenario
    Preset {
        /// Preset name (see `list-presets`)
        name: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// List the available presets
    ListPresets,
    /// Run a scenario once per value of a swept parameter
    Sweep {
        /// Key to sweep: phi, snr_db, sigma2_sq, mu, lambda_r or delta_r
        #[arg(long)]
        param: String,
        /// Comma-separated values to sweep over
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Base configuration file (defaults apply when omitted)
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo run count override
    #[arg(long)]
    runs: Option<usize>,
    /// Iterations-per-run override
    #[arg(long)]
    iterations: Option<usize>,
    /// Output directory (default: $CHANEST_OUT_DIR, then the working directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also emit a wide per-algorithm dB file for plotting
    #[arg(long)]
    plot_data: bool,
}

enum CliError {
    Config(String),
    AllDiverged(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::AllDiverged(_) => EXIT_ALL_DIVERGED,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::AllDiverged(m) | CliError::Io(m) => m,
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<OutputError> for CliError {
    fn from(e: OutputError) -> Self {
        match e {
            OutputError::Io { .. } => CliError::Io(e.to_string()),
            OutputError::Config(inner) => CliError::Config(inner.to_string()),
        }
    }
}

/// Parses `args` and runs the requested command, returning the process exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests arrive as "errors" with their text
            // attached; everything else is a usage problem.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return code;
        }
    };

    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ListPresets => {
            for p in list_presets() {
                println!("{:<6} {}", p.name, p.summary);
            }
            Ok(())
        }
        Command::Run { config, common } => {
            let doc = load_document(&config)?;
            let basename = config
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".to_string());
            single_run(doc, &basename, &common)
        }
        Command::Preset { name, common } => {
            let preset = find_preset(&name)
                .ok_or_else(|| CliError::Config(format!("unknown preset {name:?}; see `chanest list-presets`")))?;
            match preset.phi_sweep.clone() {
                Some(values) => sweep_run(preset.overrides, "phi", &values, preset.name, &common),
                None => single_run(preset.overrides, preset.name, &common),
            }
        }
        Command::Sweep { param, values, config, common } => {
            let doc = match &config {
                Some(path) => load_document(path)?,
                None => ConfigDocument::default(),
            };
            if values.is_empty() {
                return Err(CliError::Config("sweep needs at least one value".to_string()));
            }
            let basename = config
                .as_deref()
                .and_then(Path::file_stem)
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "sweep".to_string());
            sweep_run(doc, &param, &values, &basename, &common)
        }
    }
}

fn load_document(path: &Path) -> Result<ConfigDocument, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    Ok(ConfigDocument::from_toml(&text)?)
}

fn resolve_out_dir(common: &CommonArgs) -> Result<PathBuf, CliError> {
    let dir = common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", dir.display())))?;
    Ok(dir)
}

fn execute(scenario: &ScenarioConfig) -> Result<Vec<MseTrajectory>, CliError> {
    run_monte_carlo(scenario).map_err(|e| CliError::Config(format!("scenario failed: {e}")))
}

fn print_summary(label: &str, trajectories: &[MseTrajectory]) {
    for t in trajectories {
        match steady_state_mse(t, STEADY_STATE_TAIL) {
            Ok(tail_db) => println!(
                "{label}: {:<8} steady-state {:7.2} dB over {} runs ({} diverged)",
                t.algorithm.label(),
                tail_db,
                t.num_runs,
                t.diverged_runs
            ),
            Err(_) => println!(
                "{label}: {:<8} no completed runs ({} diverged)",
                t.algorithm.label(),
                t.diverged_runs
            ),
        }
    }
}

fn all_diverged(trajectories: &[MseTrajectory]) -> bool {
    trajectories.iter().all(|t| t.num_runs == 0)
}

fn single_run(mut doc: ConfigDocument, basename: &str, common: &CommonArgs) -> Result<(), CliError> {
    doc.apply_overrides(common.seed, common.runs, common.iterations);
    let scenario = doc.resolve()?;
    let out_dir = resolve_out_dir(common)?;
    let trajectories = execute(&scenario)?;
    let files = emit_results(
        &trajectories,
        &scenario,
        &out_dir,
        basename,
        common.plot_data,
        chrono::Utc::now().to_rfc3339(),
    )?;
    print_summary(basename, &trajectories);
    println!("wrote {}", files.csv.display());
    if all_diverged(&trajectories) {
        return Err(CliError::AllDiverged(format!(
            "every algorithm diverged in every run of {basename}"
        )));
    }
    Ok(())
}

fn sweep_run(
    base: ConfigDocument,
    param: &str,
    values: &[f64],
    basename: &str,
    common: &CommonArgs,
) -> Result<(), CliError> {
    let out_dir = resolve_out_dir(common)?;
    let mut results: Vec<(f64, Vec<MseTrajectory>)> = Vec::with_capacity(values.len());
    let mut dead_scenarios = Vec::new();
    for value in values {
        let mut doc = base.clone();
        doc.set_float_key(param, *value)?;
        doc.apply_overrides(common.seed, common.runs, common.iterations);
        let scenario = doc.resolve()?;
        let trajectories = execute(&scenario)?;
        let name = format!("{basename}_{param}{value}");
        let files = emit_results(
            &trajectories,
            &scenario,
            &out_dir,
            &name,
            common.plot_data,
            chrono::Utc::now().to_rfc3339(),
        )?;
        print_summary(&name, &trajectories);
        println!("wrote {}", files.csv.display());
        if all_diverged(&trajectories) {
            dead_scenarios.push(name.clone());
        }
        results.push((*value, trajectories));
    }
    let summary_path = out_dir.join(format!("{basename}_summary.csv"));
    write_atomic(&summary_path, &render_sweep_summary(param, &results)).map_err(CliError::from)?;
    println!("wrote {}", summary_path.display());
    if !dead_scenarios.is_empty() {
        return Err(CliError::AllDiverged(format!(
            "every algorithm diverged in: {}",
            dead_scenarios.join(", ")
        )));
    }
    Ok(())
}
