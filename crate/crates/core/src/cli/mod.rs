//! Command-line front end:
//! `wvamag <experiment> --config <path> [--out <dir>] [--set key=value ...]`.
//!
//! Exit codes: 0 success, 1 configuration error, 2 physics-regime error,
//! 3 numerical failure.

pub mod config;
pub mod output;
pub mod run;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use crate::error::{Error, Result};
use config::{Experiment, RawConfig, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "wvamag",
    version,
    about = "Trapped-ion weak-value-amplification magnetometry simulator"
)]
struct Cli {
    /// estimate | kick | flywheel | fisher | decohere | husimi | zassenhaus-check
    experiment: String,
    /// TOML or JSON configuration file (dotted keys or nested tables).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` and $WVAMAG_OUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set params.theta_postselect=1e-3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

/// Parsed invocation: the resolved configuration and where to write it.
pub struct Invocation {
    pub config: RunConfig,
    pub output_dir: PathBuf,
}

fn resolve(cli: &Cli) -> Result<Invocation> {
    let experiment: Experiment = cli.experiment.parse()?;
    let mut raw = match &cli.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    for assignment in &cli.set {
        raw.set(assignment)?;
    }
    let config = raw.resolve(Some(experiment), cli.config.is_some())?;
    let output_dir = raw.output_dir(cli.out.as_deref())?;
    Ok(Invocation { config, output_dir })
}

/// Runs the CLI and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let inv = resolve(cli)?;
    let artifacts = run::run(&inv.config)?;
    let written = run::write(&artifacts, &inv.output_dir)?;
    let mut stdout = std::io::stdout().lock();
    let report = |e: std::io::Error| Error::Io {
        path: "<stdout>".into(),
        message: e.to_string(),
    };
    writeln!(
        stdout,
        "{} -> {}",
        inv.config.experiment,
        inv.output_dir.display()
    )
    .map_err(report)?;
    for path in written {
        writeln!(stdout, "  {}", path.display()).map_err(report)?;
    }
    Ok(())
}
