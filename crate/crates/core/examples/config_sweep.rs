//! Drives the CLI layer from code: parses a TOML config with a θ sweep,
//! runs it, and prints the sweep table and the manifest hash. Running it
//! twice prints identical bytes.
//!
//! cargo run --release --example config_sweep

use wvamag::cli::config::{Experiment, RawConfig};
use wvamag::cli::run::{config_hash, run};

const CONFIG: &str = r#"
params.lambda_coupling = 500.0
params.theta_postselect = 1e-8

[sweep]
parameter = "params.theta_postselect"
scale = "log"
start = 1e-9
stop = 1e-5
points = 5
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = RawConfig::parse(CONFIG, false)?;
    let cfg = raw.resolve(Some(Experiment::Fisher), true)?;
    let artifacts = run(&cfg)?;
    println!("config hash {}", config_hash(&cfg)?);
    for file in artifacts.describe() {
        println!(
            "{:<14} {:>6} bytes  sha256 {}",
            file.path, file.bytes, file.sha256
        );
    }
    println!("\n{}", artifacts.get("sweep.csv").unwrap_or_default());
    Ok(())
}
