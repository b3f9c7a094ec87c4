//! Adjudicates the summed Zassenhaus constant against the time-ordered
//! oracle propagator and prints the per-order table, the plateau scan and
//! any discrepancy record.
//!
//! cargo run --release --example zassenhaus_check [oracle_steps]

use std::time::Instant;

use wvamag::model::ExperimentParams;
use wvamag::zassenhaus::zassenhaus_check;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let steps = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(10_000);
    let params = ExperimentParams::reference_defaults();
    let start = Instant::now();
    let report = zassenhaus_check(&params, steps)?;

    println!("order  coefficient            weight   contribution");
    for row in &report.series {
        println!(
            "{:>5}  {:>+20.12e}  {:>7}  {:>+14.8}",
            row.order, row.coefficient, row.reduced_weight, row.contribution
        );
    }
    println!("typeset series z_sum      = {:+.6}", report.z_sum);
    println!("operator-form z           = {:+.6}", report.operator_z);
    println!("quoted z                  = {:+.6}", report.quoted_z);
    println!(
        "first omitted order       = {:.3e}",
        report.truncation_estimate
    );
    println!();
    println!("omega_g*t*      ratio (re)            ratio (im)");
    for s in &report.plateau {
        println!(
            "{:<14.4e}  {:+.10e}  {:+.10e}",
            s.phase, s.ratio_re, s.ratio_im
        );
    }
    println!(
        "plateau spread            = {:.3e} (flat: {})",
        report.plateau_spread, report.plateau_flat
    );
    println!("oracle z (mean Re ratio)  = {:+.6e}", report.oracle_z);
    println!(
        "|<psi_oracle|psi_eff>|    = {:.12}",
        report.effective_overlap
    );
    println!("linearity ratio (2x phase)= {:.6}", report.linearity_ratio);
    println!("agrees with quoted z      = {}", report.agrees_with_quoted);
    if let Some(d) = &report.discrepancy {
        println!("discrepancy record:");
        for note in &d.notes {
            println!("  - {note}");
        }
    }
    println!("elapsed {:.2?} at {steps} steps", start.elapsed());
    Ok(())
}
