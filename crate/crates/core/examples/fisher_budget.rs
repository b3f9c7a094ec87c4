//! Fisher-information budget: how the total 4z² splits between the kept
//! meter and the discarded post-selection outcome, in closed form and by
//! finite differences on the simulated state.
//!
//! cargo run --release --example fisher_budget

use wvamag::fisher::fisher_budget;
use wvamag::model::ExperimentParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let quoted = ExperimentParams::quoted_fisher_defaults();
    let computed = ExperimentParams::reference_defaults();
    for (label, params) in [
        ("gamma = 1e-11", quoted.clone()),
        ("gamma from g/c", computed),
    ] {
        let r = fisher_budget(&params)?;
        println!(
            "{label}: gamma = {:.4e}, x = zγA_w = {:.4e}",
            r.gamma, r.amplification
        );
        println!("  F_T        = {:.6}", r.f_total);
        println!(
            "  F_m        = {:.6}   (numeric {:.6})",
            r.f_meter, r.f_meter_numeric
        );
        println!(
            "  F_pf       = {:.6e} (numeric {:.6e})",
            r.f_postselect, r.f_postselect_numeric
        );
        println!(
            "  F_m/F_T    = {:.8}   (1 - x² = {:.8})",
            r.retention, r.retention_approx
        );
        println!("  discarded  = {:.6e}", r.discard_fraction);
    }

    println!("\ntheta sweep at gamma = 1e-11:");
    println!("theta       x            F_m/F_T");
    for theta in [1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-6, 1e-3] {
        let r = fisher_budget(&quoted.with_theta(theta))?;
        println!(
            "{theta:<10.0e}  {:<11.4e}  {:.8}",
            r.amplification, r.retention
        );
    }
    Ok(())
}
