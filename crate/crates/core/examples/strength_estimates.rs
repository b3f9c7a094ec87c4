//! Prints the spin-gravity strength estimates: the energy ħg/c, the
//! equivalent magnetic field, and the ratio ωc/g against Earth's rotation.
//!
//! cargo run --release --example strength_estimates

use wvamag::model::{omega_to_field, strength_estimates, ExperimentParams, PhysicalConstants};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let constants = PhysicalConstants::CODATA;
    let report = strength_estimates(&constants);
    println!("hbar*g/c          = {:.6e} eV", report.energy_ev);
    println!("equivalent field  = {:.6e} T", report.field_tesla);
    println!("omega_E*c/g       = {:.6e}", report.mashhoon_ratio);
    println!("omega_g = g/c     = {:.6e} rad/s", report.omega_g);

    let params = ExperimentParams::reference_defaults();
    println!("\nprotocol at default parameters:");
    println!("  lambda*t*       = {:.6}", params.lambda_t_star());
    println!("  gamma           = {:.6e}", params.gamma());
    println!("  A_w = cot(theta)= {:.6e}", params.weak_value());
    println!("  alpha_1         = {:.6e}", params.predicted_alpha());
    println!(
        "  signal field    = {:.6e} T",
        omega_to_field(params.signal_frequency(), &constants)?
    );
    Ok(())
}
