//! One kick: evolve |↑,0⟩ with the effective unitary, post-select on |θ↓⟩
//! and compare the meter with the coherent state |zγA_w⟩.
//!
//! cargo run --release --example single_kick [theta]

use wvamag::model::ExperimentParams;
use wvamag::protocol::single_kick;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let theta: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(1e-8);
    let params = ExperimentParams::reference_defaults().with_theta(theta);
    let kick = single_kick(&params)?;
    println!("theta            = {theta:e}");
    println!("weak value A_w   = {:.6e}", kick.weak_value);
    println!("p_f              = {:.6e}", kick.p_f);
    println!("predicted alpha  = {:.8}", kick.predicted_alpha.re);
    println!("<a> of meter     = {:.8}", kick.mean_a());
    println!("<n> of meter     = {:.8}", kick.meter_state.mean_n());
    println!("coherent fidelity= {:.10}", kick.coherent_fidelity()?);
    println!("\n n   |c_n|^2");
    for (n, c) in kick.meter_state.amplitudes().iter().enumerate().take(6) {
        println!("{n:>2}   {:.6e}", c.norm_sqr());
    }
    Ok(())
}
