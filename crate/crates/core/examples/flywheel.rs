//! N repeated kicks with ideal qubit resets: the meter amplitude grows
//! linearly, ⟨a⟩ ≈ N·α₁, while the joint success probability falls as p_f^N.
//!
//! cargo run --release --example flywheel [n_kicks]

use wvamag::model::ExperimentParams;
use wvamag::protocol::flywheel_trace;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u32 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(5);
    let params = ExperimentParams::reference_defaults();
    println!("alpha_1 = {:.6}", params.predicted_alpha());
    println!("kick  predicted   <a>         <n>        fidelity    p_f          cumulative");
    for r in flywheel_trace(&params, n)? {
        println!(
            "{:>4}  {:<10.6}  {:<10.6}  {:<9.6}  {:<10.8}  {:<11.5e}  {:.5e}",
            r.kick_index,
            r.predicted_alpha.re,
            r.mean_a().re,
            r.meter_state.mean_n(),
            r.coherent_fidelity()?,
            r.p_f,
            r.cumulative_probability
        );
    }
    Ok(())
}
