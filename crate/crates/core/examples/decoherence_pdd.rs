//! Calibrates the qubit damping rate to a pulse-free fidelity of 0.599 at
//! t*, then compares the fidelity at t* under 0, 10, 100 and 1000 πZ pulses
//! spread over 1.1125·t*.
//!
//! cargo run --release --example decoherence_pdd [fock_cutoff]

use std::time::Instant;

use rayon::prelude::*;
use wvamag::model::ExperimentParams;
use wvamag::noise::{calibrate_damping, fidelity_at, fidelity_curve, PDDSchedule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cutoff = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(16);
    let params = ExperimentParams::reference_defaults().with_cutoff(cutoff)?;
    let start = Instant::now();
    let noise = calibrate_damping(0.599, &params, params.t_star)?;
    println!(
        "calibrated damp_rate = {:.6} rad/s (Gamma*t* = {:.4}) in {:.2?}",
        noise.damp_rate,
        noise.damp_rate * params.t_star,
        start.elapsed()
    );

    let counts = [0usize, 10, 100, 1000];
    let fidelities: Vec<f64> = counts
        .par_iter()
        .map(|&n| {
            let schedule = PDDSchedule::default_for(&params, n)?;
            fidelity_at(&params, &noise, &schedule, params.t_star)
        })
        .collect::<Result<_, _>>()?;
    for (n, f) in counts.iter().zip(&fidelities) {
        println!("pulses {n:>5}: fidelity at t* = {f:.6}");
    }

    let schedule = PDDSchedule::default_for(&params, 1000)?;
    let curve = fidelity_curve(&params, &noise, &schedule, 9)?;
    println!("\nt/t*     fidelity (1000 pulses)");
    for (t, f) in curve {
        println!("{:<7.4}  {f:.6}", t / params.t_star);
    }
    println!("elapsed {:.2?}", start.elapsed());
    Ok(())
}
