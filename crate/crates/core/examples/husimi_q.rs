//! Husimi Q function of the meter after N kicks, printed as a coarse ASCII
//! map. Markers: x the initial (vacuum) centre, + the one-kick centre α₁,
//! N the N-kick prediction Nα₁.
//!
//! cargo run --release --example husimi_q [n_kicks]

use num_complex::Complex64;
use wvamag::model::ExperimentParams;
use wvamag::phasespace::{husimi_q_pure, GridSpec};
use wvamag::protocol::flywheel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u32 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(5);
    let params = ExperimentParams::reference_defaults();
    let kick = flywheel(&params, n)?;
    let spec = GridSpec {
        center: Some([0.0, 0.0]),
        half_width: 2.5,
        resolution: 41,
        auto_extend: true,
    };
    let q = husimi_q_pure(&kick.meter_state, &spec)?
        .with_marker("x", Complex64::new(0.0, 0.0))
        .with_marker("+", Complex64::new(params.predicted_alpha(), 0.0))
        .with_marker("N", kick.predicted_alpha);
    let (pr, pi, pq) = q.peak();
    println!(
        "N = {n}: <a> = {:.4}, peak Q = {pq:.4} at ({pr:.3}, {pi:.3}), mass = {:.4}",
        kick.mean_a(),
        q.mass()
    );

    let shades = [' ', '.', ':', '-', '=', 'o', '*', '#', '%', '@'];
    let (dr, di) = q.cell();
    for (r, row) in q.values.iter().enumerate().rev().step_by(2) {
        let line: String = row
            .iter()
            .enumerate()
            .map(|(c, v)| {
                let here = |m: &wvamag::phasespace::Marker| {
                    (m.re - q.re_axis[c]).abs() <= dr / 2.0 && (m.im - q.im_axis[r]).abs() <= di
                };
                match q.markers.iter().rev().find(|m| here(m)) {
                    Some(m) => m.label.chars().next().unwrap_or('?'),
                    None => shades[((v / pq) * 9.0).round().clamp(0.0, 9.0) as usize],
                }
            })
            .collect();
        println!("{:>6.2} |{line}|", q.im_axis[r]);
    }
    Ok(())
}
