//! Experiment dispatch. Every experiment turns a [`RunConfig`] into an
//! in-memory [`Artifacts`] set plus a fixed-width summary row; sweeps run
//! the summary over a parameter grid in parallel and sort by coordinate.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Experiment, RawConfig, RunConfig, Scale};
use super::output::{format_f64, sha256_hex, to_json, Artifacts, Table};
use crate::error::{Error, Result};
use crate::fisher::{fisher_budget, FisherReport};
use crate::hilbert::{DensityOp, PureState};
use crate::model::{omega_to_field, strength_estimates, weak_regime_margin, PhysicalConstants};
use crate::noise::{
    calibrate_damping_with, evolve_sampled, fidelity_at_times, mixed_weak_value, uniform_times,
    NoiseParams, PDDSchedule,
};
use crate::phasespace::{husimi_q_pure, GridSpec};
use crate::protocol::{flywheel_trace, oracle_fidelity_gap, single_kick, KickResult};
use crate::zassenhaus::zassenhaus_check;

pub const TOOL_NAME: &str = "wvamag";

/// Output-schema versions of each module; bumped when a module's emitted
/// fields change.
pub const MODULE_VERSIONS: [(&str, &str); 8] = [
    ("hilbert", "1.0.0"),
    ("model", "1.0.0"),
    ("zassenhaus", "1.0.0"),
    ("protocol", "1.0.0"),
    ("fisher", "1.0.0"),
    ("noise", "1.0.0"),
    ("phasespace", "1.0.0"),
    ("cli", "1.0.0"),
];

/// One experiment's artifacts and its summary row.
pub struct Outcome {
    pub artifacts: Artifacts,
    pub summary: Vec<f64>,
}

/// Columns of each experiment's summary row (used by sweep tables).
pub fn summary_columns(experiment: Experiment) -> &'static [&'static str] {
    match experiment {
        Experiment::Estimate => &[
            "energy_eV",
            "field_tesla",
            "mashhoon_ratio",
            "omega_signal",
            "gamma",
            "weak_value",
            "alpha_1",
            "weak_regime_margin",
        ],
        Experiment::Kick => &[
            "p_f",
            "weak_value",
            "alpha_predicted",
            "mean_a_re",
            "mean_a_im",
            "mean_n",
            "coherent_fidelity",
        ],
        Experiment::Flywheel => &[
            "n_kicks",
            "p_f_last",
            "cumulative_probability",
            "alpha_predicted",
            "mean_a_re",
            "mean_a_im",
            "mean_n",
            "coherent_fidelity",
        ],
        Experiment::Fisher => &[
            "gamma",
            "theta",
            "z",
            "weak_value",
            "amplification",
            "p_f",
            "f_total",
            "f_meter",
            "f_postselect",
            "retention",
            "discard_fraction",
            "retention_approx",
            "f_postselect_approx",
            "f_meter_numeric",
            "f_postselect_numeric",
        ],
        Experiment::Decohere => &[
            "damp_rate",
            "fidelity_t_star",
            "pulse_free_fidelity_t_star",
            "pulses_only_fidelity_t_star",
        ],
        Experiment::Husimi => &[
            "mean_a_re",
            "mean_a_im",
            "mean_n",
            "peak_re",
            "peak_im",
            "peak_q",
            "mass",
        ],
        Experiment::ZassenhausCheck => &[
            "z_sum",
            "operator_z",
            "oracle_z",
            "oracle_ratio_im",
            "plateau_spread",
            "effective_overlap",
            "linearity_ratio",
        ],
    }
}

/// Runs the configured experiment (or sweep) and returns every artifact,
/// manifest included.
pub fn run(cfg: &RunConfig) -> Result<Artifacts> {
    let mut artifacts = match &cfg.sweep {
        None => run_single(cfg)?.artifacts,
        Some(_) => run_sweep(cfg)?,
    };
    let manifest = manifest(cfg, &artifacts)?;
    artifacts.add("manifest.json", manifest);
    Ok(artifacts)
}

pub fn run_single(cfg: &RunConfig) -> Result<Outcome> {
    let outcome = match cfg.experiment {
        Experiment::Estimate => estimate(cfg),
        Experiment::Kick => kick(cfg),
        Experiment::Flywheel => flywheel(cfg),
        Experiment::Fisher => fisher(cfg),
        Experiment::Decohere => decohere(cfg),
        Experiment::Husimi => husimi(cfg),
        Experiment::ZassenhausCheck => zassenhaus(cfg),
    }?;
    debug_assert_eq!(outcome.summary.len(), summary_columns(cfg.experiment).len());
    Ok(outcome)
}

/// SHA-256 of the canonical configuration JSON.
pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    Ok(sha256_hex(to_json(&cfg.to_entries())?.as_bytes()))
}

fn manifest(cfg: &RunConfig, artifacts: &Artifacts) -> Result<String> {
    let modules: serde_json::Map<String, Value> = MODULE_VERSIONS
        .iter()
        .map(|(m, v)| (m.to_string(), Value::from(*v)))
        .collect();
    to_json(&json!({
        "tool": TOOL_NAME,
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment.name(),
        "config_hash": config_hash(cfg)?,
        "config": cfg.to_entries(),
        "modules": modules,
        "files": artifacts.describe(),
    }))
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn estimate(cfg: &RunConfig) -> Result<Outcome> {
    let p = &cfg.params;
    p.validate()?;
    let constants = PhysicalConstants::CODATA;
    let report = strength_estimates(&constants);
    let margin = weak_regime_margin(p, 1.0);
    let omega = p.signal_frequency();
    let doc = json!({
        "strength": report,
        "constants": {
            "hbar_eV_s": constants.hbar,
            "c_m_per_s": constants.c,
            "g_m_per_s2": constants.g_earth,
            "mu_bohr_eV_per_T": constants.mu_bohr,
            "sidereal_day_s": constants.sidereal_day,
            "earth_rotation_rad_per_s": constants.earth_rotation(),
        },
        "params": p,
        "derived": {
            "omega_signal": omega,
            "signal_field_tesla": omega_to_field(omega.abs(), &constants)?,
            "lambda_t_star": p.lambda_t_star(),
            "signal_phase": p.signal_phase(),
            "gamma": p.gamma(),
            "weak_value": p.weak_value(),
            "alpha_1": p.predicted_alpha(),
            "weak_regime_margin": margin,
            "weak_regime": margin < crate::protocol::WEAK_REGIME_LIMIT,
        },
    });
    let mut artifacts = Artifacts::default();
    artifacts.add_json("estimate.json", &doc)?;
    Ok(Outcome {
        artifacts,
        summary: vec![
            report.energy_ev,
            report.field_tesla,
            report.mashhoon_ratio,
            omega,
            p.gamma(),
            p.weak_value(),
            p.predicted_alpha(),
            margin,
        ],
    })
}

fn meter_table(r: &KickResult) -> Table {
    let mut t = Table::new(&["n", "amplitude_re", "amplitude_im", "probability"]);
    for (n, a) in r.meter_state.amplitudes().iter().enumerate() {
        t.push(vec![
            n.to_string(),
            format_f64(a.re),
            format_f64(a.im),
            format_f64(a.norm_sqr()),
        ]);
    }
    t
}

fn kick(cfg: &RunConfig) -> Result<Outcome> {
    let r = single_kick(&cfg.params)?;
    let fidelity = r.coherent_fidelity()?;
    let gap = if cfg.options.oracle_gap {
        Some(oracle_fidelity_gap(&cfg.params, 1, cfg.options.oracle_steps)?[0])
    } else {
        None
    };
    let mut artifacts = Artifacts::default();
    artifacts.add_json(
        "kick.json",
        &json!({
            "params": cfg.params,
            "kick": r,
            "coherent_fidelity": fidelity,
            "oracle_fidelity_gap": gap,
        }),
    )?;
    artifacts.add("kick_meter.csv", meter_table(&r).render());
    let a = r.mean_a();
    Ok(Outcome {
        artifacts,
        summary: vec![
            r.p_f,
            r.weak_value,
            r.predicted_alpha.re,
            a.re,
            a.im,
            r.meter_state.mean_n(),
            fidelity,
        ],
    })
}

fn flywheel(cfg: &RunConfig) -> Result<Outcome> {
    let n = cfg.options.n_kicks;
    let trace = flywheel_trace(&cfg.params, n)?;
    let gaps = if cfg.options.oracle_gap {
        Some(oracle_fidelity_gap(
            &cfg.params,
            n,
            cfg.options.oracle_steps,
        )?)
    } else {
        None
    };
    let mut table = Table::new(&[
        "kick",
        "p_f",
        "cumulative_probability",
        "alpha_predicted",
        "mean_a_re",
        "mean_a_im",
        "mean_n",
        "coherent_fidelity",
    ]);
    let mut fidelities = Vec::with_capacity(trace.len());
    for r in &trace {
        let f = r.coherent_fidelity()?;
        fidelities.push(f);
        let a = r.mean_a();
        let mut row = vec![r.kick_index.to_string()];
        row.extend(
            [
                r.p_f,
                r.cumulative_probability,
                r.predicted_alpha.re,
                a.re,
                a.im,
                r.meter_state.mean_n(),
                f,
            ]
            .iter()
            .map(|v| format_f64(*v)),
        );
        table.push(row);
    }
    let last = trace.last().expect("n_kicks >= 1");
    let mut artifacts = Artifacts::default();
    artifacts.add_json(
        "flywheel.json",
        &json!({
            "params": cfg.params,
            "n_kicks": n,
            "alpha_1": cfg.params.predicted_alpha(),
            "final": last,
            "coherent_fidelities": fidelities,
            "oracle_fidelity_gaps": gaps,
        }),
    )?;
    artifacts.add("flywheel.csv", table.render());
    let a = last.mean_a();
    Ok(Outcome {
        artifacts,
        summary: vec![
            n as f64,
            last.p_f,
            last.cumulative_probability,
            last.predicted_alpha.re,
            a.re,
            a.im,
            last.meter_state.mean_n(),
            *fidelities.last().expect("n_kicks >= 1"),
        ],
    })
}

fn fisher(cfg: &RunConfig) -> Result<Outcome> {
    let report = fisher_budget(&cfg.params)?;
    let mut artifacts = Artifacts::default();
    artifacts.add_json(
        "fisher.json",
        &json!({ "params": cfg.params, "budget": report }),
    )?;
    let mut table = Table::new(&FisherReport::CSV_HEADER.split(',').collect::<Vec<_>>());
    table.push_floats(&report.csv_fields());
    artifacts.add("fisher.csv", table.render());
    Ok(Outcome {
        artifacts,
        summary: report.csv_fields().to_vec(),
    })
}

#[derive(Serialize)]
struct PulseScanRow {
    pulse_count: usize,
    fidelity_t_star: f64,
    pulses_only_fidelity_t_star: f64,
}

fn decohere(cfg: &RunConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let t_star = p.t_star;
    let base = NoiseParams {
        damp_rate: cfg.noise.damp_rate.unwrap_or(0.0),
        nbar: cfg.noise.nbar,
        integrator_step: cfg.noise.integrator_step,
    };
    let (noise, calibrated) = match cfg.noise.damp_rate {
        Some(_) => (base, false),
        None => (
            calibrate_damping_with(cfg.noise.target_fidelity, p, &base, t_star)?,
            true,
        ),
    };
    let noiseless = base.with_damping(0.0);
    let schedule = PDDSchedule::pi_z(p.layout, cfg.schedule.pulse_count, cfg.schedule.window)?;
    let free = PDDSchedule::pi_z(p.layout, 0, cfg.schedule.window)?;

    // Fidelity curve over the window, with and without pulses, plus t*.
    let mut times = uniform_times(cfg.schedule.window, cfg.options.samples)?;
    let curve_len = times.len();
    times.push(t_star);
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    let ((with_pulses, pulse_free), pulses_only) = rayon::join(
        || {
            rayon::join(
                || fidelity_at_times(p, &noise, &schedule, &sorted),
                || fidelity_at_times(p, &noise, &free, &sorted),
            )
        },
        || fidelity_at_times(p, &noiseless, &schedule, &[t_star]),
    );
    let (with_pulses, pulse_free, pulses_only) = (with_pulses?, pulse_free?, pulses_only?[0].1);
    let lookup = |curve: &[(f64, f64)], t: f64| {
        curve
            .iter()
            .find(|(s, _)| *s == t)
            .map(|(_, f)| *f)
            .expect("time was sampled")
    };
    let f_t_star = lookup(&with_pulses, t_star);
    let f_free_t_star = lookup(&pulse_free, t_star);

    let mut curve = Table::new(&["time", "fidelity", "fidelity_pulse_free"]);
    for &t in &times[..curve_len] {
        curve.push_floats(&[t, lookup(&with_pulses, t), lookup(&pulse_free, t)]);
    }

    // Pulse-count scan at t*: damped and damping-free.
    let scan: Vec<PulseScanRow> = cfg
        .schedule
        .compare_counts
        .par_iter()
        .map(|&count| {
            let s = PDDSchedule::pi_z(p.layout, count, cfg.schedule.window)?;
            let damped = fidelity_at_times(p, &noise, &s, &[t_star])?[0].1;
            let clean = fidelity_at_times(p, &noiseless, &s, &[t_star])?[0].1;
            Ok(PulseScanRow {
                pulse_count: count,
                fidelity_t_star: damped,
                pulses_only_fidelity_t_star: clean,
            })
        })
        .collect::<Result<_>>()?;
    let mut scan_table = Table::new(&[
        "pulse_count",
        "fidelity_t_star",
        "pulses_only_fidelity_t_star",
    ]);
    for r in &scan {
        scan_table.push(vec![
            r.pulse_count.to_string(),
            format_f64(r.fidelity_t_star),
            format_f64(r.pulses_only_fidelity_t_star),
        ]);
    }

    // Weak value carried by the decohered state at t*.
    let psi0 = PureState::initial(p.layout);
    let final_state = evolve_sampled(
        &DensityOp::from_pure(&psi0),
        &psi0,
        p,
        &noise,
        &schedule,
        &[t_star],
    )?
    .pop()
    .expect("one sample");
    let mixed = mixed_weak_value(&final_state.state, p.theta_postselect)?;
    let ideal = mixed_weak_value(
        &DensityOp::from_pure(&final_state.target),
        p.theta_postselect,
    )?;

    let mut artifacts = Artifacts::default();
    artifacts.add_json(
        "decohere.json",
        &json!({
            "params": p,
            "noise": noise,
            "calibrated": calibrated,
            "target_fidelity": cfg.noise.target_fidelity,
            "t_star": t_star,
            "window": cfg.schedule.window,
            "pulse_count": cfg.schedule.pulse_count,
            "fidelity_t_star": f_t_star,
            "pulse_free_fidelity_t_star": f_free_t_star,
            "pulses_only_fidelity_t_star": pulses_only,
            "pulse_scan": scan,
            "weak_value_decohered": pair(mixed),
            "weak_value_noiseless": pair(ideal),
            "purity_t_star": final_state.state.purity(),
        }),
    )?;
    artifacts.add("fidelity_curve.csv", curve.render());
    artifacts.add("pulse_scan.csv", scan_table.render());
    Ok(Outcome {
        artifacts,
        summary: vec![noise.damp_rate, f_t_star, f_free_t_star, pulses_only],
    })
}

fn husimi(cfg: &RunConfig) -> Result<Outcome> {
    let n = cfg.options.n_kicks;
    let trace = flywheel_trace(&cfg.params, n)?;
    let last = trace.last().expect("n_kicks >= 1");
    let alpha_1 = cfg.params.predicted_alpha();
    let spec = GridSpec {
        center: None,
        half_width: cfg.options.husimi_half_width,
        resolution: cfg.options.husimi_resolution,
        auto_extend: true,
    };
    let q = husimi_q_pure(&last.meter_state, &spec)?
        .with_marker("x", Complex64::new(0.0, 0.0))
        .with_marker("+", Complex64::new(alpha_1, 0.0))
        .with_marker("N", last.predicted_alpha);

    let mut table = Table::new(&["re", "im", "q"]);
    for (r, row) in q.values.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            table.push_floats(&[q.re_axis[c], q.im_axis[r], *v]);
        }
    }
    let (peak_re, peak_im, peak_q) = q.peak();
    let mass = q.mass();
    let mut artifacts = Artifacts::default();
    artifacts.add_json(
        "husimi.json",
        &json!({
            "params": cfg.params,
            "n_kicks": n,
            "resolution": q.resolution(),
            "re_range": [q.re_axis[0], q.re_axis[q.resolution() - 1]],
            "im_range": [q.im_axis[0], q.im_axis[q.resolution() - 1]],
            "extended": q.extended,
            "mean_a": q.mean_a,
            "mean_n": q.mean_n,
            "peak": [peak_re, peak_im, peak_q],
            "mass": mass,
            "markers": q.markers,
        }),
    )?;
    artifacts.add("husimi.csv", table.render());
    Ok(Outcome {
        artifacts,
        summary: vec![
            q.mean_a[0],
            q.mean_a[1],
            q.mean_n,
            peak_re,
            peak_im,
            peak_q,
            mass,
        ],
    })
}

fn zassenhaus(cfg: &RunConfig) -> Result<Outcome> {
    let report = zassenhaus_check(&cfg.params, cfg.options.oracle_steps)?;
    let mut series = Table::new(&[
        "order",
        "coefficient",
        "reduced_weight",
        "contribution",
        "operator_element",
    ]);
    for r in &report.series {
        let mut row = vec![r.order.to_string()];
        row.extend(
            [
                r.coefficient,
                r.reduced_weight,
                r.contribution,
                r.operator_element,
            ]
            .map(format_f64),
        );
        series.push(row);
    }
    series.push(vec![
        "sum".into(),
        String::new(),
        String::new(),
        format_f64(report.z_sum),
        format_f64(report.operator_z),
    ]);
    series.push(vec![
        "quoted".into(),
        String::new(),
        String::new(),
        format_f64(report.quoted_z),
        String::new(),
    ]);
    let mut plateau = Table::new(&[
        "phase",
        "gamma",
        "amplitude_re",
        "amplitude_im",
        "reference_re",
        "reference_im",
        "ratio_re",
        "ratio_im",
    ]);
    for s in &report.plateau {
        plateau.push_floats(&[
            s.phase,
            s.gamma,
            s.amplitude_re,
            s.amplitude_im,
            s.reference_re,
            s.reference_im,
            s.ratio_re,
            s.ratio_im,
        ]);
    }
    let mut artifacts = Artifacts::default();
    artifacts.add_json("zassenhaus.json", &report)?;
    artifacts.add("zassenhaus_series.csv", series.render());
    artifacts.add("plateau.csv", plateau.render());
    Ok(Outcome {
        artifacts,
        summary: vec![
            report.z_sum,
            report.operator_z,
            report.oracle_z,
            report.oracle_ratio_im,
            report.plateau_spread,
            report.effective_overlap,
            report.linearity_ratio,
        ],
    })
}

#[derive(Serialize)]
struct SweepPoint {
    value: f64,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
    summary: serde_json::Map<String, Value>,
}

/// Runs every grid point concurrently. Points that leave the physical
/// regime (exit-code-2 errors) are recorded with status `regime` and NaN
/// summaries; configuration or numerical failures abort the sweep.
fn run_sweep(cfg: &RunConfig) -> Result<Artifacts> {
    let spec = cfg.sweep.as_ref().expect("sweep configured");
    let base = RawConfig {
        entries: cfg.to_entries(),
    };
    let grid = spec.grid();
    let columns = summary_columns(cfg.experiment);

    let mut results: Vec<(f64, Result<Vec<f64>>)> = grid
        .par_iter()
        .map(|&value| {
            let outcome = base
                .sweep_point(spec, value)
                .and_then(|raw| raw.resolve(Some(cfg.experiment), true))
                .and_then(|point| run_single(&point))
                .map(|o| o.summary);
            (value, outcome)
        })
        .collect();
    results.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut header = vec![spec.parameter.as_str(), "status"];
    header.extend_from_slice(columns);
    let mut table = Table::new(&header);
    let mut points = Vec::with_capacity(results.len());
    for (value, result) in results {
        let (status, message, summary) = match result {
            Ok(summary) => ("ok", None, summary),
            Err(e) if e.exit_code() == 2 => {
                ("regime", Some(e.to_string()), vec![f64::NAN; columns.len()])
            }
            Err(e) => return Err(e),
        };
        let mut row = vec![format_f64(value), status.to_string()];
        row.extend(summary.iter().map(|v| format_f64(*v)));
        table.push(row);
        points.push(SweepPoint {
            value,
            status,
            message,
            summary: columns
                .iter()
                .zip(&summary)
                .map(|(c, v)| (c.to_string(), Value::from(*v)))
                .collect(),
        });
    }
    let mut artifacts = Artifacts::default();
    artifacts.add_json(
        "sweep.json",
        &json!({
            "experiment": cfg.experiment.name(),
            "parameter": spec.parameter,
            "scale": match spec.scale { Scale::Linear => "linear", Scale::Log => "log" },
            "columns": columns,
            "points": points,
        }),
    )?;
    artifacts.add("sweep.csv", table.render());
    Ok(artifacts)
}

/// Writes a run's artifacts; surfaces I/O failures as config errors on
/// `output_dir`.
pub fn write(artifacts: &Artifacts, dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
    artifacts.flush(dir).map_err(|e| match e {
        Error::Io { path, message } => Error::config("output_dir", format!("{path}: {message}")),
        other => other,
    })
}
