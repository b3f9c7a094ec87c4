//! Acceptance criteria 1-9. Each test prints one PASS/FAIL line per
//! sub-check and fails if any sub-check fails. Run with `--nocapture` to
//! see the measured values.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use wvamag::cli::config::{Experiment, RawConfig};
use wvamag::cli::run::run;
use wvamag::fisher::{
    budget_step, classical_fisher, fisher_budget, meter_fisher_numeric, postselect_step,
    simulated_meter,
};
use wvamag::hilbert::{expm, CMatrix, DensityOp, HilbertLayout, Operator, PureState};
use wvamag::model::ExperimentParams;
use wvamag::noise::{
    calibrate_damping, evolve_sampled, fidelity_at, NoiseParams, PDDSchedule, DEFAULT_WINDOW_FACTOR,
};
use wvamag::phasespace::{husimi_q_pure, GridSpec};
use wvamag::protocol::{flywheel, flywheel_trace, single_kick};
use wvamag::zassenhaus::{zassenhaus_check, QUOTED_Z};

/// Collects sub-check outcomes for one criterion.
struct Checks {
    criterion: &'static str,
    failed: Vec<String>,
}

impl Checks {
    fn new(criterion: &'static str) -> Self {
        Self {
            criterion,
            failed: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!(
            "[{}] {} {name}: {detail}",
            self.criterion,
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            self.failed.push(format!("{name}: {detail}"));
        }
    }

    fn runtime(&mut self, start: Instant, budget: Duration) {
        let elapsed = start.elapsed();
        self.check(
            "runtime",
            elapsed < budget,
            format!("{elapsed:.2?} (budget {budget:?})"),
        );
    }

    fn finish(self) {
        assert!(
            self.failed.is_empty(),
            "criterion {} failed:\n  {}",
            self.criterion,
            self.failed.join("\n  ")
        );
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn criterion_1_strength_estimates() {
    let mut c = Checks::new("1");
    let start = Instant::now();
    let raw = RawConfig::parse(
        "params.lambda_coupling = 500.0\nparams.theta_postselect = 1e-8\n",
        false,
    )
    .unwrap();
    let cfg = raw.resolve(Some(Experiment::Estimate), true).unwrap();
    let artifacts = run(&cfg).unwrap();
    let doc: serde_json::Value =
        serde_json::from_str(artifacts.get("estimate.json").unwrap()).unwrap();
    let energy = doc["strength"]["energy_eV"].as_f64().unwrap();
    let field = doc["strength"]["field_tesla"].as_f64().unwrap();
    let ratio = doc["strength"]["mashhoon_ratio"].as_f64().unwrap();
    c.runtime(start, Duration::from_secs(1));
    c.check(
        "energy_eV",
        rel(energy, 2.15e-23) <= 0.01,
        format!("{energy:.6e} vs 2.15e-23"),
    );
    c.check(
        "field_tesla",
        rel(field, 3.7e-19) <= 0.02,
        format!("{field:.6e} vs 3.7e-19"),
    );
    c.check(
        "mashhoon_ratio",
        rel(ratio, 2.22e3) <= 0.01,
        format!("{ratio:.6e} vs 2.22e3"),
    );
    c.finish();
}

#[test]
fn criterion_2_zassenhaus_constant() {
    let mut c = Checks::new("2");
    let start = Instant::now();
    let params = ExperimentParams::reference_defaults();
    let report = zassenhaus_check(&params, 10_000).unwrap();
    c.runtime(start, Duration::from_secs(30));
    for s in &report.plateau {
        println!(
            "[2]   phase {:.4e}: ratio = {:+.6e} {:+.6e}i",
            s.phase, s.ratio_re, s.ratio_im
        );
    }
    c.check(
        "plateau flat within 1%",
        report.plateau_flat,
        format!("spread {:.4e}", report.plateau_spread),
    );
    let reported = report.agrees_with_quoted || report.discrepancy.is_some();
    c.check(
        "agreement or structured discrepancy record",
        reported,
        format!(
            "oracle z {:+.6e} vs quoted {QUOTED_Z}; series sum {:+.6}; discrepancy record present: {}",
            report.oracle_z,
            report.z_sum,
            report.discrepancy.is_some()
        ),
    );
    c.finish();
}

#[test]
fn criterion_3_effective_unitary_validity() {
    let mut c = Checks::new("3");
    let params = ExperimentParams::reference_defaults();
    let report = zassenhaus_check(&params, 10_000).unwrap();
    c.check(
        "overlap >= 1 - 1e-5 at omega_g t* = 1e-3",
        report.effective_overlap >= 1.0 - 1e-5,
        format!("|<psi_oracle|psi_eff>| = {:.12}", report.effective_overlap),
    );
    let amp = |phase: f64| {
        report
            .plateau
            .iter()
            .find(|s| s.phase == phase)
            .map(|s| s.amplitude().norm())
            .expect("phase sampled")
    };
    let decade = amp(1e-3) / amp(1e-4);
    c.check(
        "kick amplitude linear over one decade (1e-3 relative)",
        rel(decade, 10.0) <= 1e-3,
        format!("|amp(1e-3)|/|amp(1e-4)| = {decade:.6} (first order: 10)"),
    );
    c.check(
        "kick amplitude linear under doubling",
        rel(report.linearity_ratio, 2.0) <= 1e-3,
        format!("ratio {:.6} (first order: 2)", report.linearity_ratio),
    );
    c.finish();
}

#[test]
fn criterion_4_kick_is_displacement() {
    let mut c = Checks::new("4");
    let base = ExperimentParams::reference_defaults();
    let scale = base.z_constant * base.weak_value();
    for k in 0..=8 {
        let x = 10f64.powf(-3.0 + 2.0 * k as f64 / 8.0);
        let p = base.with_gamma(x / scale);
        let kick = single_kick(&p).unwrap();
        let analytic =
            0.5 * p.z_constant * p.lambda_t_star() * p.signal_phase() / p.theta_postselect.tan();
        let f = kick.coherent_fidelity().unwrap();
        c.check(
            &format!("zγA_w = {x:.3e}"),
            f >= 0.999 && rel(kick.predicted_alpha.re, analytic) <= 1e-12,
            format!("fidelity {f:.10}, alpha {:.6e}", kick.predicted_alpha.re),
        );
    }
    c.finish();
}

#[test]
fn criterion_5_fisher_budget() {
    let mut c = Checks::new("5");
    let start = Instant::now();
    let params = ExperimentParams::quoted_fisher_defaults();
    let r = fisher_budget(&params).unwrap();
    let z = params.z_constant;
    c.check(
        "F_T = 4z²",
        r.f_total == 4.0 * z * z,
        format!("{} vs {}", r.f_total, 4.0 * z * z),
    );
    let x2 = (z * r.gamma * r.weak_value).powi(2);
    c.check(
        "retention = 1 - z²γ²A_w² within 1e-6 (gamma = 1e-11)",
        (r.retention - (1.0 - x2)).abs() <= 1e-6,
        format!("{:.12} vs {:.12}", r.retention, 1.0 - x2),
    );
    let computed = fisher_budget(&ExperimentParams::reference_defaults()).unwrap();
    println!(
        "[5]   diagnostic: at gamma = g/c-derived {:.4e} (x = {:.4}) retention {:.8} vs 1 - x² {:.8}",
        computed.gamma, computed.amplification, computed.retention, computed.retention_approx
    );

    let doubled = fisher_budget(&params.with_gamma(2.0 * r.gamma)).unwrap();
    let order = (doubled.f_postselect / r.f_postselect).log2();
    c.check(
        "F_pf = O(γ²)",
        (order - 2.0).abs() <= 1e-3,
        format!("log2(F_pf(2γ)/F_pf(γ)) = {order:.6}"),
    );

    // Closed form vs finite differences on a γA_w log-grid.
    let a_w = params.weak_value();
    let grid: Vec<f64> = (0..=6).map(|k| 10f64.powf(-4.0 + 0.5 * k as f64)).collect();
    let rows: Vec<_> = grid
        .par_iter()
        .map(|&ga| {
            let p = params.with_gamma(ga / a_w);
            let r = fisher_budget(&p).unwrap();
            // Finite differences on the simulated post-selected state: the
            // geometric meter formula and the generic classical_fisher on
            // the pass/fail record.
            let g = p.gamma();
            let fm = meter_fisher_numeric(&p, g, budget_step(&p)).unwrap();
            let fpf = classical_fisher(
                |gg| {
                    let (_, pf) = simulated_meter(&p, gg)?;
                    Ok(vec![pf, 1.0 - pf])
                },
                g,
                postselect_step(&p),
            )
            .unwrap();
            (ga, r, fm, fpf)
        })
        .collect();
    for (ga, r, fm, fpf) in rows {
        let (em, epf) = (rel(fm, r.f_meter), rel(fpf, r.f_postselect));
        c.check(
            &format!("γA_w = {ga:.2e}"),
            em <= 1e-3 && epf <= 1e-3,
            format!("F_m rel err {em:.2e}, F_pf rel err {epf:.2e}"),
        );
    }
    c.runtime(start, Duration::from_secs(10));
    c.finish();
}

fn flywheel_residual(params: &ExperimentParams) -> (f64, f64, Vec<(u32, f64)>) {
    let alpha_1 = params.predicted_alpha();
    let means: Vec<(u32, f64)> = [1u32, 2, 4, 8]
        .iter()
        .map(|&n| {
            let m = flywheel(params, n).unwrap().mean_a();
            assert!(m.im.abs() < 1e-15);
            (n, m.re)
        })
        .collect();
    // Least-squares slope through the origin.
    let slope = means.iter().map(|&(n, a)| n as f64 * a).sum::<f64>()
        / means.iter().map(|&(n, _)| (n as f64).powi(2)).sum::<f64>();
    let residual = means
        .iter()
        .map(|&(n, a)| (a - n as f64 * alpha_1).abs())
        .fold(0.0, f64::max);
    (slope, residual / alpha_1.abs(), means)
}

#[test]
fn criterion_6_flywheel_linearity() {
    let mut c = Checks::new("6");
    let params = ExperimentParams::quoted_fisher_defaults();
    let alpha_1 = params.predicted_alpha();
    let (slope, residual, means) = flywheel_residual(&params);
    println!("[6]   alpha_1 = {alpha_1:.6e}, <a>_N = {means:?}");
    c.check(
        "slope = alpha_1 (gamma = 1e-11)",
        rel(slope, alpha_1) <= 1e-2,
        format!("fitted {slope:.6e} vs {alpha_1:.6e}"),
    );
    c.check(
        "max residual <= 1% |alpha_1| (gamma = 1e-11)",
        residual <= 1e-2,
        format!("{:.4e} |alpha_1|", residual),
    );
    let strong = ExperimentParams::reference_defaults();
    let (s2, r2, _) = flywheel_residual(&strong);
    println!(
        "[6]   diagnostic: at gamma from g/c (alpha_1 = {:.4}) slope {s2:.4} and max residual {r2:.4} |alpha_1|",
        strong.predicted_alpha()
    );
    c.finish();
}

#[test]
fn criterion_7_decoherence_and_pdd() {
    let mut c = Checks::new("7");
    let start = Instant::now();
    let params = ExperimentParams::reference_defaults()
        .with_cutoff(16)
        .unwrap();
    let noise = calibrate_damping(0.599, &params, params.t_star).unwrap();
    let free = PDDSchedule::default_for(&params, 0).unwrap();
    let f_free = fidelity_at(&params, &noise, &free, params.t_star).unwrap();
    c.check(
        "calibrated pulse-free fidelity = 0.599 ± 1e-4",
        (f_free - 0.599).abs() <= 1e-4,
        format!("Γ = {:.6} rad/s, F(t*) = {f_free:.8}", noise.damp_rate),
    );
    let counts = [0usize, 10, 100, 1000];
    let fid: Vec<f64> = counts
        .par_iter()
        .map(|&n| {
            let s =
                PDDSchedule::pi_z(params.layout, n, DEFAULT_WINDOW_FACTOR * params.t_star).unwrap();
            fidelity_at(&params, &noise, &s, params.t_star).unwrap()
        })
        .collect();
    for (n, f) in counts.iter().zip(&fid) {
        println!("[7]   {n:>4} pulses: F(t*) = {f:.8}");
    }
    c.check(
        "1000 pulses restore F >= 0.999",
        fid[3] >= 0.999,
        format!("F = {:.8}", fid[3]),
    );
    let monotone = fid.windows(2).all(|w| w[1] >= w[0]);
    c.check(
        "F non-decreasing in pulse count",
        monotone,
        format!("{fid:?}"),
    );
    c.runtime(start, Duration::from_secs(300));
    c.finish();
}

#[test]
fn criterion_8_husimi() {
    let mut c = Checks::new("8");
    let params = ExperimentParams::reference_defaults();
    let vacuum = wvamag::hilbert::MeterState::vacuum(params.layout);
    let q0 = husimi_q_pure(&vacuum, &GridSpec::default()).unwrap();
    let mid = q0.resolution() / 2;
    let at_origin = q0.values[mid][mid];
    c.check(
        "vacuum Q(0) = 1/π within 1e-6",
        q0.re_axis[mid] == 0.0 && (at_origin - 1.0 / std::f64::consts::PI).abs() <= 1e-6,
        format!("{at_origin:.12}"),
    );
    c.check(
        "vacuum grid mass within 2%",
        (q0.mass() - 1.0).abs() <= 0.02,
        format!("{:.6}", q0.mass()),
    );

    let alpha_1 = params.predicted_alpha();
    let two = flywheel(&params, 2).unwrap();
    let spec = GridSpec {
        center: Some([0.0, 0.0]),
        ..GridSpec::default()
    };
    let q2 = husimi_q_pure(&two.meter_state, &spec).unwrap();
    let (re, im, _) = q2.peak();
    let (dr, di) = q2.cell();
    c.check(
        "two-kick grid mass within 2%",
        (q2.mass() - 1.0).abs() <= 0.02,
        format!("{:.6}", q2.mass()),
    );
    c.check(
        "two-kick peak at 2α₁ within one cell",
        (re - 2.0 * alpha_1).abs() <= dr && im.abs() <= di,
        format!(
            "peak ({re:.5}, {im:.5}), 2α₁ = {:.5}, cell {dr:.5}",
            2.0 * alpha_1
        ),
    );

    // The CLI writes the same figure as CSV.
    let raw = RawConfig::parse(
        "params.lambda_coupling = 500.0\nparams.theta_postselect = 1e-8\n",
        false,
    )
    .unwrap();
    let cfg = raw.resolve(Some(Experiment::Husimi), true).unwrap();
    let artifacts = run(&cfg).unwrap();
    let csv = artifacts.get("husimi.csv").unwrap();
    let rows = csv.lines().count() - 1;
    c.check(
        "husimi.csv emitted",
        rows == 101 * 101,
        format!("{rows} rows"),
    );
    c.finish();
}

fn random_matrix(rng: &mut StdRng, n: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
    })
}

fn random_density(rng: &mut StdRng, layout: HilbertLayout) -> DensityOp {
    let d = layout.total_dim();
    let b = random_matrix(rng, d, 1.0);
    let mut rho = &b * b.adjoint();
    let tr = rho.trace();
    rho /= tr;
    DensityOp::from_matrix(layout, rho).unwrap()
}

#[test]
fn criterion_9_property_suites() {
    let mut c = Checks::new("9");
    let instances = 1000;
    let mut rng = StdRng::seed_from_u64(0x5eed);

    // hilbert: exp(−iH) of random Hermitian H is unitary; ρ stays a state
    // under unitary conjugation.
    let mut worst_unitarity: f64 = 0.0;
    let mut worst_state: f64 = 0.0;
    for _ in 0..instances {
        let layout = HilbertLayout::new(rng.gen_range(2..=5)).unwrap();
        let d = layout.total_dim();
        let scale = rng.gen_range(0.01..2.0);
        let a = random_matrix(&mut rng, d, scale);
        let h = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
        let u =
            expm(&Operator::from_matrix(layout, h * Complex64::new(0.0, -1.0)).unwrap()).unwrap();
        worst_unitarity = worst_unitarity.max(u.unitarity_deviation());
        let rho = random_density(&mut rng, layout).conjugate(&u).unwrap();
        let trace_err = (rho.trace() - 1.0).norm();
        worst_state = worst_state
            .max(trace_err)
            .max(rho.hermiticity_deviation())
            .max((-rho.min_eigenvalue()).max(0.0));
    }
    c.check(
        "hilbert: unitarity of expm(-iH)",
        worst_unitarity <= 1e-12,
        format!("{instances} instances, worst max|U†U - 1| = {worst_unitarity:.2e}"),
    );
    c.check(
        "hilbert: trace/hermiticity/positivity under conjugation",
        worst_state <= 1e-12,
        format!("{instances} instances, worst deviation {worst_state:.2e}"),
    );

    // noise: Lindblad evolution of random states keeps them physical.
    let base = ExperimentParams::reference_defaults();
    let seeds: Vec<u64> = (0..instances as u64).collect();
    let worst_noise = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = StdRng::seed_from_u64(seed);
            let params = base.with_cutoff(rng.gen_range(2..=4)).unwrap();
            let noise = NoiseParams {
                damp_rate: rng.gen_range(0.0..2000.0),
                nbar: rng.gen_range(0.0..2.0),
                integrator_step: params.t_star / 1e3,
            };
            let schedule = PDDSchedule::default_for(&params, rng.gen_range(0..4)).unwrap();
            let rho = random_density(&mut rng, params.layout);
            let target = PureState::initial(params.layout);
            let t = rng.gen_range(0.005..0.05) * params.t_star;
            let out = evolve_sampled(&rho, &target, &params, &noise, &schedule, &[t]).unwrap();
            let s = &out[0].state;
            (s.trace() - 1.0)
                .norm()
                .max(s.hermiticity_deviation())
                .max((-s.min_eigenvalue()).max(0.0))
        })
        .reduce(|| 0.0, f64::max);
    c.check(
        "noise: trace/hermiticity/positivity under Lindblad + pulses",
        worst_noise <= 1e-6,
        format!("{instances} instances, worst deviation {worst_noise:.2e}"),
    );

    // Truncation doubling on the default protocol observables.
    let observables = |cutoff: usize| -> Vec<f64> {
        let p = ExperimentParams::reference_defaults()
            .with_cutoff(cutoff)
            .unwrap();
        let kick = single_kick(&p).unwrap();
        let trace = flywheel_trace(&p, 4).unwrap();
        let last = trace.last().unwrap();
        let fisher = fisher_budget(
            &ExperimentParams::quoted_fisher_defaults()
                .with_cutoff(cutoff)
                .unwrap(),
        )
        .unwrap();
        let q = husimi_q_pure(
            &last.meter_state,
            &GridSpec {
                center: Some([0.0, 0.0]),
                resolution: 21,
                ..GridSpec::default()
            },
        )
        .unwrap();
        vec![
            kick.p_f,
            kick.mean_a().re,
            kick.meter_state.mean_n(),
            kick.coherent_fidelity().unwrap(),
            last.mean_a().re,
            last.meter_state.mean_n(),
            last.coherent_fidelity().unwrap(),
            fisher.f_meter,
            fisher.f_postselect,
            q.peak().2,
            q.mass(),
        ]
    };
    let (o16, o32, o64) = (observables(16), observables(32), observables(64));
    let drift = o16
        .iter()
        .zip(&o32)
        .zip(&o64)
        .map(|((a, b), c)| rel(*a, *b).max(rel(*c, *b)))
        .fold(0.0, f64::max);
    c.check(
        "truncation doubling 16/32/64: protocol observables",
        drift < 1e-8,
        format!(
            "worst relative drift {drift:.2e} over {} observables",
            o32.len()
        ),
    );

    let decohere = |cutoff: usize| {
        let p = ExperimentParams::reference_defaults()
            .with_cutoff(cutoff)
            .unwrap();
        let noise = NoiseParams::noiseless(&p).with_damping(163.645977);
        let s = PDDSchedule::default_for(&p, 10).unwrap();
        fidelity_at(&p, &noise, &s, p.t_star).unwrap()
    };
    let (d8, d16) = rayon::join(|| decohere(8), || decohere(16));
    c.check(
        "truncation doubling 8/16: damped fidelity at t*",
        rel(d8, d16) < 1e-8,
        format!("{d8:.12} vs {d16:.12}"),
    );
    c.finish();
}
