//! Open-system dynamics: thermal damping on the qubit under the exact-phase
//! Jaynes-Cummings interaction, with instantaneous periodic dynamical
//! decoupling pulses.
//!
//! dρ/dt = −i[V_I(t), ρ] + Γ(n̄+1)D[σ₋]ρ + Γn̄·D[σ₊]ρ, D[L]ρ = LρL† − ½{L†L, ρ}
//!
//! integrated with fixed-step RK4. V_I has at most one nonzero per row and
//! the dissipators act block-wise on the spin factor, so one right-hand side
//! costs O(d²) instead of a dense product. Integration steps are split
//! exactly at pulse and sample times.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::linalg::{gemm, is_finite};
use crate::hilbert::{
    fidelity, CMatrix, CVector, DensityOp, ElementaryOps, HilbertLayout, Operator, PureState,
};
use crate::model::ExperimentParams;

/// PDD window as a multiple of t*.
pub const DEFAULT_WINDOW_FACTOR: f64 = 1.1125;
/// Default RK4 step as a fraction of t*.
pub const DEFAULT_STEPS_PER_TSTAR: f64 = 1e4;
/// Tolerances on the integrated density matrix.
pub const TRACE_TOL: f64 = 1e-6;
pub const EIGEN_TOL: f64 = 1e-6;
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Calibration bracket for Γ in rad/s.
pub const CALIBRATION_BRACKET: (f64, f64) = (1e-3, 1e6);
pub const CALIBRATION_TOL: f64 = 1e-4;
/// Largest fidelity change accepted when the RK4 step is halved.
pub const STEP_HALVING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Γ in rad/s.
    pub damp_rate: f64,
    /// Bath occupation n̄.
    pub nbar: f64,
    /// RK4 step in seconds.
    pub integrator_step: f64,
}

impl NoiseParams {
    /// Γ = 0, n̄ = 0, step t*/10⁴.
    pub fn noiseless(params: &ExperimentParams) -> Self {
        Self {
            damp_rate: 0.0,
            nbar: 0.0,
            integrator_step: params.t_star / DEFAULT_STEPS_PER_TSTAR,
        }
    }

    pub fn with_damping(&self, damp_rate: f64) -> Self {
        Self { damp_rate, ..*self }
    }

    pub fn validate(&self, params: &ExperimentParams) -> Result<()> {
        if !(self.damp_rate >= 0.0 && self.damp_rate.is_finite()) {
            return Err(Error::param("noise.damp_rate", "must be finite and >= 0"));
        }
        if !(self.nbar >= 0.0 && self.nbar.is_finite()) {
            return Err(Error::param("noise.nbar", "must be finite and >= 0"));
        }
        if !(self.integrator_step > 0.0
            && self.integrator_step <= params.t_star / 1e3 * (1.0 + 1e-12))
        {
            return Err(Error::param(
                "noise.integrator_step",
                "must lie in (0, t_star/1000]",
            ));
        }
        Ok(())
    }
}

/// Equally spaced instantaneous pulses at t_j = (j + ½)·window/count.
#[derive(Debug, Clone, PartialEq)]
pub struct PDDSchedule {
    pub pulse_count: usize,
    pub window: f64,
    pub pulse_op: Operator,
}

impl PDDSchedule {
    /// πZ pulses exp(−iπσ_z/2) ⊗ 1.
    pub fn pi_z(layout: HilbertLayout, pulse_count: usize, window: f64) -> Result<Self> {
        let sz = ElementaryOps::new(layout).sigma_z;
        let pulse_op =
            crate::hilbert::expm(&sz.scale(Complex64::new(0.0, -std::f64::consts::FRAC_PI_2)))?;
        let s = Self {
            pulse_count,
            window,
            pulse_op,
        };
        s.validate()?;
        Ok(s)
    }

    /// πZ pulses over the default 1.1125·t* window.
    pub fn default_for(params: &ExperimentParams, pulse_count: usize) -> Result<Self> {
        Self::pi_z(
            params.layout,
            pulse_count,
            DEFAULT_WINDOW_FACTOR * params.t_star,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(Error::param("schedule.window", "must be finite and > 0"));
        }
        if !self.pulse_op.is_unitary() {
            return Err(Error::param("schedule.pulse_op", "must be unitary"));
        }
        Ok(())
    }

    pub fn pulse_times(&self) -> Vec<f64> {
        let spacing = self.window / self.pulse_count as f64;
        (0..self.pulse_count)
            .map(|j| (j as f64 + 0.5) * spacing)
            .collect()
    }
}

/// Precomputed sparse structure of the master equation.
struct Generator {
    layout: HilbertLayout,
    lambda: f64,
    omega: f64,
    /// V_{i,k} ≠ 0 only for k = partner[i]; `sqrt` holds √(n+1).
    partner: Vec<Option<(usize, f64)>>,
    gamma_down: f64,
    gamma_up: f64,
}

impl Generator {
    fn new(params: &ExperimentParams, noise: &NoiseParams) -> Self {
        let layout = params.layout;
        let n = layout.fock_cutoff();
        let partner = (0..layout.total_dim())
            .map(|i| {
                if i < n {
                    // |↑,k⟩ ← σ₊a ← |↓,k+1⟩
                    (i + 1 < n).then(|| (n + i + 1, ((i + 1) as f64).sqrt()))
                } else {
                    let m = i - n;
                    (m >= 1).then(|| (m - 1, (m as f64).sqrt()))
                }
            })
            .collect();
        Self {
            layout,
            lambda: params.lambda_coupling,
            omega: params.signal_frequency(),
            partner,
            gamma_down: noise.damp_rate * (noise.nbar + 1.0),
            gamma_up: noise.damp_rate * noise.nbar,
        }
    }

    /// Row coefficients V_{i, partner(i)} at time t.
    fn coefficients(&self, t: f64) -> Vec<Complex64> {
        let n = self.layout.fock_cutoff();
        let phase = Complex64::from_polar(self.lambda, -self.omega * t);
        self.partner
            .iter()
            .enumerate()
            .map(|(i, p)| match p {
                Some((_, s)) => (if i < n { phase } else { phase.conj() }) * *s,
                None => Complex64::new(0.0, 0.0),
            })
            .collect()
    }

    fn density_rhs(&self, coef: &[Complex64], rho: &CMatrix, out: &mut CMatrix) {
        let d = self.layout.total_dim();
        let n = self.layout.fock_cutoff();
        let minus_i = Complex64::new(0.0, -1.0);
        let half = 0.5 * (self.gamma_down + self.gamma_up);
        for j in 0..d {
            let right = self.partner[j].map(|(pj, _)| (pj, coef[j].conj()));
            for i in 0..d {
                let mut comm = Complex64::new(0.0, 0.0);
                if let Some((pi, _)) = self.partner[i] {
                    comm += coef[i] * rho[(pi, j)];
                }
                if let Some((pj, c)) = right {
                    comm -= rho[(i, pj)] * c;
                }
                let diss = match (i < n, j < n) {
                    (true, true) => {
                        rho[(i + n, j + n)] * self.gamma_up - rho[(i, j)] * self.gamma_down
                    }
                    (false, false) => {
                        rho[(i - n, j - n)] * self.gamma_down - rho[(i, j)] * self.gamma_up
                    }
                    _ => -rho[(i, j)] * half,
                };
                out[(i, j)] = minus_i * comm + diss;
            }
        }
    }

    fn state_rhs(&self, coef: &[Complex64], psi: &CVector, out: &mut CVector) {
        let minus_i = Complex64::new(0.0, -1.0);
        for (i, o) in out.iter_mut().enumerate() {
            *o = match self.partner[i] {
                Some((pi, _)) => minus_i * coef[i] * psi[pi],
                None => Complex64::new(0.0, 0.0),
            };
        }
    }

    /// One RK4 step of both ρ and the closed-system ψ.
    fn step(&self, t: f64, h: f64, rho: &mut CMatrix, psi: &mut CVector, scratch: &mut Scratch) {
        let c0 = self.coefficients(t);
        let c1 = self.coefficients(t + 0.5 * h);
        let c2 = self.coefficients(t + h);
        let half = Complex64::new(0.5 * h, 0.0);
        let full = Complex64::new(h, 0.0);
        let sixth = Complex64::new(h / 6.0, 0.0);
        let two = Complex64::new(2.0, 0.0);

        let Scratch { k, tmp, kv, tmpv } = scratch;
        self.density_rhs(&c0, rho, &mut k[0]);
        *tmp = &*rho + &k[0] * half;
        self.density_rhs(&c1, tmp, &mut k[1]);
        *tmp = &*rho + &k[1] * half;
        self.density_rhs(&c1, tmp, &mut k[2]);
        *tmp = &*rho + &k[2] * full;
        self.density_rhs(&c2, tmp, &mut k[3]);
        *rho += (&k[0] + &k[1] * two + &k[2] * two + &k[3]) * sixth;

        self.state_rhs(&c0, psi, &mut kv[0]);
        *tmpv = &*psi + &kv[0] * half;
        self.state_rhs(&c1, tmpv, &mut kv[1]);
        *tmpv = &*psi + &kv[1] * half;
        self.state_rhs(&c1, tmpv, &mut kv[2]);
        *tmpv = &*psi + &kv[2] * full;
        self.state_rhs(&c2, tmpv, &mut kv[3]);
        *psi += (&kv[0] + &kv[1] * two + &kv[2] * two + &kv[3]) * sixth;
    }
}

struct Scratch {
    k: [CMatrix; 4],
    tmp: CMatrix,
    kv: [CVector; 4],
    tmpv: CVector,
}

impl Scratch {
    fn new(d: usize) -> Self {
        let m = || CMatrix::zeros(d, d);
        let v = || CVector::zeros(d);
        Self {
            k: [m(), m(), m(), m()],
            tmp: m(),
            kv: [v(), v(), v(), v()],
            tmpv: v(),
        }
    }
}

/// One sampled point of a trajectory: the noisy state and the
/// decoherence-free, pulse-free target at the same time.
#[derive(Debug, Clone)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub state: DensityOp,
    pub target: PureState,
}

fn apply_pulse(rho: &mut CMatrix, pulse: &Operator) {
    let p = pulse.matrix();
    let d = p.nrows();
    let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || p[(i, j)] == Complex64::new(0.0, 0.0)));
    if diagonal {
        for j in 0..d {
            let cj = p[(j, j)].conj();
            for i in 0..d {
                rho[(i, j)] *= p[(i, i)] * cj;
            }
        }
    } else {
        *rho = gemm(&gemm(p, rho), &p.adjoint());
    }
}

/// Integrates from 0 and records the state at each of `sample_times`
/// (ascending, within [0, t_end]). Pulses at or before a sample time are
/// applied before that sample is recorded.
pub fn evolve_sampled(
    initial: &DensityOp,
    target0: &PureState,
    params: &ExperimentParams,
    noise: &NoiseParams,
    schedule: &PDDSchedule,
    sample_times: &[f64],
) -> Result<Vec<TrajectoryPoint>> {
    params.validate()?;
    noise.validate(params)?;
    schedule.validate()?;
    let layout = params.layout;
    layout.check_same(&initial.layout())?;
    layout.check_same(&target0.layout())?;
    layout.check_same(&schedule.pulse_op.layout())?;
    if sample_times.windows(2).any(|w| w[1] < w[0])
        || sample_times.first().is_some_and(|&t| t < 0.0)
    {
        return Err(Error::param(
            "samples",
            "sample times must be ascending and >= 0",
        ));
    }
    let t_end = sample_times.last().copied().unwrap_or(0.0);

    let gen = Generator::new(params, noise);
    let mut scratch = Scratch::new(layout.total_dim());
    let mut rho = initial.matrix().clone();
    let mut psi = target0.amplitudes().clone();

    let pulses: Vec<f64> = schedule
        .pulse_times()
        .into_iter()
        .filter(|&t| t <= t_end)
        .collect();
    let mut next_pulse = 0;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(sample_times.len());

    for &sample in sample_times {
        loop {
            let pulse_due = pulses.get(next_pulse).copied().filter(|&tp| tp <= sample);
            let stop = pulse_due.unwrap_or(sample);
            advance(
                &gen,
                &mut t,
                stop,
                noise.integrator_step,
                &mut rho,
                &mut psi,
                &mut scratch,
            );
            match pulse_due {
                Some(_) => {
                    apply_pulse(&mut rho, &schedule.pulse_op);
                    next_pulse += 1;
                }
                None => break,
            }
        }
        if !is_finite(&rho) {
            return Err(Error::NonFinite("density matrix"));
        }
        let state = DensityOp::from_raw(layout, rho.clone());
        state.check(HERMITIAN_TOL, TRACE_TOL, EIGEN_TOL, t)?;
        out.push(TrajectoryPoint {
            time: sample,
            state,
            target: PureState::from_amplitudes(layout, psi.clone())?,
        });
    }
    Ok(out)
}

fn advance(
    gen: &Generator,
    t: &mut f64,
    stop: f64,
    max_step: f64,
    rho: &mut CMatrix,
    psi: &mut CVector,
    scratch: &mut Scratch,
) {
    let span = stop - *t;
    if span <= 0.0 {
        return;
    }
    let steps = (span / max_step * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let start = *t;
    for k in 0..steps {
        gen.step(start + k as f64 * h, h, rho, psi, scratch);
    }
    *t = stop;
}

/// Uniform samples on [0, t], `samples` ≥ 2 points.
pub fn uniform_times(t: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::param("samples", "must be >= 2"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param("t_end", "must be finite and > 0"));
    }
    Ok((0..samples)
        .map(|k| {
            if k + 1 == samples {
                t
            } else {
                t * k as f64 / (samples - 1) as f64
            }
        })
        .collect())
}

/// Trajectory of (t, ρ(t)) at `samples` uniform times on [0, t_end].
pub fn lindblad_evolve(
    initial: &DensityOp,
    params: &ExperimentParams,
    noise: &NoiseParams,
    schedule: &PDDSchedule,
    t_end: f64,
    samples: usize,
) -> Result<Vec<(f64, DensityOp)>> {
    let times = uniform_times(t_end, samples)?;
    let target = PureState::initial(params.layout);
    Ok(
        evolve_sampled(initial, &target, params, noise, schedule, &times)?
            .into_iter()
            .map(|p| (p.time, p.state))
            .collect(),
    )
}

/// Fidelity to the decoherence-free, pulse-free evolution of |↑,0⟩,
/// sampled uniformly on [0, window].
pub fn fidelity_curve(
    params: &ExperimentParams,
    noise: &NoiseParams,
    schedule: &PDDSchedule,
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    let times = uniform_times(schedule.window, samples)?;
    fidelity_at_times(params, noise, schedule, &times)
}

pub fn fidelity_at_times(
    params: &ExperimentParams,
    noise: &NoiseParams,
    schedule: &PDDSchedule,
    times: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let psi0 = PureState::initial(params.layout);
    let rho0 = DensityOp::from_pure(&psi0);
    evolve_sampled(&rho0, &psi0, params, noise, schedule, times)?
        .iter()
        .map(|p| Ok((p.time, fidelity(&p.target, &p.state)?)))
        .collect()
}

/// Fidelity at a single time `t`.
pub fn fidelity_at(
    params: &ExperimentParams,
    noise: &NoiseParams,
    schedule: &PDDSchedule,
    t: f64,
) -> Result<f64> {
    Ok(fidelity_at_times(params, noise, schedule, &[t])?[0].1)
}

/// |F(h) − F(h/2)| at time t; NonConverged above 10⁻⁶.
pub fn step_halving_check(
    params: &ExperimentParams,
    noise: &NoiseParams,
    schedule: &PDDSchedule,
    t: f64,
) -> Result<f64> {
    let halved = NoiseParams {
        integrator_step: noise.integrator_step / 2.0,
        ..*noise
    };
    let (a, b) = rayon::join(
        || fidelity_at(params, noise, schedule, t),
        || fidelity_at(params, &halved, schedule, t),
    );
    let change = (a? - b?).abs();
    if change >= STEP_HALVING_TOL {
        return Err(Error::NonConverged {
            what: "RK4 step halving",
            change,
            tolerance: STEP_HALVING_TOL,
        });
    }
    Ok(change)
}

/// Γ such that the pulse-free fidelity at `t_eval` equals the target,
/// with n̄ = 0 and step t*/10⁴.
pub fn calibrate_damping(
    target_fidelity: f64,
    params: &ExperimentParams,
    t_eval: f64,
) -> Result<NoiseParams> {
    calibrate_damping_with(
        target_fidelity,
        params,
        &NoiseParams::noiseless(params),
        t_eval,
    )
}

/// Log-scale bisection on Γ ∈ [10⁻³, 10⁶] keeping n̄ and the step of `base`.
/// A target of 1 returns Γ = 0 exactly. The calibrated value passes the
/// RK4 step-halving check before it is returned.
pub fn calibrate_damping_with(
    target_fidelity: f64,
    params: &ExperimentParams,
    base: &NoiseParams,
    t_eval: f64,
) -> Result<NoiseParams> {
    let fail = |reason: String| Error::CalibrationFailed {
        target: target_fidelity,
        reason,
    };
    if !(target_fidelity > 0.0 && target_fidelity <= 1.0) {
        return Err(fail("target fidelity must lie in (0, 1]".into()));
    }
    if target_fidelity == 1.0 {
        return Ok(base.with_damping(0.0));
    }
    let free = PDDSchedule::default_for(params, 0)?;
    let f = |gamma: f64| fidelity_at(params, &base.with_damping(gamma), &free, t_eval);

    let (mut lo, mut hi) = CALIBRATION_BRACKET;
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if !(f_hi <= target_fidelity && target_fidelity <= f_lo) {
        return Err(fail(format!(
            "fidelity spans [{f_hi:.6}, {f_lo:.6}] over the damping bracket"
        )));
    }
    let mut best = (f64::INFINITY, lo);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        let fm = f(mid)?;
        let err = (fm - target_fidelity).abs();
        if err < best.0 {
            best = (err, mid);
        }
        if err <= CALIBRATION_TOL * 0.1 {
            break;
        }
        if fm > target_fidelity {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    if best.0 > CALIBRATION_TOL {
        return Err(fail(format!(
            "bisection stalled {:.3e} from target",
            best.0
        )));
    }
    let calibrated = base.with_damping(best.1);
    step_halving_check(params, &calibrated, &free, t_eval)?;
    Ok(calibrated)
}

/// Tr(Π_f σ₋ ρ) / Tr(Π_f ρ) with Π_f = |θ↓⟩⟨θ↓| ⊗ 1: the weak value of σ₋
/// carried by a mixed pre-selected state.
pub fn mixed_weak_value(rho: &DensityOp, theta: f64) -> Result<Complex64> {
    let n = rho.layout().fock_cutoff();
    let m = rho.matrix();
    let (s, c) = theta.sin_cos();
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let (u, d) = (k, n + k);
        num += c * (c * m[(u, d)] + s * m[(u, u)]);
        den += s * s * m[(u, u)] + c * c * m[(d, d)] + s * c * (m[(u, d)] + m[(d, u)]);
    }
    if den.norm() < 1e-30 {
        return Err(Error::ZeroProbability(den.norm()));
    }
    Ok(num / den)
}
