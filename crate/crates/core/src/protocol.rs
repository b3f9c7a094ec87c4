//! The measurement protocol: prepare |↑,0⟩, evolve with the effective
//! unitary, post-select the qubit on |θ↓⟩ = cosθ|↓⟩ + sinθ|↑⟩, keep the
//! kicked meter, reset the qubit to |↑⟩ and repeat.

use num_complex::Complex64;
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{Error, Result};
use crate::hilbert::{coherent_state, CVector, MeterState, Operator, PureState, Spin};
use crate::model::{weak_regime_margin, ExperimentParams};
use crate::zassenhaus::{effective_unitary, oracle_propagator};

/// Post-selection probabilities below this are treated as impossible.
pub const MIN_PROBABILITY: f64 = 1e-30;

/// Margins at or above this leave the weak regime.
pub const WEAK_REGIME_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct KickResult {
    /// Normalized meter state after the kick.
    pub meter_state: MeterState,
    /// Post-selection probability of this kick.
    pub p_f: f64,
    /// A_w = cot θ
    pub weak_value: f64,
    /// Analytic coherent amplitude after `kick_index` kicks, N·z·γ·A_w.
    pub predicted_alpha: Complex64,
    pub kick_index: u32,
    /// Product of the per-kick post-selection probabilities so far.
    pub cumulative_probability: f64,
}

impl KickResult {
    pub fn mean_a(&self) -> Complex64 {
        self.meter_state.mean_a()
    }

    /// Fidelity of the meter to the coherent state of `predicted_alpha`.
    pub fn coherent_fidelity(&self) -> Result<f64> {
        let target = coherent_state(self.meter_state.layout(), self.predicted_alpha)?;
        self.meter_state.fidelity(&target)
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

impl Serialize for KickResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let amplitudes: Vec<[f64; 2]> = self
            .meter_state
            .amplitudes()
            .iter()
            .map(|z| pair(*z))
            .collect();
        let mut s = serializer.serialize_struct("KickResult", 8)?;
        s.serialize_field("kick_index", &self.kick_index)?;
        s.serialize_field("p_f", &self.p_f)?;
        s.serialize_field("cumulative_probability", &self.cumulative_probability)?;
        s.serialize_field("weak_value", &self.weak_value)?;
        s.serialize_field("predicted_alpha", &pair(self.predicted_alpha))?;
        s.serialize_field("mean_a", &pair(self.mean_a()))?;
        s.serialize_field("mean_n", &self.meter_state.mean_n())?;
        s.serialize_field("meter_amplitudes", &amplitudes)?;
        s.end()
    }
}

/// Projects the spin factor onto ⟨θ↓| and renormalizes the meter.
pub fn postselect(state: &PureState, theta: f64) -> Result<(MeterState, f64)> {
    if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::param("theta_postselect", "must lie in (0, pi/2]"));
    }
    let layout = state.layout();
    let (s, c) = theta.sin_cos();
    let meter = CVector::from_fn(layout.fock_cutoff(), |n, _| {
        state.amplitude(Spin::Up, n) * s + state.amplitude(Spin::Down, n) * c
    });
    let p = meter.norm_squared();
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
    if !(p >= MIN_PROBABILITY) {
        return Err(Error::ZeroProbability(p));
    }
    Ok((MeterState::from_amplitudes(layout, meter)?, p.min(1.0)))
}

/// One kick with an arbitrary propagator: |↑⟩⊗meter → U → post-select.
pub fn kick_with(u: &Operator, meter: &MeterState, theta: f64) -> Result<(MeterState, f64)> {
    let psi = PureState::product([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], meter)?;
    postselect(&psi.evolve(u)?, theta)
}

fn check_regime(params: &ExperimentParams) -> Result<()> {
    params.validate()?;
    let margin = weak_regime_margin(params, 1.0);
    if margin >= WEAK_REGIME_LIMIT {
        return Err(Error::WeakRegimeViolation { margin });
    }
    Ok(())
}

pub fn single_kick(params: &ExperimentParams) -> Result<KickResult> {
    flywheel(params, 1)
}

/// N kicks with ideal carrier resets; returns the state after the last kick.
pub fn flywheel(params: &ExperimentParams, n_kicks: u32) -> Result<KickResult> {
    Ok(flywheel_trace(params, n_kicks)?
        .pop()
        .expect("at least one kick"))
}

/// Every intermediate [`KickResult`] of an N-kick flywheel run.
pub fn flywheel_trace(params: &ExperimentParams, n_kicks: u32) -> Result<Vec<KickResult>> {
    check_regime(params)?;
    if n_kicks == 0 {
        return Err(Error::param("n_kicks", "must be >= 1"));
    }
    let alpha_1 = params.predicted_alpha();
    let final_sq = (n_kicks as f64 * alpha_1).powi(2);
    let limit = params.layout.fock_cutoff() as f64 / 4.0;
    if final_sq > limit {
        return Err(Error::TruncationOverflow {
            alpha_sq: final_sq,
            limit,
        });
    }
    let u = effective_unitary(params)?;
    run_kicks(&u, params, n_kicks)
}

fn run_kicks(u: &Operator, params: &ExperimentParams, n_kicks: u32) -> Result<Vec<KickResult>> {
    let alpha_1 = params.predicted_alpha();
    let mut meter = MeterState::vacuum(params.layout);
    let mut cumulative = 1.0;
    let mut out = Vec::with_capacity(n_kicks as usize);
    for k in 1..=n_kicks {
        let (next, p) = kick_with(u, &meter, params.theta_postselect)?;
        cumulative *= p;
        meter = next;
        out.push(KickResult {
            meter_state: meter.clone(),
            p_f: p,
            weak_value: params.weak_value(),
            predicted_alpha: Complex64::new(k as f64 * alpha_1, 0.0),
            kick_index: k,
            cumulative_probability: cumulative,
        });
    }
    Ok(out)
}

/// 1 − |⟨meter_eff|meter_oracle⟩|² after each kick, where the oracle run
/// replaces the effective unitary by the time-ordered propagator. Measures
/// how far the vacuum-derived reduction carries to kicked meter states.
pub fn oracle_fidelity_gap(
    params: &ExperimentParams,
    n_kicks: u32,
    steps: usize,
) -> Result<Vec<f64>> {
    let effective = flywheel_trace(params, n_kicks)?;
    let u = oracle_propagator(params, steps)?;
    let oracle = run_kicks(&u, params, n_kicks)?;
    effective
        .iter()
        .zip(&oracle)
        .map(|(e, o)| Ok(1.0 - e.meter_state.fidelity(&o.meter_state)?))
        .collect()
}
