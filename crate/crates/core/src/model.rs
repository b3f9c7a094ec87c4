//! Physical constants, experiment parameters and the Jaynes-Cummings
//! interaction Hamiltonian in the interaction picture.
//!
//! Every frequency is angular (rad/s). The coupling `λ` is taken directly in
//! rad/s, so the default `λ = 500` with `t* = π/λ ≈ 6.28 ms` gives the full
//! Rabi flop `λt* = π`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{ElementaryOps, HilbertLayout, Operator};
use crate::zassenhaus::QUOTED_Z;

/// CODATA 2018 values, plus standard gravity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// eV·s
    pub hbar: f64,
    /// m/s
    pub c: f64,
    /// m/s²
    pub g_earth: f64,
    /// eV/T
    pub mu_bohr: f64,
    /// s
    pub sidereal_day: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        hbar: 6.582_119_569e-16,
        c: 299_792_458.0,
        g_earth: 9.806_65,
        mu_bohr: 5.788_381_806_0e-5,
        sidereal_day: 86_164.090_5,
    };

    /// g/c in s⁻¹, the spin-gravity frequency for k = 1.
    pub fn spin_gravity_frequency(&self) -> f64 {
        self.g_earth / self.c
    }

    /// Angular velocity of the Earth's rotation.
    pub fn earth_rotation(&self) -> f64 {
        2.0 * PI / self.sidereal_day
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Order-of-magnitude spin-gravity frequency quoted alongside the computed
/// g/c; kept for comparison only.
pub const QUOTED_OMEGA_G: f64 = 1e-8;

/// Every physical knob of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    /// λ = ηΩ/2, rad/s.
    pub lambda_coupling: f64,
    /// Base spin-gravity frequency for k = 1, rad/s.
    pub omega_g: f64,
    /// Peres coefficient k; the signal frequency is k·ω_g.
    pub k_scale: f64,
    /// Post-selection angle θ of |θ↓⟩ = cosθ|↓⟩ + sinθ|↑⟩.
    pub theta_postselect: f64,
    /// Post-selection time, s.
    pub t_star: f64,
    pub layout: HilbertLayout,
    /// Summed Zassenhaus constant used by the effective unitary.
    pub z_constant: f64,
    /// Qubit splitting ω_e, rad/s. Metadata only: it drops out of the
    /// interaction picture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_e: Option<f64>,
    /// Trap frequency ω_t, rad/s. Metadata only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_t: Option<f64>,
}

pub const DEFAULT_LAMBDA: f64 = 500.0;
pub const DEFAULT_THETA: f64 = 1e-8;

impl ExperimentParams {
    /// λ = 500 rad/s, t* = π/λ, θ = 10⁻⁸, ω_g = g/c, k = 1, cutoff 32.
    pub fn reference_defaults() -> Self {
        Self {
            lambda_coupling: DEFAULT_LAMBDA,
            omega_g: PhysicalConstants::CODATA.spin_gravity_frequency(),
            k_scale: 1.0,
            theta_postselect: DEFAULT_THETA,
            t_star: PI / DEFAULT_LAMBDA,
            layout: HilbertLayout::default(),
            z_constant: QUOTED_Z,
            omega_e: None,
            omega_t: None,
        }
    }

    /// Defaults with ω_g tuned so that γ = 10⁻¹¹, the coupling scale quoted
    /// for the Fisher analysis.
    pub fn quoted_fisher_defaults() -> Self {
        Self::reference_defaults().with_gamma(1e-11)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be finite"))
            }
        };
        finite("lambda_coupling", self.lambda_coupling)?;
        finite("omega_g", self.omega_g)?;
        finite("k_scale", self.k_scale)?;
        finite("theta_postselect", self.theta_postselect)?;
        finite("t_star", self.t_star)?;
        finite("z_constant", self.z_constant)?;
        if self.lambda_coupling <= 0.0 {
            return Err(Error::param("lambda_coupling", "must be > 0"));
        }
        if self.t_star <= 0.0 {
            return Err(Error::param("t_star", "must be > 0"));
        }
        if !(self.theta_postselect > 0.0 && self.theta_postselect <= FRAC_PI_2) {
            return Err(Error::param("theta_postselect", "must lie in (0, pi/2]"));
        }
        let phase = self.signal_phase();
        if phase.abs() >= 1e-2 {
            return Err(Error::FirstOrderGuard(phase.abs()));
        }
        Ok(())
    }

    /// k·ω_g in rad/s.
    pub fn signal_frequency(&self) -> f64 {
        self.k_scale * self.omega_g
    }

    /// δ* = k·ω_g·t*
    pub fn signal_phase(&self) -> f64 {
        self.signal_frequency() * self.t_star
    }

    pub fn lambda_t_star(&self) -> f64 {
        self.lambda_coupling * self.t_star
    }

    /// γ = λt*·ω_g t*/2 (signed).
    pub fn gamma(&self) -> f64 {
        0.5 * self.lambda_t_star() * self.signal_phase()
    }

    /// A_w = ⟨θ↓|σ₋|↑⟩/⟨θ↓|↑⟩ = cot θ.
    pub fn weak_value(&self) -> f64 {
        1.0 / self.theta_postselect.tan()
    }

    /// Predicted coherent amplitude z·γ·A_w of one kick.
    pub fn predicted_alpha(&self) -> f64 {
        self.z_constant * self.gamma() * self.weak_value()
    }

    /// Same parameters with ω_g rescaled so that γ equals `gamma`; k is kept.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        let omega = 2.0 * gamma / (self.lambda_t_star() * self.t_star * self.k_scale);
        Self {
            omega_g: omega,
            ..self.clone()
        }
    }

    /// Same parameters with ω_g rescaled so that k·ω_g·t* equals `phase`.
    pub fn with_signal_phase(&self, phase: f64) -> Self {
        Self {
            omega_g: phase / (self.t_star * self.k_scale),
            ..self.clone()
        }
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self {
            theta_postselect: theta,
            ..self.clone()
        }
    }

    pub fn with_cutoff(&self, fock_cutoff: usize) -> Result<Self> {
        Ok(Self {
            layout: HilbertLayout::new(fock_cutoff)?,
            ..self.clone()
        })
    }
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self::reference_defaults()
    }
}

/// The two Jaynes-Cummings building blocks σ₊a and σ₋a† for one layout.
#[derive(Debug, Clone)]
pub struct JcTerms {
    pub raise_absorb: Operator,
    pub lower_emit: Operator,
}

impl JcTerms {
    pub fn new(layout: HilbertLayout) -> Self {
        let ops = ElementaryOps::new(layout);
        Self {
            raise_absorb: ops.raise_absorb(),
            lower_emit: ops.lower_emit(),
        }
    }

    fn combine(&self, lambda: f64, c_raise: Complex64, c_lower: Complex64) -> Operator {
        &self.raise_absorb.scale(c_raise * lambda) + &self.lower_emit.scale(c_lower * lambda)
    }

    /// λ[(1 - iδ)σ₊a + (1 + iδ)σ₋a†] with δ = ω·t.
    pub fn first_order(&self, lambda: f64, omega: f64, t: f64) -> Operator {
        let d = omega * t;
        self.combine(lambda, Complex64::new(1.0, -d), Complex64::new(1.0, d))
    }

    /// λ[e^{-iωt}σ₊a + e^{iωt}σ₋a†]
    pub fn exact(&self, lambda: f64, omega: f64, t: f64) -> Operator {
        let phase = Complex64::from_polar(1.0, -omega * t);
        self.combine(lambda, phase, phase.conj())
    }
}

/// V_I(t)/ħ to first order in δ = kω_g·t, in rad/s.
pub fn interaction_hamiltonian(params: &ExperimentParams, t: f64) -> Result<Operator> {
    params.validate()?;
    let terms = JcTerms::new(params.layout);
    Ok(terms.first_order(params.lambda_coupling, params.signal_frequency(), t))
}

/// V_I(t)/ħ with the full phase factor e^{∓iωt}, for oracle use.
pub fn interaction_hamiltonian_exact(params: &ExperimentParams, t: f64) -> Result<Operator> {
    params.validate()?;
    let terms = JcTerms::new(params.layout);
    Ok(terms.exact(params.lambda_coupling, params.signal_frequency(), t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrengthReport {
    /// ħg/c in eV.
    #[serde(rename = "energy_eV")]
    pub energy_ev: f64,
    /// Equivalent magnetic field, T.
    pub field_tesla: f64,
    /// ω⊕·c/g, rotation-to-gravity coupling ratio.
    pub mashhoon_ratio: f64,
    /// g/c in s⁻¹.
    pub omega_g: f64,
}

pub fn strength_estimates(constants: &PhysicalConstants) -> StrengthReport {
    let energy_ev = constants.hbar * constants.g_earth / constants.c;
    StrengthReport {
        energy_ev,
        field_tesla: energy_ev / constants.mu_bohr,
        mashhoon_ratio: constants.earth_rotation() * constants.c / constants.g_earth,
        omega_g: constants.spin_gravity_frequency(),
    }
}

/// ω = μ_B·B/ħ
pub fn field_to_omega(field_tesla: f64, constants: &PhysicalConstants) -> Result<f64> {
    if field_tesla.is_nan() || field_tesla < 0.0 {
        return Err(Error::NegativeField(field_tesla));
    }
    Ok(constants.mu_bohr * field_tesla / constants.hbar)
}

pub fn omega_to_field(omega: f64, constants: &PhysicalConstants) -> Result<f64> {
    if omega.is_nan() || omega < 0.0 {
        return Err(Error::NegativeField(omega));
    }
    Ok(constants.hbar * omega / constants.mu_bohr)
}

/// γ·|A_w|·Δ; values ≥ 0.1 leave the weak regime.
pub fn weak_regime_margin(params: &ExperimentParams, meter_spread: f64) -> f64 {
    params.gamma().abs() * params.weak_value().abs() * meter_spread
}
