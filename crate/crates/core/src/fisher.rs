//! Fisher-information budget of the post-selected protocol.
//!
//! With |Ψ(γ)⟩ = exp(−zγ(σ₊a − σ₋a†))|↑,0⟩ the total quantum Fisher
//! information is F_T = 4z². Post-selection splits it into the meter part
//! F_m (QFI of the normalized kicked meter, weighted by p_f) and the
//! classical information F_pf of the pass/fail record.
//!
//! Closed forms used here, with s = sin θ, c = cos θ and x = zγA_w:
//!   p_f   = s² + z²γ²c²          dp_f/dγ = 2z²γc²
//!   F_m   = 4z²c² / (1 + x²)
//!   F_pf  = (dp_f/dγ)² / (p_f(1 − p_f))
//! so that F_m + F_pf = F_T up to O(sin²θ) and O(γ²) corrections.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{MeterState, Operator, PureState};
use crate::model::ExperimentParams;
use crate::protocol::postselect;
use crate::zassenhaus::effective_unitary;

/// Relative change allowed under step halving.
pub const HALVING_TOL: f64 = 1e-6;
const NORMALIZATION_TOL: f64 = 1e-8;
const MIN_PROBABILITY: f64 = 1e-30;

/// 4(⟨H²⟩ − ⟨H⟩²) for a Hermitian generator H.
pub fn qfi_pure(generator: &Operator, state: &PureState) -> Result<f64> {
    let scale = generator.max_abs().max(f64::MIN_POSITIVE);
    let deviation = generator.hermiticity_deviation();
    if deviation > 1e-12 * scale {
        return Err(Error::NonHermitian { deviation });
    }
    if generator.layout() != state.layout() {
        return Err(Error::LayoutMismatch {
            left: generator.layout().fock_cutoff(),
            right: state.layout().fock_cutoff(),
        });
    }
    let h_psi = generator.apply(state.amplitudes());
    let second = h_psi.norm_squared();
    let first = state.amplitudes().dotc(&h_psi).re;
    Ok((4.0 * (second - first * first)).max(0.0))
}

/// Step rule max(10⁻⁶·|γ|, 10⁻¹²).
pub fn default_step(gamma: f64) -> f64 {
    (1e-6 * gamma.abs()).max(1e-12)
}

/// Meter step used by [`fisher_budget`]: [`default_step`], capped at 10⁻⁶ of the
/// amplification scale 1/|zA_w| on which the post-selected meter turns.
/// Without the cap the 10⁻¹² floor exceeds that scale once θ ≲ 10⁻¹¹ and
/// the central differences stop converging.
pub fn budget_step(params: &ExperimentParams) -> f64 {
    let scale = 1.0 / (params.z_constant * params.weak_value()).abs();
    let step = default_step(params.gamma());
    if scale.is_finite() && scale > 0.0 {
        step.min(1e-6 * scale)
    } else {
        step
    }
}

/// Pass/fail step used by [`fisher_budget`]. p_f = sin²θ·cos²(zγ) +
/// cos²θ·sin²(zγ) changes on the scale max(|γ|, sinθ/|z|): below it the
/// sin²θ offset dominates, above it the z²γ² term. A step of 10⁻² of that
/// scale, capped at 10⁻⁴/|z|, keeps the central-difference error near
/// (4/3)(hz)² ≤ 10⁻⁸ while keeping p_f(γ+h) − p_f(γ−h) well above the
/// roundoff of p_f.
pub fn postselect_step(params: &ExperimentParams) -> f64 {
    let z = params.z_constant.abs();
    if z == 0.0 {
        return default_step(params.gamma());
    }
    let scale = params.gamma().abs().max(params.theta_postselect.sin() / z);
    (1e-2 * scale).min(1e-4 / z)
}

fn checked_distribution(p: Vec<f64>, at: f64) -> Result<Vec<f64>> {
    let sum: f64 = p.iter().sum();
    if !(sum - 1.0).abs().le(&NORMALIZATION_TOL) || p.iter().any(|x| !x.is_finite()) {
        return Err(Error::param(
            "probabilities",
            format!("distribution at gamma = {at:e} sums to {sum}"),
        ));
    }
    Ok(p)
}

fn fisher_at_step<F>(probabilities: &F, center: &[f64], gamma: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let plus = checked_distribution(probabilities(gamma + h)?, gamma + h)?;
    let minus = checked_distribution(probabilities(gamma - h)?, gamma - h)?;
    if plus.len() != center.len() || minus.len() != center.len() {
        return Err(Error::param(
            "probabilities",
            "outcome count changes with gamma",
        ));
    }
    let mut total = 0.0;
    for (j, &p) in center.iter().enumerate() {
        let dp = (plus[j] - minus[j]) / (2.0 * h);
        if p < MIN_PROBABILITY {
            if dp != 0.0 {
                return Err(Error::DegenerateDistribution {
                    index: j,
                    probability: p,
                });
            }
            continue;
        }
        total += dp * dp / p;
    }
    Ok(total)
}

fn halving_check(what: &'static str, coarse: f64, fine: f64) -> Result<f64> {
    let scale = coarse.abs().max(fine.abs());
    let change = if scale == 0.0 {
        0.0
    } else {
        (coarse - fine).abs() / scale
    };
    if change >= HALVING_TOL {
        return Err(Error::NonConverged {
            what,
            change,
            tolerance: HALVING_TOL,
        });
    }
    Ok(fine)
}

/// Σ_j (∂P_j/∂γ)²/P_j by central differences, accepted only if halving the
/// step changes the result by less than 10⁻⁶ relative. Returns the
/// half-step value.
pub fn classical_fisher<F>(probabilities: F, gamma: f64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
    if !(step > 0.0) {
        return Err(Error::param("step", "must be > 0"));
    }
    let center = checked_distribution(probabilities(gamma)?, gamma)?;
    let coarse = fisher_at_step(&probabilities, &center, gamma, step)?;
    let fine = fisher_at_step(&probabilities, &center, gamma, step / 2.0)?;
    halving_check("classical Fisher step halving", coarse, fine)
}

/// Post-selected meter state and p_f from the simulated effective unitary
/// at coupling `gamma`.
pub fn simulated_meter(params: &ExperimentParams, gamma: f64) -> Result<(MeterState, f64)> {
    let p = params.with_gamma(gamma);
    let psi = PureState::initial(p.layout).evolve(&effective_unitary(&p)?)?;
    postselect(&psi, p.theta_postselect)
}

fn geometric_at_step(
    params: &ExperimentParams,
    center: &MeterState,
    p_f: f64,
    gamma: f64,
    h: f64,
) -> Result<f64> {
    let (plus, _) = simulated_meter(params, gamma + h)?;
    let (minus, _) = simulated_meter(params, gamma - h)?;
    let d = (plus.amplitudes() - minus.amplitudes()) / Complex64::new(2.0 * h, 0.0);
    let overlap = center.amplitudes().dotc(&d);
    Ok(4.0 * p_f * (d.norm_squared() - overlap.norm_sqr()))
}

/// F_m = 4p_f[⟨∂φ|∂φ⟩ − |⟨∂φ|φ⟩|²] by central differences on the simulated
/// post-selected meter, with a step-halving check.
pub fn meter_fisher_numeric(params: &ExperimentParams, gamma: f64, step: f64) -> Result<f64> {
    let (center, p_f) = simulated_meter(params, gamma)?;
    let coarse = geometric_at_step(params, &center, p_f, gamma, step)?;
    let fine = geometric_at_step(params, &center, p_f, gamma, step / 2.0)?;
    halving_check("meter Fisher step halving", coarse, fine)
}

/// F_pf of the simulated pass/fail record by central differences.
pub fn postselect_fisher_numeric(params: &ExperimentParams, gamma: f64, step: f64) -> Result<f64> {
    classical_fisher(
        |g| {
            let (_, p) = simulated_meter(params, g)?;
            Ok(vec![p, 1.0 - p])
        },
        gamma,
        step,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherReport {
    pub gamma: f64,
    pub theta: f64,
    pub z: f64,
    pub weak_value: f64,
    /// x = zγA_w
    pub amplification: f64,
    pub p_f: f64,
    pub f_total: f64,
    pub f_meter: f64,
    pub f_postselect: f64,
    pub retention: f64,
    pub discard_fraction: f64,
    /// 1 − x², the small-γ retention approximation.
    pub retention_approx: f64,
    /// x²(1 − x²)(1 − z²γ²)·4z², the small-γ F_pf approximation.
    pub f_postselect_approx: f64,
    pub f_meter_numeric: f64,
    pub f_postselect_numeric: f64,
}

impl FisherReport {
    pub const CSV_HEADER: &'static str = "gamma,theta,z,weak_value,amplification,p_f,f_total,f_meter,f_postselect,retention,discard_fraction,retention_approx,f_postselect_approx,f_meter_numeric,f_postselect_numeric";

    pub fn csv_fields(&self) -> [f64; 15] {
        [
            self.gamma,
            self.theta,
            self.z,
            self.weak_value,
            self.amplification,
            self.p_f,
            self.f_total,
            self.f_meter,
            self.f_postselect,
            self.retention,
            self.discard_fraction,
            self.retention_approx,
            self.f_postselect_approx,
            self.f_meter_numeric,
            self.f_postselect_numeric,
        ]
    }
}

/// Closed-form budget at the parameters' γ plus both finite-difference
/// cross-checks on the simulated state.
pub fn fisher_budget(params: &ExperimentParams) -> Result<FisherReport> {
    params.validate()?;
    let theta = params.theta_postselect;
    if theta >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::param(
            "theta_postselect",
            "must lie in (0, pi/2) for the Fisher budget",
        ));
    }
    let gamma = params.gamma();
    let z = params.z_constant;
    let a_w = params.weak_value();
    let (s, c) = theta.sin_cos();
    let x = z * gamma * a_w;

    let p_f = s * s + (z * gamma * c).powi(2);
    let f_total = 4.0 * z * z;
    let f_meter = 4.0 * z * z * c * c / (1.0 + x * x);
    let dp = 2.0 * z * z * gamma * c * c;
    let f_postselect = if dp == 0.0 {
        0.0
    } else {
        dp * dp / (p_f * (1.0 - p_f))
    };
    let denom = f_meter + f_postselect;

    let step = budget_step(params);
    Ok(FisherReport {
        gamma,
        theta,
        z,
        weak_value: a_w,
        amplification: x,
        p_f,
        f_total,
        f_meter,
        f_postselect,
        retention: f_meter / f_total,
        discard_fraction: if denom > 0.0 {
            f_postselect / denom
        } else {
            0.0
        },
        retention_approx: 1.0 - x * x,
        f_postselect_approx: f_total * x * x * (1.0 - x * x) * (1.0 - (z * gamma).powi(2)),
        f_meter_numeric: meter_fisher_numeric(params, gamma, step)?,
        f_postselect_numeric: postselect_fisher_numeric(params, gamma, postselect_step(params))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{ElementaryOps, HilbertLayout, MeterState};
    use crate::zassenhaus::QUOTED_Z;

    fn layout() -> HilbertLayout {
        HilbertLayout::new(6).unwrap()
    }

    #[test]
    fn qfi_examples() {
        let l = layout();
        let ops = ElementaryOps::new(l);
        let h = ops.sigma_z.scale(0.5);
        assert!(qfi_pure(&h, &PureState::initial(l)).unwrap().abs() < 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureState::product(
            [Complex64::new(r, 0.0), Complex64::new(r, 0.0)],
            &MeterState::vacuum(l),
        )
        .unwrap();
        assert!((qfi_pure(&h, &plus).unwrap() - 1.0).abs() < 1e-14);

        let h_g = (&ops.raise_absorb() - &ops.lower_emit()).scale(Complex64::new(0.0, -1.0));
        let f = qfi_pure(&h_g.scale(-QUOTED_Z), &PureState::initial(l)).unwrap();
        assert!((f - 4.0 * QUOTED_Z * QUOTED_Z).abs() < 1e-12);
        assert!((f - 79.15).abs() < 0.01);
    }

    #[test]
    fn qfi_rejects_non_hermitian() {
        let ops = ElementaryOps::new(layout());
        assert!(matches!(
            qfi_pure(&ops.a, &PureState::initial(layout())),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn classical_fisher_examples() {
        let g = 0.1;
        let f = classical_fisher(|g| Ok(vec![g * g, 1.0 - g * g]), g, 1e-5).unwrap();
        assert!((f - 4.0 / (1.0 - g * g)).abs() < 1e-6, "{f}");
        let f0 = classical_fisher(|_| Ok(vec![0.3, 0.7]), g, 1e-5).unwrap();
        assert_eq!(f0, 0.0);
    }

    #[test]
    fn degenerate_distribution_is_rejected() {
        let r = classical_fisher(|g| Ok(vec![0.0 * g, 1.0]), 0.0, 1e-3);
        assert_eq!(r.unwrap(), 0.0);
        let r = classical_fisher(|g: f64| Ok(vec![g.max(0.0), 1.0 - g.max(0.0)]), 0.0, 1e-3);
        assert!(matches!(
            r,
            Err(Error::DegenerateDistribution { index: 0, .. })
        ));
    }

    #[test]
    fn unnormalized_distribution_is_rejected() {
        assert!(classical_fisher(|_| Ok(vec![0.5, 0.4]), 0.0, 1e-3).is_err());
    }

    #[test]
    fn zero_gamma_budget() {
        let p = ExperimentParams {
            omega_g: 0.0,
            layout: layout(),
            ..ExperimentParams::reference_defaults()
        }
        .with_theta(0.3);
        let r = fisher_budget(&p).unwrap();
        let c2 = 0.3f64.cos().powi(2);
        assert!((r.f_meter - 4.0 * QUOTED_Z * QUOTED_Z * c2).abs() < 1e-12);
        assert_eq!(r.f_postselect, 0.0);
        assert!((r.f_meter_numeric / r.f_meter - 1.0).abs() < 1e-6);
    }

    #[test]
    fn budget_identity_in_weak_regime() {
        let base = ExperimentParams {
            layout: layout(),
            ..ExperimentParams::reference_defaults()
        }
        .with_theta(1e-4);
        let p = base.with_gamma(1e-2 / (QUOTED_Z * base.weak_value()).abs());
        let r = fisher_budget(&p).unwrap();
        let x = r.amplification;
        let rel = ((r.f_meter + r.f_postselect) - r.f_total).abs() / r.f_total;
        assert!(rel <= (1e-6f64).max(10.0 * x.powi(4)), "{rel}");
        assert!((r.f_meter_numeric / r.f_meter - 1.0).abs() < 1e-3);
        assert!((r.f_postselect_numeric / r.f_postselect - 1.0).abs() < 1e-3);
    }
}
