use num_complex::Complex64;

use super::linalg::{gemm, hermitian_eigenvalues, max_abs_diff, CMatrix, CVector, ONE};
use super::{HilbertLayout, Operator, Spin};
use crate::error::{Error, Result};

const NORM_FLOOR: f64 = 1e-300;

fn normalized(v: CVector, what: &'static str) -> Result<CVector> {
    if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    let norm = v.norm();
    if norm < NORM_FLOOR {
        return Err(Error::param(what, "zero-norm state cannot be normalized"));
    }
    Ok(v.unscale(norm))
}

/// Normalized state vector on the composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    layout: HilbertLayout,
    amplitudes: CVector,
}

impl PureState {
    pub fn basis(layout: HilbertLayout, spin: Spin, n: usize) -> Self {
        let mut v = CVector::zeros(layout.total_dim());
        v[layout.index(spin, n)] = ONE;
        Self {
            layout,
            amplitudes: v,
        }
    }

    /// |↑⟩ ⊗ |0⟩
    pub fn initial(layout: HilbertLayout) -> Self {
        Self::basis(layout, Spin::Up, 0)
    }

    pub fn from_amplitudes(layout: HilbertLayout, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::param("amplitudes", "length does not match layout"));
        }
        Ok(Self {
            layout,
            amplitudes: normalized(amplitudes, "pure state")?,
        })
    }

    /// (up·|↑⟩ + down·|↓⟩) ⊗ meter, renormalized.
    pub fn product(spin: [Complex64; 2], meter: &MeterState) -> Result<Self> {
        let layout = meter.layout();
        let n = layout.fock_cutoff();
        let mut v = CVector::zeros(layout.total_dim());
        for (s, c) in spin.iter().enumerate() {
            for k in 0..n {
                v[s * n + k] = c * meter.amplitudes()[k];
            }
        }
        Self::from_amplitudes(layout, v)
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, spin: Spin, n: usize) -> Complex64 {
        self.amplitudes[self.layout.index(spin, n)]
    }

    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        self.layout.check_same(&other.layout)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// U|ψ⟩ renormalized (exact for unitary U up to rounding).
    pub fn evolve(&self, op: &Operator) -> Result<Self> {
        self.layout.check_same(&op.layout())?;
        Self::from_amplitudes(self.layout, op.apply(&self.amplitudes))
    }
}

/// Normalized state of the vibrational (meter) factor alone.
#[derive(Debug, Clone, PartialEq)]
pub struct MeterState {
    layout: HilbertLayout,
    amplitudes: CVector,
}

impl MeterState {
    pub fn vacuum(layout: HilbertLayout) -> Self {
        let mut v = CVector::zeros(layout.fock_cutoff());
        v[0] = ONE;
        Self {
            layout,
            amplitudes: v,
        }
    }

    pub fn from_amplitudes(layout: HilbertLayout, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != layout.fock_cutoff() {
            return Err(Error::param(
                "amplitudes",
                "length does not match Fock cutoff",
            ));
        }
        Ok(Self {
            layout,
            amplitudes: normalized(amplitudes, "meter state")?,
        })
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn inner(&self, other: &MeterState) -> Result<Complex64> {
        self.layout.check_same(&other.layout)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// |⟨self|other⟩|²
    pub fn fidelity(&self, other: &MeterState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }

    /// ⟨a⟩
    pub fn mean_a(&self) -> Complex64 {
        let v = &self.amplitudes;
        (1..v.len())
            .map(|n| v[n - 1].conj() * v[n] * (n as f64).sqrt())
            .sum()
    }

    /// ⟨n̂⟩
    pub fn mean_n(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum()
    }

    /// Euclidean distance to another meter state (no phase alignment).
    pub fn distance(&self, other: &MeterState) -> f64 {
        (&self.amplitudes - &other.amplitudes).norm()
    }

    pub fn density(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

/// Coherent state |α⟩ on the truncated Fock factor, renormalized after
/// truncation. Rejects |α|² > cutoff/4.
pub fn coherent_state(layout: HilbertLayout, alpha: Complex64) -> Result<MeterState> {
    let limit = layout.fock_cutoff() as f64 / 4.0;
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::NonFinite("coherent amplitude"));
    }
    if alpha.norm_sqr() > limit {
        return Err(Error::TruncationOverflow {
            alpha_sq: alpha.norm_sqr(),
            limit,
        });
    }
    MeterState::from_amplitudes(
        layout,
        coherent_coefficients(layout.fock_cutoff(), alpha, false),
    )
}

/// αⁿ/√n! for n < cutoff, optionally with the e^{-|α|²/2} prefactor.
pub(crate) fn coherent_coefficients(
    cutoff: usize,
    alpha: Complex64,
    with_prefactor: bool,
) -> CVector {
    let mut v = CVector::zeros(cutoff);
    let mut c = if with_prefactor {
        ONE * (-0.5 * alpha.norm_sqr()).exp()
    } else {
        ONE
    };
    v[0] = c;
    for n in 1..cutoff {
        c = c * alpha / (n as f64).sqrt();
        v[n] = c;
    }
    v
}

/// Trace-one Hermitian positive matrix on the composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOp {
    layout: HilbertLayout,
    matrix: CMatrix,
}

pub const DENSITY_HERMITIAN_TOL: f64 = 1e-10;
pub const DENSITY_TRACE_TOL: f64 = 1e-8;
pub const DENSITY_EIGEN_TOL: f64 = 1e-8;

impl DensityOp {
    pub fn from_pure(state: &PureState) -> Self {
        let v = state.amplitudes();
        Self {
            layout: state.layout(),
            matrix: v * v.adjoint(),
        }
    }

    pub fn maximally_mixed(layout: HilbertLayout) -> Self {
        let d = layout.total_dim();
        Self {
            layout,
            matrix: CMatrix::identity(d, d) * ONE.unscale(d as f64),
        }
    }

    /// Validates Hermiticity, unit trace and positivity.
    pub fn from_matrix(layout: HilbertLayout, matrix: CMatrix) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.shape() != (d, d) {
            return Err(Error::param("density", "shape does not match layout"));
        }
        let rho = Self { layout, matrix };
        rho.check(
            DENSITY_HERMITIAN_TOL,
            DENSITY_TRACE_TOL,
            DENSITY_EIGEN_TOL,
            0.0,
        )?;
        Ok(rho)
    }

    /// Unchecked constructor for integrator internals.
    pub(crate) fn from_raw(layout: HilbertLayout, matrix: CMatrix) -> Self {
        Self { layout, matrix }
    }

    /// Weighted mixture Σ wᵢ ρᵢ with weights summing to one.
    pub fn mixture(parts: &[(f64, &DensityOp)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::param("mixture", "empty mixture"))?
            .1;
        let d = first.layout.total_dim();
        let mut m = CMatrix::zeros(d, d);
        for (w, rho) in parts {
            first.layout.check_same(&rho.layout)?;
            m += &rho.matrix * ONE.scale(*w);
        }
        Self::from_matrix(first.layout, m)
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)[0]
    }

    pub fn purity(&self) -> f64 {
        gemm(&self.matrix, &self.matrix).trace().re
    }

    /// Checks the physicality tolerances, reporting `time` on failure.
    pub fn check(&self, herm_tol: f64, trace_tol: f64, eig_tol: f64, time: f64) -> Result<()> {
        let trace_error = (self.trace() - ONE).norm();
        let herm = self.hermiticity_deviation();
        let min_eig = self.min_eigenvalue();
        if herm > herm_tol || trace_error > trace_tol || min_eig < -eig_tol {
            return Err(Error::NonPhysicalState {
                time,
                trace_error: trace_error.max(herm),
                min_eigenvalue: min_eig,
            });
        }
        Ok(())
    }

    pub fn expectation(&self, op: &Operator) -> Result<Complex64> {
        self.layout.check_same(&op.layout())?;
        Ok(gemm(&self.matrix, op.matrix()).trace())
    }

    /// Partial trace over the spin factor.
    pub fn reduced_meter(&self) -> CMatrix {
        let n = self.layout.fock_cutoff();
        CMatrix::from_fn(n, n, |i, j| {
            self.matrix[(i, j)] + self.matrix[(n + i, n + j)]
        })
    }

    /// Partial trace over the meter factor, (↑, ↓) basis.
    pub fn reduced_spin(&self) -> CMatrix {
        let n = self.layout.fock_cutoff();
        CMatrix::from_fn(2, 2, |s, t| {
            (0..n).map(|k| self.matrix[(s * n + k, t * n + k)]).sum()
        })
    }

    /// U ρ U†
    pub fn conjugate(&self, op: &Operator) -> Result<Self> {
        self.layout.check_same(&op.layout())?;
        let m = gemm(&gemm(op.matrix(), &self.matrix), &op.matrix().adjoint());
        Ok(Self {
            layout: self.layout,
            matrix: m,
        })
    }
}

/// Pure-target fidelity ⟨ψ|ρ|ψ⟩, clamped to [0, 1].
pub fn fidelity(target: &PureState, state: &DensityOp) -> Result<f64> {
    target.layout().check_same(&state.layout())?;
    let v = target.amplitudes();
    let f = v.dotc(&(state.matrix() * v)).re;
    Ok(f.clamp(0.0, 1.0))
}
