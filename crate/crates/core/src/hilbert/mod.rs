//! Dense linear algebra over the qubit ⊗ truncated-Fock space.
//!
//! Basis ordering is fixed: `index = spin_index * fock_cutoff + fock_index`
//! with spin index 0 = |↑⟩ and 1 = |↓⟩. The Fock factor is hard-truncated,
//! so `a†|cutoff-1⟩ = 0`.

mod expm;
pub mod linalg;
pub(crate) mod state;

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use expm::expm_matrix;
use linalg::{gemm, kron, max_abs, max_abs_diff};
pub use linalg::{CMatrix, CVector};
pub use state::{coherent_state, fidelity, DensityOp, MeterState, PureState};

pub const DEFAULT_FOCK_CUTOFF: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct HilbertLayout {
    fock_cutoff: usize,
}

impl HilbertLayout {
    pub fn new(fock_cutoff: usize) -> Result<Self> {
        if fock_cutoff < 2 {
            return Err(Error::InvalidLayout(fock_cutoff));
        }
        Ok(Self { fock_cutoff })
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn total_dim(&self) -> usize {
        2 * self.fock_cutoff
    }

    pub fn index(&self, spin: Spin, n: usize) -> usize {
        debug_assert!(n < self.fock_cutoff);
        spin.index() * self.fock_cutoff + n
    }

    pub(crate) fn check_same(&self, other: &HilbertLayout) -> Result<()> {
        if self != other {
            return Err(Error::LayoutMismatch {
                left: self.fock_cutoff,
                right: other.fock_cutoff,
            });
        }
        Ok(())
    }
}

impl Default for HilbertLayout {
    fn default() -> Self {
        Self {
            fock_cutoff: DEFAULT_FOCK_CUTOFF,
        }
    }
}

impl TryFrom<usize> for HilbertLayout {
    type Error = Error;
    fn try_from(value: usize) -> Result<Self> {
        HilbertLayout::new(value)
    }
}

impl From<HilbertLayout> for usize {
    fn from(layout: HilbertLayout) -> usize {
        layout.fock_cutoff
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }
}

/// A dense operator on the composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    layout: HilbertLayout,
    matrix: CMatrix,
}

impl Operator {
    pub fn from_matrix(layout: HilbertLayout, matrix: CMatrix) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.shape() != (d, d) {
            return Err(Error::param(
                "matrix",
                format!("expected {d}x{d}, got {:?}", matrix.shape()),
            ));
        }
        Ok(Self { layout, matrix })
    }

    pub fn zeros(layout: HilbertLayout) -> Self {
        let d = layout.total_dim();
        Self {
            layout,
            matrix: CMatrix::zeros(d, d),
        }
    }

    pub fn identity(layout: HilbertLayout) -> Self {
        let d = layout.total_dim();
        Self {
            layout,
            matrix: CMatrix::identity(d, d),
        }
    }

    /// Embeds `spin ⊗ fock`; `spin` is 2x2 and `fock` is cutoff x cutoff.
    pub fn tensor(layout: HilbertLayout, spin: &CMatrix, fock: &CMatrix) -> Result<Self> {
        let n = layout.fock_cutoff();
        if spin.shape() != (2, 2) || fock.shape() != (n, n) {
            return Err(Error::param("tensor", "factor shapes do not match layout"));
        }
        Ok(Self {
            layout,
            matrix: kron(spin, fock),
        })
    }

    pub fn spin_only(layout: HilbertLayout, spin: &CMatrix) -> Result<Self> {
        let n = layout.fock_cutoff();
        Self::tensor(layout, spin, &CMatrix::identity(n, n))
    }

    pub fn fock_only(layout: HilbertLayout, fock: &CMatrix) -> Result<Self> {
        Self::tensor(layout, &CMatrix::identity(2, 2), fock)
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            layout: self.layout,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> Self {
        Self {
            layout: self.layout,
            matrix: &self.matrix * c.into(),
        }
    }

    pub fn compose(&self, rhs: &Operator) -> Result<Self> {
        self.layout.check_same(&rhs.layout)?;
        Ok(Self {
            layout: self.layout,
            matrix: gemm(&self.matrix, &rhs.matrix),
        })
    }

    pub fn commutator(&self, rhs: &Operator) -> Result<Self> {
        Ok(&self.compose(rhs)? - &rhs.compose(self)?)
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }

    /// max|M - M†|
    pub fn hermiticity_deviation(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= 1e-12 * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// max|U†U - 1|
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim();
        max_abs_diff(
            &gemm(&self.matrix.adjoint(), &self.matrix),
            &CMatrix::identity(d, d),
        )
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_deviation() <= 1e-10
    }

    pub fn expectation(&self, state: &PureState) -> Complex64 {
        state.amplitudes().dotc(&self.apply(state.amplitudes()))
    }

    /// ⟨bra|O|ket⟩ between basis states.
    pub fn element(&self, bra: (Spin, usize), ket: (Spin, usize)) -> Complex64 {
        let l = self.layout;
        self.matrix[(l.index(bra.0, bra.1), l.index(ket.0, ket.1))]
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.layout, rhs.layout, "layout mismatch in operator sum");
        Operator {
            layout: self.layout,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(
            self.layout, rhs.layout,
            "layout mismatch in operator difference"
        );
        Operator {
            layout: self.layout,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.compose(rhs)
            .expect("layout mismatch in operator product")
    }
}

pub fn expm(op: &Operator) -> Result<Operator> {
    Ok(Operator {
        layout: op.layout,
        matrix: expm_matrix(&op.matrix)?,
    })
}

/// Fock-factor matrices of size `cutoff x cutoff`.
pub mod fock {
    use super::linalg::{CMatrix, ONE};
    use num_complex::Complex64;

    pub fn annihilation(cutoff: usize) -> CMatrix {
        let mut a = CMatrix::zeros(cutoff, cutoff);
        for n in 1..cutoff {
            a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        a
    }

    pub fn creation(cutoff: usize) -> CMatrix {
        annihilation(cutoff).adjoint()
    }

    pub fn number(cutoff: usize) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_fn(cutoff, |n, _| ONE * n as f64))
    }
}

/// 2x2 spin matrices in the (↑, ↓) basis.
pub mod spin {
    use super::linalg::{CMatrix, I, ONE, ZERO};

    pub fn raising() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
    }

    pub fn lowering() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }
}

/// The operator alphabet, every entry embedded in the composite space.
#[derive(Debug, Clone)]
pub struct ElementaryOps {
    pub a: Operator,
    pub a_dag: Operator,
    pub number: Operator,
    pub sigma_plus: Operator,
    pub sigma_minus: Operator,
    pub sigma_z: Operator,
    pub sigma_x: Operator,
    pub identity: Operator,
}

impl ElementaryOps {
    pub fn new(layout: HilbertLayout) -> Self {
        let n = layout.fock_cutoff();
        let embed_f = |m: CMatrix| Operator::fock_only(layout, &m).expect("fock shape");
        let embed_s = |m: CMatrix| Operator::spin_only(layout, &m).expect("spin shape");
        Self {
            a: embed_f(fock::annihilation(n)),
            a_dag: embed_f(fock::creation(n)),
            number: embed_f(fock::number(n)),
            sigma_plus: embed_s(spin::raising()),
            sigma_minus: embed_s(spin::lowering()),
            sigma_z: embed_s(spin::z()),
            sigma_x: embed_s(spin::x()),
            identity: Operator::identity(layout),
        }
    }

    pub fn layout(&self) -> HilbertLayout {
        self.identity.layout()
    }

    pub fn table(&self) -> [(&'static str, &Operator); 8] {
        [
            ("a", &self.a),
            ("a_dag", &self.a_dag),
            ("n", &self.number),
            ("sigma_plus", &self.sigma_plus),
            ("sigma_minus", &self.sigma_minus),
            ("sigma_z", &self.sigma_z),
            ("sigma_x", &self.sigma_x),
            ("identity", &self.identity),
        ]
    }

    /// σ₊a
    pub fn raise_absorb(&self) -> Operator {
        &self.sigma_plus * &self.a
    }

    /// σ₋a†
    pub fn lower_emit(&self) -> Operator {
        &self.sigma_minus * &self.a_dag
    }

    /// n̂ + c·1
    pub fn number_plus(&self, c: f64) -> Operator {
        &self.number + &self.identity.scale(c)
    }
}

pub fn build_elementary_ops(layout: HilbertLayout) -> ElementaryOps {
    ElementaryOps::new(layout)
}
