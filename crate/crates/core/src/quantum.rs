//! Qubit registers, density matrices, partial traces and entropies.
//!
//! Basis convention: `σ^z|0⟩ = +|0⟩`, and the basis state `|q1 q2 q3⟩` has
//! index `4·q1 + 2·q2 + q3`. Qubit 1 is the most significant bit.

use std::fmt;

use thiserror::Error;

use crate::linalg::{hermitian_eigenvalues, ComplexMatrix, LinalgError, C64};

pub const BASIS_CONVENTION: &str =
    "computational basis, sigma_z|0> = +|0>, index(|q1 q2 q3>) = 4*q1 + 2*q2 + q3";

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("density matrices must be 2x2, 4x4 or 8x8, got {rows}x{cols}")]
    InvalidDimension { rows: usize, cols: usize },
    #[error("state is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("state trace is {0}, expected 1")]
    TraceNotUnity(f64),
    #[error("state has negative eigenvalue {0:e}")]
    NotPositive(f64),
    #[error("invalid subsystem selection: {0}")]
    InvalidSubsystem(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One-based qubit label (`Qubit::Q1` is the cold qubit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct Qubit(u8);

impl Qubit {
    pub const Q1: Qubit = Qubit(1);
    pub const Q2: Qubit = Qubit(2);
    pub const Q3: Qubit = Qubit(3);
    pub const ALL: [Qubit; 3] = [Qubit::Q1, Qubit::Q2, Qubit::Q3];

    pub fn new(label: u8) -> Option<Self> {
        (1..=3).contains(&label).then_some(Qubit(label))
    }

    pub fn label(self) -> u8 {
        self.0
    }

    /// Zero-based slot in the tensor product.
    pub fn slot(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub(crate) fn from_slot(slot: usize) -> Self {
        Qubit(slot as u8 + 1)
    }
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Validated density matrix on one, two or three qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self, StateError> {
        if !m.is_square() || ![2, 4, 8].contains(&m.rows()) {
            return Err(StateError::InvalidDimension { rows: m.rows(), cols: m.cols() });
        }
        let defect = m.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(StateError::NotHermitian(defect));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(StateError::TraceNotUnity(tr.re));
        }
        let min = hermitian_eigenvalues(&m)?[0];
        if min < -POSITIVITY_TOL {
            return Err(StateError::NotPositive(min));
        }
        Ok(Self { m })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_matrix_unchecked(m: ComplexMatrix) -> Self {
        debug_assert!(m.is_square() && [2, 4, 8].contains(&m.rows()));
        Self { m }
    }

    /// Pure state `|ψ⟩⟨ψ|`; the vector is normalised first.
    pub fn pure(psi: &[C64]) -> Result<Self, StateError> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let unit: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&unit, &unit))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self, StateError> {
        Self::new(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.m).expect("validated state is Hermitian")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Diagonal entries (populations) in the computational basis.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    pub fn kron(&self, other: &DensityMatrix) -> Result<DensityMatrix, StateError> {
        let m = self.m.kron(&other.m);
        if m.rows() > 8 {
            return Err(StateError::InvalidDimension { rows: m.rows(), cols: m.cols() });
        }
        Ok(Self { m })
    }
}

/// Bit of the qubit at tensor `slot` (0 = most significant) in an `n`-qubit index.
#[inline]
pub(crate) fn bit(index: usize, slot: usize, n: usize) -> usize {
    (index >> (n - 1 - slot)) & 1
}

/// Compress `index` onto the listed slots (kept in order).
#[inline]
fn project_index(index: usize, slots: &[usize], n: usize) -> usize {
    slots.iter().fold(0, |acc, &s| (acc << 1) | bit(index, s, n))
}

fn checked_slots(keep: &[Qubit], n: usize) -> Result<Vec<usize>, StateError> {
    if keep.is_empty() {
        return Err(StateError::InvalidSubsystem("cannot trace out every qubit".into()));
    }
    let mut slots: Vec<usize> = keep.iter().map(|q| q.slot()).collect();
    slots.sort_unstable();
    slots.dedup();
    if slots.len() != keep.len() {
        return Err(StateError::InvalidSubsystem("duplicate qubit in selection".into()));
    }
    if slots.iter().any(|&s| s >= n) {
        return Err(StateError::InvalidSubsystem(format!("qubit out of range for a {n}-qubit state")));
    }
    if slots.len() == n {
        return Err(StateError::InvalidSubsystem("keeping every qubit is not a partial trace".into()));
    }
    Ok(slots)
}

/// Partial trace of an arbitrary `2^n × 2^n` matrix onto the given (sorted,
/// distinct) tensor slots.
pub(crate) fn partial_trace_slots(m: &ComplexMatrix, n: usize, keep: &[usize]) -> ComplexMatrix {
    let dim = 1usize << n;
    let traced: Vec<usize> = (0..n).filter(|s| !keep.contains(s)).collect();
    let sub = 1usize << keep.len();
    let mut out = ComplexMatrix::zeros(sub, sub);
    for a in 0..dim {
        let ta = project_index(a, &traced, n);
        let ka = project_index(a, keep, n);
        for b in 0..dim {
            if project_index(b, &traced, n) != ta {
                continue;
            }
            let z = m[(a, b)];
            if z != C64::new(0.0, 0.0) {
                out[(ka, project_index(b, keep, n))] += z;
            }
        }
    }
    out
}

/// Reduced state on the kept qubits, in the same ordering convention.
pub fn partial_trace(rho: &DensityMatrix, keep: &[Qubit]) -> Result<DensityMatrix, StateError> {
    let n = rho.num_qubits();
    let slots = checked_slots(keep, n)?;
    Ok(DensityMatrix::from_matrix_unchecked(partial_trace_slots(&rho.m, n, &slots)))
}

/// Transpose on the tensor factor of `party`.
pub fn partial_transpose(rho: &DensityMatrix, party: Qubit) -> ComplexMatrix {
    partial_transpose_matrix(rho.matrix(), rho.num_qubits(), party.slot())
}

pub(crate) fn partial_transpose_matrix(m: &ComplexMatrix, n: usize, slot: usize) -> ComplexMatrix {
    let dim = 1usize << n;
    let mask = 1usize << (n - 1 - slot);
    ComplexMatrix::from_fn(dim, dim, |a, b| {
        // swap the `slot` bits of row and column indices
        let (ba, bb) = (a & mask, b & mask);
        m[((a & !mask) | bb, (b & !mask) | ba)]
    })
}

/// Single-qubit operator acting on `slot` of an `n`-qubit register.
pub fn embed(op: &ComplexMatrix, slot: usize, n: usize) -> ComplexMatrix {
    assert!(op.rows() == 2 && op.cols() == 2 && slot < n);
    let mut out = ComplexMatrix::identity(1);
    for s in 0..n {
        let factor = if s == slot { op.clone() } else { ComplexMatrix::identity(2) };
        out = out.kron(&factor);
    }
    out
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_major(2, 2, vec![C64::new(0., 0.), C64::new(1., 0.), C64::new(1., 0.), C64::new(0., 0.)])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_major(2, 2, vec![C64::new(0., 0.), C64::new(0., -1.), C64::new(0., 1.), C64::new(0., 0.)])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
}

/// `−Σ λ log₂ λ` over the given spectrum, with `0·log 0 = 0`.
pub(crate) fn shannon_bits(spectrum: impl IntoIterator<Item = f64>) -> f64 {
    spectrum
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_bits(rho.eigenvalues())
}
