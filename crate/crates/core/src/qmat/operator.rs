use alloc::vec;
use alloc::vec::Vec;

use super::{hermitian_eigendecompose, ComplexMatrix, QmatError};
use crate::C64;

/// Square operator arithmetic shared by [`ComplexMatrix`] and
/// [`Mat2`](super::Mat2).
///
/// Entries are row-major; implementors may assume both operands have the
/// same dimension.
pub trait Operator: Clone + Send + Sync + 'static {
    fn dim(&self) -> usize;
    fn zeros(dim: usize) -> Self;
    fn identity(dim: usize) -> Self;
    fn entries(&self) -> &[C64];
    fn entries_mut(&mut self) -> &mut [C64];
    fn matmul(&self, rhs: &Self) -> Self;
    fn adjoint(&self) -> Self;

    /// `(M + M†)/2`.
    fn hermitize(&self) -> Self;

    /// Smallest eigenvalue of a Hermitian operator.
    fn min_eigenvalue(&self) -> Result<f64, QmatError>;

    /// Replaces negative eigenvalues of a Hermitian operator by zero.
    fn clamp_negative(&self) -> Result<Self, QmatError>;

    fn from_matrix(m: &ComplexMatrix) -> Option<Self>;
    fn to_matrix(&self) -> ComplexMatrix;

    fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.entries()[i * d + i]).sum()
    }

    /// `Tr[self · rhs]`.
    fn trace_product(&self, rhs: &Self) -> C64 {
        let d = self.dim();
        let (a, b) = (self.entries(), rhs.entries());
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for k in 0..d {
                acc += a[i * d + k] * b[k * d + i];
            }
        }
        acc
    }

    /// `self += s · x`.
    fn axpy(&mut self, s: C64, x: &Self) {
        for (a, b) in self.entries_mut().iter_mut().zip(x.entries()) {
            *a += s * b;
        }
    }

    fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        for z in out.entries_mut() {
            *z *= s;
        }
        out
    }

    fn scaled_real(&self, s: f64) -> Self {
        let mut out = self.clone();
        for z in out.entries_mut() {
            *z *= s;
        }
        out
    }

    fn plus(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(C64::new(1.0, 0.0), rhs);
        out
    }

    /// `A ρ A†`.
    fn sandwich(&self, rho: &Self) -> Self {
        self.matmul(rho).matmul(&self.adjoint())
    }
}

impl Operator for ComplexMatrix {
    fn dim(&self) -> usize {
        ComplexMatrix::dim(self)
    }

    fn zeros(dim: usize) -> Self {
        ComplexMatrix::zeros(dim)
    }

    fn identity(dim: usize) -> Self {
        ComplexMatrix::identity(dim)
    }

    fn entries(&self) -> &[C64] {
        self.as_slice()
    }

    fn entries_mut(&mut self) -> &mut [C64] {
        self.as_mut_slice()
    }

    fn matmul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn adjoint(&self) -> Self {
        ComplexMatrix::adjoint(self)
    }

    fn hermitize(&self) -> Self {
        self.hermitian_part()
    }

    fn min_eigenvalue(&self) -> Result<f64, QmatError> {
        Ok(hermitian_eigendecompose(self)?.min_eigenvalue())
    }

    fn clamp_negative(&self) -> Result<Self, QmatError> {
        let spectrum = hermitian_eigendecompose(self)?;
        Ok(spectrum.reconstruct_with(|l| l.max(0.0)))
    }

    fn from_matrix(m: &ComplexMatrix) -> Option<Self> {
        Some(m.clone())
    }

    fn to_matrix(&self) -> ComplexMatrix {
        self.clone()
    }
}

/// A linear map on operators, stored as a `d² × d²` matrix acting on
/// row-major vectorised operators.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    dim: usize,
    data: Vec<C64>,
}

impl SuperOperator {
    pub fn identity(dim: usize) -> Self {
        let n = dim * dim;
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = C64::new(1.0, 0.0);
        }
        Self { dim, data }
    }

    /// Builds the matrix of `f` by applying it to every matrix unit `|i⟩⟨j|`.
    pub fn from_map(dim: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let n = dim * dim;
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for col in 0..n {
            let mut unit = ComplexMatrix::zeros(dim);
            unit.as_mut_slice()[col] = C64::new(1.0, 0.0);
            let image = f(&unit);
            for (row, z) in image.as_slice().iter().enumerate() {
                data[row * n + col] = *z;
            }
        }
        Self { dim, data }
    }

    /// Operator dimension `d` (the matrix itself is `d² × d²`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Side length `d²` of the underlying matrix.
    pub fn size(&self) -> usize {
        self.dim * self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn apply<O: Operator>(&self, rho: &O) -> O {
        let n = self.size();
        let x = rho.entries();
        let mut out = O::zeros(self.dim);
        let y = out.entries_mut();
        for (row, yr) in y.iter_mut().enumerate() {
            let line = &self.data[row * n..(row + 1) * n];
            let mut acc = C64::new(0.0, 0.0);
            for (a, b) in line.iter().zip(x) {
                acc += a * b;
            }
            *yr = acc;
        }
        out
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.size();
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        Self { dim: self.dim, data }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn plus_identity(&self) -> Self {
        let n = self.size();
        let mut out = self.clone();
        for i in 0..n {
            out.data[i * n + i] += C64::new(1.0, 0.0);
        }
        out
    }
}
