//! Dense complex linear algebra for small Hilbert spaces.
//!
//! [`ComplexMatrix`] is the general dynamically-sized operator,
//! [`Mat2`] is a stack-allocated 2×2 used on the trajectory hot path, and
//! both implement [`Operator`] so the stochastic steppers are written once.

mod density;
mod eigen;
mod mat2;
mod matrix;
mod operator;
pub mod pauli;

pub use density::DensityMatrix;
pub use eigen::{hermitian_eigendecompose, Spectrum};
pub use mat2::Mat2;
pub use matrix::ComplexMatrix;
pub use operator::{Operator, SuperOperator};

use thiserror::Error;

/// Numerical tolerances used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Max-norm of `M - M†` for a density matrix.
    pub hermitian: f64,
    /// `|Tr M - 1|` for a density matrix.
    pub trace: f64,
    /// Most negative eigenvalue accepted for a density matrix.
    pub positivity: f64,
    /// Hermiticity accepted by the eigensolver.
    pub eigen_input: f64,
    /// Orthonormality and reconstruction error of a [`Spectrum`].
    pub spectrum: f64,
    /// POVM completeness.
    pub povm: f64,
    /// Outcome probabilities below this are treated as zero.
    pub negligible_probability: f64,
    /// Negative eigenvalues down to this are clamped by the repair step;
    /// anything below is a numerical failure.
    pub repair: f64,
    /// Jacobi sweep cap.
    pub max_sweeps: usize,
}

pub const TOLERANCES: Tolerances = Tolerances {
    hermitian: 1e-10,
    trace: 1e-10,
    positivity: 1e-9,
    eigen_input: 1e-8,
    spectrum: 1e-8,
    povm: 1e-8,
    negligible_probability: 1e-12,
    repair: 1e-6,
    max_sweeps: 100,
};

/// Largest dimension accepted by the eigensolver.
pub const MAX_EIGEN_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QmatError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input is not Hermitian (max |M - M†| = {deviation:e})")]
    NonHermitianInput { deviation: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("dimension {dim} exceeds the supported maximum {max}")]
    UnsupportedDimension { dim: usize, max: usize },
    #[error("trace {trace} differs from one")]
    NotUnitTrace { trace: f64 },
    #[error("smallest eigenvalue {min_eigenvalue:e} is negative")]
    NotPositive { min_eigenvalue: f64 },
    #[error("state vector has zero norm")]
    ZeroVector,
}

/// Purity `Tr[ρ²]`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.as_matrix().trace_product(rho.as_matrix()).re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn purity_examples() {
        assert!((purity(&DensityMatrix::ground(2)) - 1.0).abs() < 1e-15);
        assert!((purity(&DensityMatrix::maximally_mixed(2)) - 0.5).abs() < 1e-15);
        // qubit purity is (1 + r²)/2
        let rho = DensityMatrix::from_bloch(0.0, 0.0, 0.5).unwrap();
        assert!((purity(&rho) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn purity_matches_spectrum() {
        let rho = DensityMatrix::from_bloch(0.3, -0.2, 0.4).unwrap();
        let spec = hermitian_eigendecompose(rho.as_matrix()).unwrap();
        let sum_sq: f64 = spec.eigenvalues.iter().map(|l| l * l).sum();
        assert!((purity(&rho) - sum_sq).abs() < 1e-10);
    }
}
