use alloc::vec::Vec;

use super::{hermitian_eigendecompose, ComplexMatrix, Operator, QmatError, TOLERANCES};
use crate::C64;

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity against [`TOLERANCES`].
    pub fn new(m: ComplexMatrix) -> Result<Self, QmatError> {
        let deviation = m.hermiticity_deviation();
        if deviation > TOLERANCES.hermitian {
            return Err(QmatError::NonHermitianInput { deviation });
        }
        let trace = m.trace().re;
        if (trace - 1.0).abs() > TOLERANCES.trace {
            return Err(QmatError::NotUnitTrace { trace });
        }
        let min_eigenvalue = Operator::min_eigenvalue(&m)?;
        if min_eigenvalue < -TOLERANCES.positivity {
            return Err(QmatError::NotPositive { min_eigenvalue });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix already known to satisfy the invariants.
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalised) state vector.
    pub fn pure(psi: &[C64]) -> Result<Self, QmatError> {
        let norm = libm::sqrt(psi.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if norm == 0.0 {
            return Err(QmatError::ZeroVector);
        }
        let unit: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self(ComplexMatrix::outer(&unit, &unit)?))
    }

    /// `|k⟩⟨k|`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self(m)
    }

    /// `|0⟩⟨0|`, the lowest basis state.
    pub fn ground(dim: usize) -> Self {
        Self::basis(dim, 0)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    /// Qubit state `(𝟙 + xσx + yσy + zσz)/2`.
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self, QmatError> {
        let r2 = x * x + y * y + z * z;
        if r2 > 1.0 + 2.0 * TOLERANCES.positivity {
            return Err(QmatError::NotPositive {
                min_eigenvalue: 0.5 * (1.0 - libm::sqrt(r2)),
            });
        }
        let m = ComplexMatrix::from_row_major(
            2,
            alloc::vec![
                C64::new(0.5 * (1.0 - z), 0.0),
                C64::new(0.5 * x, 0.5 * y),
                C64::new(0.5 * x, -0.5 * y),
                C64::new(0.5 * (1.0 + z), 0.0),
            ],
        )?;
        Ok(Self(m))
    }

    /// Bloch vector `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)` of a qubit state.
    pub fn bloch(&self) -> Option<[f64; 3]> {
        (self.dim() == 2).then(|| {
            let m = &self.0;
            [
                2.0 * m[(0, 1)].re,
                2.0 * m[(0, 1)].im,
                m[(1, 1)].re - m[(0, 0)].re,
            ]
        })
    }

    /// Projects a nearly-valid matrix back onto the density matrices:
    /// Hermitian part, negative eigenvalues clamped to zero, unit trace.
    ///
    /// Fails with [`QmatError::NotPositive`] when an eigenvalue lies below
    /// `-TOLERANCES.repair`.
    pub fn repair<O: Operator>(m: &O) -> Result<O, QmatError> {
        let h = m.hermitize();
        let trace = h.trace().re;
        if !(trace > 0.0) || !trace.is_finite() {
            return Err(QmatError::NotUnitTrace { trace });
        }
        let min_eigenvalue = h.min_eigenvalue()? / trace;
        if min_eigenvalue < -TOLERANCES.repair {
            return Err(QmatError::NotPositive { min_eigenvalue });
        }
        let h = if min_eigenvalue < 0.0 {
            h.clamp_negative()?
        } else {
            h
        };
        let trace = h.trace().re;
        Ok(if trace == 1.0 {
            h
        } else {
            h.scaled_real(1.0 / trace)
        })
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigendecompose(&self.0)
            .map(|s| s.eigenvalues)
            .expect("density matrices are Hermitian")
    }

    /// Trace distance `½‖ρ - σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64, QmatError> {
        let diff = self.0.try_sub(&other.0)?;
        let spectrum = hermitian_eigendecompose(&diff.hermitian_part())?;
        Ok(0.5 * spectrum.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
    }
}

impl AsRef<ComplexMatrix> for DensityMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::super::Mat2;
    use super::*;

    #[test]
    fn validation() {
        assert!(DensityMatrix::new(ComplexMatrix::identity(2)).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[1.2, -0.2])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.3, 0.7])).is_ok());
        assert!(DensityMatrix::from_bloch(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn bloch_round_trip() {
        let rho = DensityMatrix::from_bloch(0.1, -0.4, 0.2).unwrap();
        let b = rho.bloch().unwrap();
        assert!((b[0] - 0.1).abs() < 1e-15);
        assert!((b[1] + 0.4).abs() < 1e-15);
        assert!((b[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn repair_clamps_small_negativity_and_rejects_large() {
        let slightly = ComplexMatrix::from_real_diagonal(&[1.0 + 5e-7, -5e-7]);
        let fixed = DensityMatrix::repair(&slightly).unwrap();
        assert!(DensityMatrix::new(fixed.clone()).is_ok());
        let fast = DensityMatrix::repair(&Mat2::from_matrix(&slightly).unwrap()).unwrap();
        assert!(fast.to_matrix().max_abs_diff(&fixed) < 1e-15);

        let broken = ComplexMatrix::from_real_diagonal(&[1.01, -0.01]);
        assert!(matches!(
            DensityMatrix::repair(&broken),
            Err(QmatError::NotPositive { .. })
        ));
    }

    #[test]
    fn repair_is_identity_on_valid_states() {
        let rho = DensityMatrix::from_bloch(0.3, 0.1, -0.5).unwrap();
        let fixed = DensityMatrix::repair(rho.as_matrix()).unwrap();
        assert_eq!(&fixed, rho.as_matrix());
    }

    #[test]
    fn trace_distance_of_orthogonal_states() {
        let a = DensityMatrix::basis(2, 0);
        let b = DensityMatrix::basis(2, 1);
        assert!((a.trace_distance(&b).unwrap() - 1.0).abs() < 1e-15);
    }
}
