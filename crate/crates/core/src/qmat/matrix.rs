use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use super::QmatError;
use crate::C64;

/// Square complex matrix stored row-major.
///
/// Arithmetic operators panic on a dimension mismatch, like slice indexing
/// does; the `try_*` methods report [`QmatError::DimensionMismatch`] instead.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from `dim²` row-major entries.
    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Result<Self, QmatError> {
        if data.len() != dim * dim {
            return Err(QmatError::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// `|ψ⟩⟨φ|`.
    pub fn outer(psi: &[C64], phi: &[C64]) -> Result<Self, QmatError> {
        if psi.len() != phi.len() {
            return Err(QmatError::DimensionMismatch {
                expected: psi.len(),
                found: phi.len(),
            });
        }
        let dim = psi.len();
        let mut data = Vec::with_capacity(dim * dim);
        for a in psi {
            for b in phi {
                data.push(a * b.conj());
            }
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// `Tr[self · rhs]` without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> C64 {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let d = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for k in 0..d {
                acc += self.data[i * d + k] * rhs.data[k * d + i];
            }
        }
        acc
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self, QmatError> {
        self.check_dim(rhs)?;
        Ok(self + rhs)
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self, QmatError> {
        self.check_dim(rhs)?;
        Ok(self - rhs)
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self, QmatError> {
        self.check_dim(rhs)?;
        Ok(self * rhs)
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, rhs: &Self) -> Result<Self, QmatError> {
        self.check_dim(rhs)?;
        Ok(&(self * rhs) - &(rhs * self))
    }

    /// `⟨A⟩ = Tr[A ρ]` for an arbitrary matrix `rho`.
    pub fn expectation(&self, rho: &Self) -> Result<C64, QmatError> {
        self.check_dim(rho)?;
        Ok(self.trace_product(rho))
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (da, db) = (self.dim, rhs.dim);
        let d = da * db;
        let mut out = Self::zeros(d);
        for i in 0..da {
            for j in 0..da {
                let a = self.data[i * da + j];
                for k in 0..db {
                    for l in 0..db {
                        out.data[(i * db + k) * d + (j * db + l)] = a * rhs.data[k * db + l];
                    }
                }
            }
        }
        out
    }

    /// Traces out the second factor of a `dim_s · dim_a` operator.
    pub fn partial_trace_second(&self, dim_s: usize, dim_a: usize) -> Result<Self, QmatError> {
        if dim_s * dim_a != self.dim {
            return Err(QmatError::DimensionMismatch {
                expected: self.dim,
                found: dim_s * dim_a,
            });
        }
        let mut out = Self::zeros(dim_s);
        for i in 0..dim_s {
            for j in 0..dim_s {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..dim_a {
                    acc += self.data[(i * dim_a + k) * self.dim + (j * dim_a + k)];
                }
                out.data[i * dim_s + j] = acc;
            }
        }
        Ok(out)
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let d = self.dim;
        let mut out = self.clone();
        for i in 0..d {
            out.data[i * d + i] = C64::new(self.data[i * d + i].re, 0.0);
            for j in (i + 1)..d {
                let z = (self.data[i * d + j] + self.data[j * d + i].conj()) * 0.5;
                out.data[i * d + j] = z;
                out.data[j * d + i] = z.conj();
            }
        }
        out
    }

    /// Max-norm `max |M_ij - M_ji*|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[i * d + j] - self.data[j * d + i].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Max-norm distance; panics on a dimension mismatch.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&rhs.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    fn check_dim(&self, rhs: &Self) -> Result<(), QmatError> {
        if self.dim != rhs.dim {
            return Err(QmatError::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let d = self.dim;
        let mut out = ComplexMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        out
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            f.write_str("  [")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            f.write_str(" ]\n")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::pauli;
    use super::*;

    #[test]
    fn pauli_commutator() {
        let comm = pauli::sigma_x().commutator(&pauli::sigma_y()).unwrap();
        let expected = pauli::sigma_z().scale(C64::new(0.0, 2.0));
        assert!(comm.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn sigma_z_on_ground_is_minus_one() {
        let ground = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let ev = pauli::sigma_z().expectation(&ground).unwrap();
        assert_eq!(ev, C64::new(-1.0, 0.0));
    }

    #[test]
    fn excitation_number_expectation() {
        // σ+σ- = (σz + 1)/2 so ⟨σ+σ-⟩ = (1 + z)/2
        let n = &pauli::sigma_plus() * &pauli::sigma_minus();
        for &z in &[-1.0f64, -0.3, 0.0, 0.5, 1.0] {
            let rho = crate::qmat::DensityMatrix::from_bloch(0.1 * (1.0 - z * z).sqrt(), 0.0, z)
                .unwrap();
            let ev = n.expectation(rho.as_matrix()).unwrap();
            assert!((ev.re - (1.0 + z) / 2.0).abs() < 1e-15);
            assert!(ev.im.abs() < 1e-15);
        }
    }

    #[test]
    fn mismatched_dimensions_are_reported() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(3);
        assert_eq!(
            a.try_mul(&b),
            Err(QmatError::DimensionMismatch { expected: 2, found: 3 })
        );
        assert!(a.commutator(&b).is_err());
        assert!(a.expectation(&b).is_err());
        assert!(ComplexMatrix::from_row_major(2, vec![C64::new(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let a = pauli::sigma_x();
        let b = ComplexMatrix::from_real_diagonal(&[0.25, 0.75]);
        let ab = a.kron(&b);
        let reduced = ab.partial_trace_second(2, 2).unwrap();
        assert!(reduced.max_abs_diff(&a) < 1e-15);
    }
}
