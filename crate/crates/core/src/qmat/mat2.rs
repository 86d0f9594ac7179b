use super::{ComplexMatrix, Operator, QmatError};
use crate::C64;

/// Stack-allocated 2×2 complex matrix, row-major `[m00, m01, m10, m11]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [C64; 4]);

impl Mat2 {
    /// Half-trace and Bloch-like components `(x, y, z)` of a Hermitian
    /// matrix in the convention of [`pauli`](super::pauli).
    #[inline]
    fn hermitian_parts(&self) -> (f64, f64, f64, f64) {
        let [a, b, _, d] = self.0;
        let half_trace = 0.5 * (a.re + d.re);
        (half_trace, b.re, b.im, 0.5 * (d.re - a.re))
    }
}

impl Operator for Mat2 {
    #[inline]
    fn dim(&self) -> usize {
        2
    }

    #[inline]
    fn zeros(dim: usize) -> Self {
        debug_assert_eq!(dim, 2);
        Mat2([C64::new(0.0, 0.0); 4])
    }

    #[inline]
    fn identity(dim: usize) -> Self {
        debug_assert_eq!(dim, 2);
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        Mat2([l, o, o, l])
    }

    #[inline]
    fn entries(&self) -> &[C64] {
        &self.0
    }

    #[inline]
    fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }

    #[inline]
    fn matmul(&self, rhs: &Self) -> Self {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = rhs.0;
        Mat2([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }

    #[inline]
    fn adjoint(&self) -> Self {
        let [a, b, c, d] = self.0;
        Mat2([a.conj(), c.conj(), b.conj(), d.conj()])
    }

    #[inline]
    fn hermitize(&self) -> Self {
        let [a, b, c, d] = self.0;
        let off = (b + c.conj()) * 0.5;
        Mat2([C64::new(a.re, 0.0), off, off.conj(), C64::new(d.re, 0.0)])
    }

    #[inline]
    fn trace(&self) -> C64 {
        self.0[0] + self.0[3]
    }

    #[inline]
    fn trace_product(&self, rhs: &Self) -> C64 {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = rhs.0;
        a * e + b * g + c * f + d * h
    }

    #[inline]
    fn axpy(&mut self, s: C64, x: &Self) {
        for k in 0..4 {
            self.0[k] += s * x.0[k];
        }
    }

    #[inline]
    fn sandwich(&self, rho: &Self) -> Self {
        self.matmul(rho).matmul(&self.adjoint())
    }

    fn min_eigenvalue(&self) -> Result<f64, QmatError> {
        let (m, x, y, z) = self.hermitian_parts();
        Ok(m - libm::sqrt(x * x + y * y + z * z))
    }

    fn clamp_negative(&self) -> Result<Self, QmatError> {
        let (m, x, y, z) = self.hermitian_parts();
        let r = libm::sqrt(x * x + y * y + z * z);
        if m - r >= 0.0 {
            return Ok(*self);
        }
        if m + r <= 0.0 {
            return Ok(Mat2::zeros(2));
        }
        // keep the upper eigenvalue m + r on the same eigenvector
        let k = 0.5 * (m + r) / r;
        let (x, y, z) = (k * x, k * y, k * z);
        let m = 0.5 * (m + r);
        Ok(Mat2([
            C64::new(m - z, 0.0),
            C64::new(x, y),
            C64::new(x, -y),
            C64::new(m + z, 0.0),
        ]))
    }

    fn from_matrix(m: &ComplexMatrix) -> Option<Self> {
        (m.dim() == 2).then(|| {
            let s = m.as_slice();
            Mat2([s[0], s[1], s[2], s[3]])
        })
    }

    fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_row_major(2, self.0.to_vec()).expect("2x2")
    }
}
