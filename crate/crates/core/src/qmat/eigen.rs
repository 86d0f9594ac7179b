use alloc::vec::Vec;

use super::{ComplexMatrix, QmatError, MAX_EIGEN_DIM, TOLERANCES};
use crate::C64;

/// Eigen-decomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted descending; column `k` of `eigenvectors` belongs to
/// `eigenvalues[k]`. Ties keep the order in which the solver produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    /// `V diag(f(λ)) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let d = self.dim();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(d);
        for k in 0..d {
            let lambda = f(self.eigenvalues[k]);
            if lambda == 0.0 {
                continue;
            }
            for i in 0..d {
                let vik = v[(i, k)] * lambda;
                for j in 0..d {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// 2×2 inputs take a closed-form path.
pub fn hermitian_eigendecompose(m: &ComplexMatrix) -> Result<Spectrum, QmatError> {
    let d = m.dim();
    if d > MAX_EIGEN_DIM {
        return Err(QmatError::UnsupportedDimension {
            dim: d,
            max: MAX_EIGEN_DIM,
        });
    }
    let deviation = m.hermiticity_deviation();
    if deviation > TOLERANCES.eigen_input {
        return Err(QmatError::NonHermitianInput { deviation });
    }
    let h = m.hermitian_part();
    match d {
        0 => Ok(Spectrum {
            eigenvalues: Vec::new(),
            eigenvectors: ComplexMatrix::zeros(0),
        }),
        1 => Ok(Spectrum {
            eigenvalues: alloc::vec![h[(0, 0)].re],
            eigenvectors: ComplexMatrix::identity(1),
        }),
        2 => Ok(eigen_2x2(&h)),
        _ => jacobi(h),
    }
}

fn eigen_2x2(h: &ComplexMatrix) -> Spectrum {
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)];
    let mean = 0.5 * (a + d);
    let half_gap = 0.5 * (a - d);
    let r = libm::hypot(half_gap, b.norm());
    let (hi, lo) = (mean + r, mean - r);

    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let (p, q) = if b == zero {
        if a >= d {
            (one, zero)
        } else {
            (zero, one)
        }
    } else if a >= d {
        // (λ+ - d, b*) avoids cancellation when a ≥ d
        let v0 = C64::new(half_gap + r, 0.0);
        let norm = libm::hypot(v0.re, b.norm());
        (v0 / norm, b.conj() / norm)
    } else {
        let v1 = C64::new(r - half_gap, 0.0);
        let norm = libm::hypot(v1.re, b.norm());
        (b / norm, v1 / norm)
    };
    // second column is the orthogonal complement (-q*, p*)
    let eigenvectors =
        ComplexMatrix::from_row_major(2, alloc::vec![p, -q.conj(), q, p.conj()]).expect("2x2");
    Spectrum {
        eigenvalues: alloc::vec![hi, lo],
        eigenvectors,
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let d = a.dim();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    libm::sqrt(acc)
}

fn jacobi(mut a: ComplexMatrix) -> Result<Spectrum, QmatError> {
    let d = a.dim();
    let mut v = ComplexMatrix::identity(d);
    let frob = libm::sqrt(a.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>());
    let threshold = 4.0 * d as f64 * f64::EPSILON * frob;

    let mut converged = frob == 0.0;
    let mut sweep = 0;
    while !converged {
        if off_diagonal_norm(&a) <= threshold {
            converged = true;
            break;
        }
        if sweep == TOLERANCES.max_sweeps {
            break;
        }
        sweep += 1;
        for p in 0..d - 1 {
            for q in (p + 1)..d {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(QmatError::NoConvergence {
            sweeps: TOLERANCES.max_sweeps,
        });
    }

    let raw: Vec<f64> = (0..d).map(|i| a[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..d).collect();
    // stable sort: ties keep the original index order
    order.sort_by(|&i, &j| raw[j].partial_cmp(&raw[i]).unwrap_or(core::cmp::Ordering::Equal));
    let mut vectors = ComplexMatrix::zeros(d);
    for (k, &src) in order.iter().enumerate() {
        for i in 0..d {
            vectors[(i, k)] = v[(i, src)];
        }
    }
    Ok(Spectrum {
        eigenvalues: order.iter().map(|&i| raw[i]).collect(),
        eigenvectors: vectors,
    })
}

/// One complex Jacobi rotation annihilating `a[p][q]`: `A ← G†AG`, `V ← VG`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let g = a[(p, q)];
    let abs_g = g.norm();
    if abs_g == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if app + 100.0 * abs_g == app && aqq + 100.0 * abs_g == aqq {
        a[(p, q)] = C64::new(0.0, 0.0);
        a[(q, p)] = C64::new(0.0, 0.0);
        return;
    }
    let phase = g / abs_g;
    let theta = (aqq - app) / (2.0 * abs_g);
    let t = if theta == 0.0 {
        1.0
    } else {
        let t = 1.0 / (theta.abs() + libm::sqrt(1.0 + theta * theta));
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / libm::sqrt(1.0 + t * t);
    let s = t * c;
    let ce = phase.conj() * c;
    let se = phase.conj() * s;

    let d = a.dim();
    for k in 0..d {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * se;
        a[(k, q)] = akp * s + akq * ce;
    }
    for k in 0..d {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * se.conj();
        a[(q, k)] = apk * s + aqk * ce.conj();
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    for k in 0..d {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * se;
        v[(k, q)] = vkp * s + vkq * ce;
    }
}
