//! Random states, unitaries and measurements for property checks.

use daemonic_core::qmat::{ComplexMatrix, DensityMatrix};
use daemonic_core::trajectories::NoiseSource;
use daemonic_core::C64;

pub fn gaussian_vector<N: NoiseSource>(rng: &mut N, dim: usize) -> Vec<C64> {
    (0..dim)
        .map(|_| C64::new(rng.standard_normal(), rng.standard_normal()))
        .collect()
}

fn normalise(v: &mut [C64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
}

/// Haar-random pure state.
pub fn pure_state<N: NoiseSource>(rng: &mut N, dim: usize) -> Vec<C64> {
    let mut v = gaussian_vector(rng, dim);
    normalise(&mut v);
    v
}

/// Random mixed state `G G† / tr(G G†)` from a square Ginibre matrix.
pub fn mixed_state<N: NoiseSource>(rng: &mut N, dim: usize) -> DensityMatrix {
    let g = ComplexMatrix::from_row_major(dim, gaussian_vector(rng, dim * dim)).unwrap();
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    DensityMatrix::new(w.scale_real(1.0 / tr)).unwrap()
}

/// Haar-random unitary: Gram–Schmidt on the columns of a Ginibre matrix.
pub fn unitary<N: NoiseSource>(rng: &mut N, dim: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v = gaussian_vector(rng, dim);
        for u in &cols {
            let overlap: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            v.iter_mut().zip(u).for_each(|(x, a)| *x -= overlap * a);
        }
        normalise(&mut v);
        cols.push(v);
    }
    let mut data = vec![C64::new(0.0, 0.0); dim * dim];
    for (j, c) in cols.iter().enumerate() {
        for (i, z) in c.iter().enumerate() {
            data[i * dim + j] = *z;
        }
    }
    ComplexMatrix::from_row_major(dim, data).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use daemonic_core::trajectories::TrajectoryRng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = TrajectoryRng::new(1, 0);
        for d in 2..5 {
            let u = unitary(&mut rng, d);
            let id = &u.adjoint() * &u;
            assert!(id.max_abs_diff(&ComplexMatrix::identity(d)) < 1e-12);
        }
    }

    #[test]
    fn mixed_state_is_valid() {
        let mut rng = TrajectoryRng::new(2, 0);
        let rho = mixed_state(&mut rng, 3);
        assert!((rho.as_matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(rho.eigenvalues().iter().all(|&l| l > -1e-12));
    }
}
