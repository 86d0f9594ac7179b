//! Unconditional Lindblad evolution with a single jump operator,
//! `dρ/dt = -i[H, ρ] + D[c]ρ` with `D[c]ρ = cρc† - (c†cρ + ρc†c)/2`.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::qmat::{ComplexMatrix, DensityMatrix, Mat2, Operator, QmatError, SuperOperator};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LindbladError {
    #[error(transparent)]
    Matrix(#[from] QmatError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Hamiltonian is not Hermitian (max |H - H†| = {deviation:e})")]
    NonHermitianHamiltonian { deviation: f64 },
    #[error("positivity lost at step {step} (smallest eigenvalue {min_eigenvalue:e}); reduce dt")]
    StepTooLarge { step: usize, min_eigenvalue: f64 },
    #[error("steady state is not unique: Liouvillian kernel has dimension {kernel_dim}")]
    DegenerateSteadyState { kernel_dim: usize },
    #[error("invalid time grid: {0}")]
    InvalidGrid(&'static str),
}

/// Hamiltonian `H` (with ħ = 1) and jump operator `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    hamiltonian: ComplexMatrix,
    jump: ComplexMatrix,
}

impl LindbladModel {
    pub fn new(hamiltonian: ComplexMatrix, jump: ComplexMatrix) -> Result<Self, LindbladError> {
        if hamiltonian.dim() != jump.dim() {
            return Err(LindbladError::DimensionMismatch {
                expected: hamiltonian.dim(),
                found: jump.dim(),
            });
        }
        let deviation = hamiltonian.hermiticity_deviation();
        if deviation > 1e-10 {
            return Err(LindbladError::NonHermitianHamiltonian { deviation });
        }
        Ok(Self {
            hamiltonian: hamiltonian.hermitian_part(),
            jump,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn jump(&self) -> &ComplexMatrix {
        &self.jump
    }

    /// `-i[H, ρ] + w·D[c]ρ`, with `w` the weight of the dissipator.
    pub(crate) fn rhs_weighted(&self, rho: &ComplexMatrix, jump_weight: f64) -> ComplexMatrix {
        let h = &self.hamiltonian;
        let c = &self.jump;
        let cd = c.adjoint();
        let cdc = &cd * c;
        let minus_i = C64::new(0.0, -1.0);
        let mut out = (&(h * rho) - &(rho * h)).scale(minus_i);
        if jump_weight != 0.0 {
            let jump = &(&(c * rho) * &cd);
            let anti = &(&cdc * rho) + &(rho * &cdc);
            let dissipator = jump - &anti.scale_real(0.5);
            out = &out + &dissipator.scale_real(jump_weight);
        }
        out
    }

    /// Matrix of the generator `-i[H, ·] + w·D[c]` on vectorised operators.
    pub fn generator(&self, jump_weight: f64) -> SuperOperator {
        SuperOperator::from_map(self.dim(), |m| self.rhs_weighted(m, jump_weight))
    }

    /// The Liouvillian `-i[H, ·] + D[c]`.
    pub fn liouvillian(&self) -> SuperOperator {
        self.generator(1.0)
    }
}

/// Uniform grid `t_k = t0 + k·dt`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, steps: usize) -> Result<Self, LindbladError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(LindbladError::InvalidGrid("dt must be positive and finite"));
        }
        if !t0.is_finite() {
            return Err(LindbladError::InvalidGrid("t0 must be finite"));
        }
        if steps == 0 {
            return Err(LindbladError::InvalidGrid("steps must be positive"));
        }
        Ok(Self { t0, dt, steps })
    }

    /// Grid from zero covering `horizon` with the step closest to `dt`
    /// that divides it evenly.
    pub fn with_horizon(dt: f64, horizon: f64) -> Result<Self, LindbladError> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(LindbladError::InvalidGrid("horizon must be positive and finite"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(LindbladError::InvalidGrid("dt must be positive and finite"));
        }
        let steps = libm::round(horizon / dt).max(1.0) as usize;
        Self::new(0.0, horizon / steps as f64, steps)
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    #[inline]
    pub fn time(&self, step: usize) -> f64 {
        self.t0 + self.dt * step as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }
}

/// `-i[H, ρ] + D[c]ρ`.
pub fn lindblad_rhs(
    model: &LindbladModel,
    rho: &DensityMatrix,
) -> Result<ComplexMatrix, LindbladError> {
    if rho.dim() != model.dim() {
        return Err(LindbladError::DimensionMismatch {
            expected: model.dim(),
            found: rho.dim(),
        });
    }
    Ok(model.rhs_weighted(rho.as_matrix(), 1.0))
}

/// One classical Runge–Kutta step of a linear generator, as a
/// superoperator: `Σ_{k≤4} (dt·G)^k / k!` evaluated in Horner form.
pub fn rk4_propagator(generator: &SuperOperator, dt: f64) -> SuperOperator {
    let hg = generator.scaled(dt);
    let mut acc = hg.scaled(0.25).plus_identity();
    for k in [3.0, 2.0, 1.0] {
        acc = hg.scaled(1.0 / k).compose(&acc).plus_identity();
    }
    acc
}

/// Applies `propagator` and repairs the result; `step` is used for error
/// reporting only.
#[inline]
pub(crate) fn propagate_step<O: Operator>(
    propagator: &SuperOperator,
    rho: &O,
    step: usize,
) -> Result<O, LindbladError> {
    DensityMatrix::repair(&propagator.apply(rho)).map_err(|e| match e {
        QmatError::NotPositive { min_eigenvalue } => LindbladError::StepTooLarge {
            step,
            min_eigenvalue,
        },
        other => LindbladError::Matrix(other),
    })
}

fn evolve_generic<O: Operator>(
    propagator: &SuperOperator,
    rho0: &ComplexMatrix,
    grid: &TimeGrid,
    record_every: usize,
) -> Result<Vec<DensityMatrix>, LindbladError> {
    let mut rho = O::from_matrix(rho0).expect("dimension checked by caller");
    let mut out = Vec::with_capacity(grid.steps / record_every + 1);
    out.push(DensityMatrix::new_unchecked(rho0.clone()));
    for step in 1..=grid.steps {
        rho = propagate_step(propagator, &rho, step)?;
        if step % record_every == 0 {
            out.push(DensityMatrix::new_unchecked(rho.to_matrix()));
        }
    }
    Ok(out)
}

/// Integrates the master equation on `grid`, returning every
/// `record_every`-th state starting with `rho0`.
pub fn evolve_unconditional_recorded(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    record_every: usize,
) -> Result<Vec<DensityMatrix>, LindbladError> {
    if rho0.dim() != model.dim() {
        return Err(LindbladError::DimensionMismatch {
            expected: model.dim(),
            found: rho0.dim(),
        });
    }
    let record_every = record_every.max(1);
    let propagator = rk4_propagator(&model.liouvillian(), grid.dt);
    if model.dim() == 2 {
        evolve_generic::<Mat2>(&propagator, rho0.as_matrix(), grid, record_every)
    } else {
        evolve_generic::<ComplexMatrix>(&propagator, rho0.as_matrix(), grid, record_every)
    }
}

/// Integrates the master equation with classical Runge–Kutta, returning
/// the `steps + 1` states on the grid.
///
/// Each state is Hermitised and renormalised; a negative eigenvalue below
/// `-1e-6` aborts with [`LindbladError::StepTooLarge`].
pub fn evolve_unconditional(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<Vec<DensityMatrix>, LindbladError> {
    evolve_unconditional_recorded(model, rho0, grid, 1)
}

/// Stationary state of the master equation.
///
/// Qubits solve the 3×3 Bloch system, larger models use
/// [`steady_state_kernel`].
pub fn steady_state(model: &LindbladModel) -> Result<DensityMatrix, LindbladError> {
    if model.dim() == 2 {
        steady_state_bloch(model)
    } else {
        steady_state_kernel(model)
    }
}

/// Stationary state from the null space of the `d² × d²` Liouvillian,
/// found by Gaussian elimination with complete pivoting.
pub fn steady_state_kernel(model: &LindbladModel) -> Result<DensityMatrix, LindbladError> {
    let d = model.dim();
    let liouvillian = model.liouvillian();
    let null = null_vector(liouvillian.as_slice(), d * d, 1e-8)?;
    let m = ComplexMatrix::from_row_major(d, null)?;
    finish_steady_state(m)
}

fn finish_steady_state(m: ComplexMatrix) -> Result<DensityMatrix, LindbladError> {
    let trace = m.trace();
    if trace.norm() == 0.0 {
        return Err(LindbladError::DegenerateSteadyState { kernel_dim: 0 });
    }
    let rho = m.scale(trace.inv()).hermitian_part();
    Ok(DensityMatrix::new(rho)?)
}

/// Unique null vector of the `n × n` matrix `a`, or the kernel dimension.
fn null_vector(a: &[C64], n: usize, rank_tol: f64) -> Result<Vec<C64>, LindbladError> {
    let mut m = a.to_vec();
    let mut cols: Vec<usize> = (0..n).collect();
    let scale = m.iter().fold(0.0f64, |s, z| s.max(z.norm()));
    if scale == 0.0 {
        return Err(LindbladError::DegenerateSteadyState { kernel_dim: n });
    }
    let mut rank = 0;
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, 0.0);
        for i in k..n {
            for j in k..n {
                let v = m[i * n + j].norm();
                if v > best {
                    (pi, pj, best) = (i, j, v);
                }
            }
        }
        if best <= rank_tol * scale {
            break;
        }
        rank += 1;
        if pi != k {
            for j in 0..n {
                m.swap(k * n + j, pi * n + j);
            }
        }
        if pj != k {
            for i in 0..n {
                m.swap(i * n + k, i * n + pj);
            }
            cols.swap(k, pj);
        }
        let pivot = m[k * n + k];
        for i in (k + 1)..n {
            let f = m[i * n + k] / pivot;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in k..n {
                let v = m[k * n + j];
                m[i * n + j] -= f * v;
            }
        }
    }
    let kernel_dim = n - rank;
    if kernel_dim != 1 {
        return Err(LindbladError::DegenerateSteadyState { kernel_dim });
    }
    // back-substitute with the single free variable set to one
    let mut x = vec![C64::new(0.0, 0.0); n];
    x[n - 1] = C64::new(1.0, 0.0);
    for k in (0..rank).rev() {
        let mut acc = C64::new(0.0, 0.0);
        for j in (k + 1)..n {
            acc += m[k * n + j] * x[j];
        }
        x[k] = -acc / m[k * n + k];
    }
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (k, &col) in cols.iter().enumerate() {
        out[col] = x[k];
    }
    Ok(out)
}

/// Affine Bloch-vector dynamics `dr/dt = A r + b` of a qubit model.
pub fn bloch_generator(model: &LindbladModel) -> Option<([[f64; 3]; 3], [f64; 3])> {
    if model.dim() != 2 {
        return None;
    }
    let paulis = [
        crate::qmat::pauli::sigma_x(),
        crate::qmat::pauli::sigma_y(),
        crate::qmat::pauli::sigma_z(),
    ];
    let identity = ComplexMatrix::identity(2);
    let drift = model.rhs_weighted(&identity, 1.0);
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for i in 0..3 {
        b[i] = 0.5 * paulis[i].trace_product(&drift).re;
        for j in 0..3 {
            let image = model.rhs_weighted(&paulis[j], 1.0);
            a[i][j] = 0.5 * paulis[i].trace_product(&image).re;
        }
    }
    Some((a, b))
}

fn steady_state_bloch(model: &LindbladModel) -> Result<DensityMatrix, LindbladError> {
    let (a, b) = bloch_generator(model).expect("qubit model");
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    let r = solve3(a, [-b[0], -b[1], -b[2]], 1e-8 * scale)
        .ok_or(LindbladError::DegenerateSteadyState { kernel_dim: 2 })?;
    Ok(DensityMatrix::from_bloch(r[0], r[1], r[2])?)
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3], tol: f64) -> Option<[f64; 3]> {
    for k in 0..3 {
        let p = (k..3).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if !(a[p][k].abs() > tol) {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in (k + 1)..3 {
            let f = a[i][k] / a[k][k];
            for j in k..3 {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = [0.0; 3];
    for k in (0..3).rev() {
        let mut acc = b[k];
        for j in (k + 1)..3 {
            acc -= a[k][j] * x[j];
        }
        x[k] = acc / a[k][k];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::pauli;

    fn decay(kappa: f64) -> LindbladModel {
        LindbladModel::new(
            ComplexMatrix::zeros(2),
            pauli::sigma_minus().scale_real(kappa.sqrt()),
        )
        .unwrap()
    }

    fn driven(alpha: f64, kappa: f64) -> LindbladModel {
        LindbladModel::new(
            pauli::sigma_x().scale_real(alpha),
            pauli::sigma_minus().scale_real(kappa.sqrt()),
        )
        .unwrap()
    }

    #[test]
    fn ground_state_is_stationary_without_drive() {
        let rhs = lindblad_rhs(&decay(1.3), &DensityMatrix::ground(2)).unwrap();
        assert_eq!(rhs.max_abs(), 0.0);
    }

    #[test]
    fn excited_state_decays() {
        let kappa = 0.7;
        let rhs = lindblad_rhs(&decay(kappa), &DensityMatrix::basis(2, 1)).unwrap();
        let expected = ComplexMatrix::from_real_diagonal(&[kappa, -kappa]);
        assert!(rhs.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn rhs_is_traceless_hermitian() {
        let rhs = lindblad_rhs(&driven(1.0, 1.0), &DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(rhs.trace().norm() < 1e-12);
        assert!(rhs.hermiticity_deviation() < 1e-12);
    }

    #[test]
    fn rhs_matches_finite_difference_of_integrator() {
        let model = driven(1.0, 1.0);
        let rho0 = DensityMatrix::maximally_mixed(2);
        let dt = 1e-5;
        let grid = TimeGrid::new(0.0, dt, 1).unwrap();
        let states = evolve_unconditional(&model, &rho0, &grid).unwrap();
        let fd = (&states[1].as_matrix().clone() - rho0.as_matrix()).scale_real(1.0 / dt);
        let rhs = lindblad_rhs(&model, &rho0).unwrap();
        assert!(fd.max_abs_diff(&rhs) < 10.0 * dt);
    }

    #[test]
    fn excited_population_decays_exponentially() {
        let kappa = 1.0;
        let grid = TimeGrid::new(0.0, 1e-3, 3000).unwrap();
        let states =
            evolve_unconditional(&decay(kappa), &DensityMatrix::basis(2, 1), &grid).unwrap();
        for (k, rho) in states.iter().enumerate().step_by(250) {
            let t = grid.time(k);
            let excited = rho.as_matrix()[(1, 1)].re;
            assert!((excited - (-kappa * t).exp()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn steady_states() {
        let rho = steady_state(&decay(2.0)).unwrap();
        assert!(rho.as_matrix().max_abs_diff(DensityMatrix::ground(2).as_matrix()) < 1e-12);
        let rho = steady_state_kernel(&decay(2.0)).unwrap();
        assert!(rho.as_matrix().max_abs_diff(DensityMatrix::ground(2).as_matrix()) < 1e-12);
    }

    #[test]
    fn kernel_and_bloch_paths_agree() {
        for &(alpha, kappa) in &[(1.0, 1.0), (0.3, 2.0), (5.0, 0.5)] {
            let model = driven(alpha, kappa);
            let a = steady_state(&model).unwrap();
            let b = steady_state_kernel(&model).unwrap();
            assert!(a.as_matrix().max_abs_diff(b.as_matrix()) < 1e-12);
            assert!(lindblad_rhs(&model, &b).unwrap().max_abs() <= 1e-10);
        }
    }

    #[test]
    fn closed_system_has_degenerate_steady_state() {
        let model =
            LindbladModel::new(pauli::sigma_z(), ComplexMatrix::zeros(2)).unwrap();
        assert!(matches!(
            steady_state_kernel(&model),
            Err(LindbladError::DegenerateSteadyState { kernel_dim: 2 })
        ));
        assert!(matches!(
            steady_state(&model),
            Err(LindbladError::DegenerateSteadyState { .. })
        ));
    }

    #[test]
    fn steady_input_stays_put() {
        let model = driven(0.8, 1.0);
        let ss = steady_state(&model).unwrap();
        let grid = TimeGrid::new(0.0, 1e-3, 2000).unwrap();
        let states = evolve_unconditional(&model, &ss, &grid).unwrap();
        for rho in &states {
            assert!(rho.as_matrix().max_abs_diff(ss.as_matrix()) < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(LindbladModel::new(pauli::sigma_minus(), pauli::sigma_minus()).is_err());
        assert!(LindbladModel::new(ComplexMatrix::zeros(2), ComplexMatrix::zeros(3)).is_err());
        assert!(TimeGrid::new(0.0, 0.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1e-3, 0).is_err());
        let model = decay(1.0);
        assert!(lindblad_rhs(&model, &DensityMatrix::ground(3)).is_err());
    }

    #[test]
    fn large_step_is_reported() {
        // dt far beyond the stability region of RK4 for this rate
        let grid = TimeGrid::new(0.0, 5.0, 3).unwrap();
        let err = evolve_unconditional(&decay(1.0), &DensityMatrix::basis(2, 1), &grid);
        assert!(matches!(err, Err(LindbladError::StepTooLarge { .. })));
    }
}
