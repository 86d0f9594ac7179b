//! Energy, ergotropy, passive states and daemonic ergotropy of a bipartite
//! state whose ancilla is measured with a POVM.
//!
//! Energies are measured against a Hamiltonian whose ground energy is zero,
//! so `0 ≤ ergotropy(ρ) ≤ energy(ρ)`.

use alloc::vec::Vec;

use thiserror::Error;

use crate::qmat::{
    hermitian_eigendecompose, purity, ComplexMatrix, DensityMatrix, QmatError, Spectrum,
    TOLERANCES,
};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErgotropyError {
    #[error(transparent)]
    Matrix(#[from] QmatError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Hamiltonian ground energy {ground:e} is not zero")]
    GroundEnergyNotZero { ground: f64 },
    #[error("POVM elements sum to identity only within {deviation:e}")]
    IncompletePovm { deviation: f64 },
    #[error("POVM element {label} is not positive (smallest eigenvalue {min_eigenvalue:e})")]
    NonPositivePovmElement { label: usize, min_eigenvalue: f64 },
}

/// A Hamiltonian shifted so that its smallest eigenvalue is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpec {
    h0: ComplexMatrix,
    /// Eigenvalues ascending, eigenvectors as columns.
    levels: Vec<f64>,
    basis: ComplexMatrix,
    omega0: f64,
}

impl EnergySpec {
    /// Accepts a Hermitian `h0` whose smallest eigenvalue is zero within 1e-10.
    pub fn new(h0: ComplexMatrix) -> Result<Self, ErgotropyError> {
        let spectrum = hermitian_eigendecompose(&h0)?;
        let ground = spectrum.min_eigenvalue();
        if ground.abs() > 1e-10 {
            return Err(ErgotropyError::GroundEnergyNotZero { ground });
        }
        Ok(Self::from_spectrum(h0, spectrum))
    }

    /// Shifts an arbitrary Hermitian operator so that its ground energy is zero.
    pub fn shifted(h: ComplexMatrix) -> Result<Self, ErgotropyError> {
        let ground = hermitian_eigendecompose(&h)?.min_eigenvalue();
        let h0 = &h - &ComplexMatrix::identity(h.dim()).scale_real(ground);
        Self::new(h0)
    }

    /// `H0 = (ω0/2)(σz + 1) = diag(0, ω0)`.
    pub fn qubit(omega0: f64) -> Self {
        let h0 = ComplexMatrix::from_real_diagonal(&[0.0, omega0]);
        let spectrum = hermitian_eigendecompose(&h0).expect("diagonal");
        Self::from_spectrum(h0, spectrum)
    }

    fn from_spectrum(h0: ComplexMatrix, spectrum: Spectrum) -> Self {
        let d = spectrum.dim();
        let mut levels = Vec::with_capacity(d);
        let mut basis = ComplexMatrix::zeros(d);
        for (k, src) in (0..d).rev().enumerate() {
            levels.push(spectrum.eigenvalues[src]);
            for i in 0..d {
                basis[(i, k)] = spectrum.eigenvectors[(i, src)];
            }
        }
        let omega0 = levels.last().copied().unwrap_or(0.0);
        Self {
            h0,
            levels,
            basis,
            omega0,
        }
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.h0
    }

    /// Largest energy level; the gap for a qubit.
    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Energy levels, ascending.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    fn check(&self, rho: &DensityMatrix) -> Result<(), ErgotropyError> {
        if rho.dim() != self.dim() {
            return Err(ErgotropyError::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        Ok(())
    }
}

/// `E(ρ) = Tr[H0 ρ]`.
pub fn energy(rho: &DensityMatrix, h: &EnergySpec) -> Result<f64, ErgotropyError> {
    h.check(rho)?;
    Ok(h.h0.trace_product(rho.as_matrix()).re)
}

/// Result of the spectral ergotropy computation.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgotropyDecomposition {
    pub value: f64,
    pub passive_state: DensityMatrix,
    /// Unitary `U` with `U ρ U† = passive_state`.
    pub extraction_unitary: ComplexMatrix,
}

/// Ergotropy from the spectra of `ρ` and `H0`.
///
/// The passive state puts the populations of `ρ` (descending) on the
/// energy levels (ascending); the extraction unitary maps each eigenvector
/// of `ρ` onto the matching energy eigenvector.
pub fn ergotropy_spectral(
    rho: &DensityMatrix,
    h: &EnergySpec,
) -> Result<ErgotropyDecomposition, ErgotropyError> {
    h.check(rho)?;
    let d = rho.dim();
    let spectrum = hermitian_eigendecompose(rho.as_matrix())?;

    let mut passive = ComplexMatrix::zeros(d);
    let mut unitary = ComplexMatrix::zeros(d);
    let mut passive_energy = 0.0;
    for k in 0..d {
        let population = spectrum.eigenvalues[k];
        passive_energy += population * h.levels[k];
        for i in 0..d {
            let e_ik = h.basis[(i, k)];
            for j in 0..d {
                passive[(i, j)] += e_ik * h.basis[(j, k)].conj() * population;
                unitary[(i, j)] += e_ik * spectrum.eigenvectors[(j, k)].conj();
            }
        }
    }
    let value = energy(rho, h)? - passive_energy;
    Ok(ErgotropyDecomposition {
        value,
        passive_state: DensityMatrix::new_unchecked(passive.hermitian_part()),
        extraction_unitary: unitary,
    })
}

/// Qubit ergotropy from energy and purity: `E + (ω0/2)(√(2μ - 1) - 1)`.
pub fn ergotropy_qubit_closed_form(
    rho: &DensityMatrix,
    h: &EnergySpec,
) -> Result<f64, ErgotropyError> {
    if rho.dim() != 2 {
        return Err(ErgotropyError::DimensionMismatch {
            expected: 2,
            found: rho.dim(),
        });
    }
    h.check(rho)?;
    let e = energy(rho, h)?;
    Ok(qubit_closed_form(e, purity(rho), h.omega0))
}

#[inline]
pub(crate) fn qubit_closed_form(energy: f64, purity: f64, omega0: f64) -> f64 {
    // 2μ - 1 = r² can dip below zero by rounding on the maximally mixed state
    let r2 = (2.0 * purity - 1.0).max(0.0);
    energy + 0.5 * omega0 * (libm::sqrt(r2) - 1.0)
}

/// Ergotropy value, using the closed form for qubits and the spectral
/// route otherwise.
pub fn ergotropy(rho: &DensityMatrix, h: &EnergySpec) -> Result<f64, ErgotropyError> {
    if rho.dim() == 2 {
        ergotropy_qubit_closed_form(rho, h)
    } else {
        Ok(ergotropy_spectral(rho, h)?.value)
    }
}

/// One element `Π_a` of a POVM on the ancilla.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmElement {
    pub matrix: ComplexMatrix,
    pub label: usize,
}

impl PovmElement {
    pub fn new(matrix: ComplexMatrix, label: usize) -> Self {
        Self { matrix, label }
    }

    /// Rank-one projector `|φ⟩⟨φ|` onto a normalised vector.
    pub fn projector(phi: &[C64], label: usize) -> Result<Self, ErgotropyError> {
        Ok(Self {
            matrix: DensityMatrix::pure(phi)?.into_matrix(),
            label,
        })
    }
}

/// Projective measurement in the basis given by the columns of `basis`.
pub fn projective_povm(basis: &ComplexMatrix) -> Result<Vec<PovmElement>, ErgotropyError> {
    (0..basis.dim())
        .map(|k| PovmElement::projector(&basis.column(k), k))
        .collect()
}

/// Checks positivity of each element and completeness of the set.
pub fn validate_povm(povm: &[PovmElement]) -> Result<usize, ErgotropyError> {
    let dim = povm.first().map(|e| e.matrix.dim()).unwrap_or(0);
    let mut sum = ComplexMatrix::zeros(dim);
    for element in povm {
        if element.matrix.dim() != dim {
            return Err(ErgotropyError::DimensionMismatch {
                expected: dim,
                found: element.matrix.dim(),
            });
        }
        let min_eigenvalue = hermitian_eigendecompose(&element.matrix)?.min_eigenvalue();
        if min_eigenvalue < -TOLERANCES.positivity {
            return Err(ErgotropyError::NonPositivePovmElement {
                label: element.label,
                min_eigenvalue,
            });
        }
        sum = &sum + &element.matrix;
    }
    let deviation = if dim == 0 {
        1.0
    } else {
        sum.max_abs_diff(&ComplexMatrix::identity(dim))
    };
    if deviation > TOLERANCES.povm {
        return Err(ErgotropyError::IncompletePovm { deviation });
    }
    Ok(dim)
}

/// Outcome of one POVM element.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeBranch {
    pub label: usize,
    pub probability: f64,
    /// `None` when the probability is below the negligible threshold; such
    /// outcomes contribute zero.
    pub conditional_state: Option<DensityMatrix>,
    pub conditional_ergotropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaemonicDecomposition {
    pub value: f64,
    pub outcomes: Vec<OutcomeBranch>,
}

/// Average ergotropy of the system states conditioned on each ancilla outcome.
///
/// `rho_sa` lives on `S ⊗ A` with the system factor first; the system
/// dimension is taken from `h`, the ancilla dimension from the POVM.
pub fn daemonic_ergotropy_bipartite(
    rho_sa: &DensityMatrix,
    povm: &[PovmElement],
    h: &EnergySpec,
) -> Result<DaemonicDecomposition, ErgotropyError> {
    let dim_a = validate_povm(povm)?;
    let dim_s = h.dim();
    if dim_s * dim_a != rho_sa.dim() {
        return Err(ErgotropyError::DimensionMismatch {
            expected: rho_sa.dim(),
            found: dim_s * dim_a,
        });
    }
    let id_s = ComplexMatrix::identity(dim_s);
    let mut value = 0.0;
    let mut outcomes = Vec::with_capacity(povm.len());
    for element in povm {
        let lifted = id_s.kron(&element.matrix);
        let unnormalised = (rho_sa.as_matrix() * &lifted)
            .partial_trace_second(dim_s, dim_a)?
            .hermitian_part();
        let probability = unnormalised.trace().re;
        if probability < TOLERANCES.negligible_probability {
            outcomes.push(OutcomeBranch {
                label: element.label,
                probability,
                conditional_state: None,
                conditional_ergotropy: 0.0,
            });
            continue;
        }
        let conditional = DensityMatrix::new(unnormalised.scale_real(1.0 / probability))?;
        let conditional_ergotropy = ergotropy_spectral(&conditional, h)?.value;
        value += probability * conditional_ergotropy;
        outcomes.push(OutcomeBranch {
            label: element.label,
            probability,
            conditional_state: Some(conditional),
            conditional_ergotropy,
        });
    }
    Ok(DaemonicDecomposition { value, outcomes })
}
