//! The driven qubit battery: `H0 = (ω0/2)(σz + 1)`, resonant drive `α σx`
//! in the interaction picture and spontaneous emission `c = √κ σ-`.
//!
//! Energy and ergotropy are always measured against `H0`. The frame
//! rotation generated by `H0` commutes with `σz`, so neither changes
//! between the lab frame and the interaction picture.

use libm::sqrt;
use thiserror::Error;

use crate::ergotropy::EnergySpec;
use crate::lindblad::LindbladModel;
use crate::qmat::{pauli, ComplexMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BatteryError {
    #[error("omega0 must be positive and finite, got {0}")]
    InvalidOmega0(f64),
    #[error("alpha must be non-negative and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("kappa must be positive and finite, got {0}")]
    InvalidKappa(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryModel {
    omega0: f64,
    alpha: f64,
    kappa: f64,
}

impl BatteryModel {
    pub fn new(omega0: f64, alpha: f64, kappa: f64) -> Result<Self, BatteryError> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(BatteryError::InvalidOmega0(omega0));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(BatteryError::InvalidAlpha(alpha));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(BatteryError::InvalidKappa(kappa));
        }
        Ok(Self {
            omega0,
            alpha,
            kappa,
        })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self, BatteryError> {
        Self::new(self.omega0, alpha, self.kappa)
    }

    pub fn h0(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[0.0, self.omega0])
    }

    pub fn energy_spec(&self) -> EnergySpec {
        EnergySpec::qubit(self.omega0)
    }

    /// `Hs = α σx`.
    pub fn drive(&self) -> ComplexMatrix {
        pauli::sigma_x().scale_real(self.alpha)
    }

    /// `c = √κ σ-`.
    pub fn jump(&self) -> ComplexMatrix {
        pauli::sigma_minus().scale_real(sqrt(self.kappa))
    }

    /// Interaction-picture generator `-iα[σx, ·] + κ D[σ-]`.
    pub fn to_lindblad(&self) -> LindbladModel {
        LindbladModel::new(self.drive(), self.jump()).expect("battery operators are valid")
    }

    /// `E_ss = ω0 · 4α² / (8α² + κ²)`.
    pub fn steady_energy_analytic(&self) -> f64 {
        let (a2, k2) = (self.alpha * self.alpha, self.kappa * self.kappa);
        self.omega0 * 4.0 * a2 / (8.0 * a2 + k2)
    }

    /// `𝓔_ss = ω0 · (κ/2)(√(16α² + κ²) - κ) / (8α² + κ²)`.
    pub fn steady_ergotropy_analytic(&self) -> f64 {
        let (a2, k) = (self.alpha * self.alpha, self.kappa);
        self.omega0 * 0.5 * k * (sqrt(16.0 * a2 + k * k) - k) / (8.0 * a2 + k * k)
    }
}

/// Drive-to-emission ratio `α/κ = √((1 + √2)/8)` maximising the
/// steady-state ergotropy.
pub fn peak_ergotropy_ratio() -> f64 {
    sqrt((1.0 + core::f64::consts::SQRT_2) / 8.0)
}

/// Maximum steady-state ergotropy `ω0(√2 - 1)/2`.
pub fn peak_ergotropy(omega0: f64) -> f64 {
    omega0 * (core::f64::consts::SQRT_2 - 1.0) / 2.0
}
