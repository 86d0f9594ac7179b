//! Conditional evolution under continuous monitoring of the emitted field.
//!
//! Three unravellings of the master equation are supported: photo-detection
//! (jumps with rate `η⟨c†c⟩`), homodyne detection of the quadrature `c e^{iφ}`
//! and heterodyne detection (two channels `c/√2`, `ic/√2`). Each comes with
//! two integrators:
//!
//! * [`Scheme::MeasurementOperator`] (default) splits a step symmetrically:
//!   half a step of the unmonitored part `-i[H, ·] + (1 - η)D[c]` with the
//!   Runge–Kutta superoperator of the unconditional solver, a Kraus update
//!   for the monitored fraction `η`, then the other half step. Photo-detection
//!   uses the trace-preserving instrument `K0 = exp(-η dt c†c/2)`,
//!   `K1 = c·√((𝟙 - exp(-η dt c†c))/c†c)`, which for `c ∝ σ-` averages to the
//!   exact amplitude-damping channel. At `η = 0` the step is a single full
//!   Runge–Kutta step and reproduces
//!   [`evolve_unconditional`](crate::lindblad::evolve_unconditional) exactly.
//! * [`Scheme::EulerMaruyama`] integrates the stochastic master equation
//!   explicitly.
//!
//! Both schemes consume the same number of draws per step from the noise
//! source (one uniform for photo-detection, one or two standard normals for
//! the diffusive unravellings), so equal seeds give comparable paths.

use alloc::vec::Vec;

use libm::{cos, exp, expm1, log, sin, sqrt};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::ergotropy::{ergotropy, EnergySpec};
use crate::lindblad::{rk4_propagator, LindbladError, LindbladModel, TimeGrid};
use crate::qmat::{
    hermitian_eigendecompose, ComplexMatrix, DensityMatrix, Mat2, Operator, QmatError,
    SuperOperator,
};
use crate::C64;

/// Per-step jump probabilities at or above this abort the step.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;

/// Jump rates `⟨c†c⟩` at or below this are treated as zero.
pub const NULL_JUMP_RATE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnravellingKind {
    PhotoDetection,
    /// Homodyne detection of the quadrature `c e^{iφ} + c† e^{-iφ}`.
    Homodyne { phi: f64 },
    Heterodyne,
}

impl UnravellingKind {
    /// Short name used in file names and tables: `pd`, `hod`, `hed`.
    pub fn short_name(&self) -> &'static str {
        match self {
            UnravellingKind::PhotoDetection => "pd",
            UnravellingKind::Homodyne { .. } => "hod",
            UnravellingKind::Heterodyne => "hed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnravellingSpec {
    kind: UnravellingKind,
    efficiency: f64,
}

impl UnravellingSpec {
    pub fn new(kind: UnravellingKind, efficiency: f64) -> Result<Self, TrajectoryError> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(TrajectoryError::InvalidUnravelling(
                "efficiency must lie in [0, 1]",
            ));
        }
        if let UnravellingKind::Homodyne { phi } = kind {
            if !phi.is_finite() {
                return Err(TrajectoryError::InvalidUnravelling("phase must be finite"));
            }
        }
        Ok(Self { kind, efficiency })
    }

    pub fn photodetection(efficiency: f64) -> Result<Self, TrajectoryError> {
        Self::new(UnravellingKind::PhotoDetection, efficiency)
    }

    pub fn homodyne(phi: f64, efficiency: f64) -> Result<Self, TrajectoryError> {
        Self::new(UnravellingKind::Homodyne { phi }, efficiency)
    }

    pub fn heterodyne(efficiency: f64) -> Result<Self, TrajectoryError> {
        Self::new(UnravellingKind::Heterodyne, efficiency)
    }

    pub fn kind(&self) -> UnravellingKind {
        self.kind
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    EulerMaruyama,
    #[default]
    MeasurementOperator,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error(transparent)]
    Matrix(#[from] QmatError),
    #[error("jump probability {probability} per step is too large; reduce dt")]
    StepTooLarge { probability: f64 },
    #[error("a jump was drawn from a state with vanishing jump rate")]
    NullJumpState,
    #[error("positivity lost (smallest eigenvalue {min_eigenvalue:e}); reduce dt")]
    PositivityLost { min_eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("stepper built for a different unravelling")]
    UnravellingMismatch,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("invalid unravelling: {0}")]
    InvalidUnravelling(&'static str),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: StepError,
    },
    #[error("trajectory setup: {0}")]
    Setup(#[from] StepError),
}

// ---------------------------------------------------------------------------
// Randomness

/// Source of the random draws consumed by the steppers.
pub trait NoiseSource {
    /// Uniform on `[0, 1)`.
    fn uniform(&mut self) -> f64;
    fn standard_normal(&mut self) -> f64;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `salt` into `seed`; used to give related runs independent seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut state = seed ^ splitmix64(&mut salt.clone());
    splitmix64(&mut state)
}

/// Counter-based generator for one trajectory.
///
/// The ChaCha8 key is four splitmix64 outputs seeded by `master_seed` and
/// the stream number is the trajectory index, so draws depend only on
/// `(master_seed, index)`. Uniforms take the top 53 bits of a word.
/// Normals use Box–Muller on two uniforms, `u1 ∈ (0, 1]`:
/// `√(-2 ln u1)·cos(2πu2)` then `√(-2 ln u1)·sin(2πu2)`.
#[derive(Debug, Clone)]
pub struct TrajectoryRng {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl TrajectoryRng {
    pub fn new(master_seed: u64, trajectory_index: u64) -> Self {
        let mut state = master_seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(trajectory_index);
        Self { rng, spare: None }
    }
}

impl NoiseSource for TrajectoryRng {
    #[inline]
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = sqrt(-2.0 * log(u1));
        let theta = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(r * sin(theta));
        r * cos(theta)
    }
}

// ---------------------------------------------------------------------------
// Steppers

/// Measurement result of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Click(bool),
    /// Homodyne photocurrent increment `dy`.
    Current(f64),
    /// Heterodyne photocurrent increments `(dy1, dy2)`.
    Currents(f64, f64),
}

/// Precomputed single-step update for one model, unravelling, `dt` and
/// scheme.
#[derive(Debug, Clone)]
pub struct Stepper<O: Operator> {
    spec: UnravellingSpec,
    scheme: Scheme,
    dt: f64,
    dim: usize,
    /// MO: Runge–Kutta propagator of the unmonitored part over `dt`.
    /// EM: `𝟙 + dt·L` with the full Liouvillian.
    propagator: SuperOperator,
    /// MO: the unmonitored propagator over `dt/2`, applied on both sides
    /// of the measurement update.
    half: SuperOperator,
    jump: O,
    number: O,
    /// Photo-detection instrument: `K0 = exp(-η dt c†c/2)`,
    /// `K1 = c·√((𝟙 - exp(-η dt c†c))/c†c)` and the click effect `K1†K1`.
    no_click: O,
    click: O,
    click_effect: O,
    /// Diffusive channels `L_k`, their quadratures `L_k + L_k†` and the
    /// products `L_j L_k`.
    channels: Vec<O>,
    quadratures: Vec<O>,
    products: Vec<O>,
    /// `𝟙 - (η/2) dt Σ L_k†L_k`.
    kraus_base: O,
}

impl<O: Operator> Stepper<O> {
    pub fn new(
        model: &LindbladModel,
        spec: &UnravellingSpec,
        dt: f64,
        scheme: Scheme,
    ) -> Result<Self, StepError> {
        let dim = model.dim();
        let cast = |m: &ComplexMatrix| {
            O::from_matrix(m).ok_or(StepError::DimensionMismatch {
                expected: dim,
                found: O::zeros(dim).dim(),
            })
        };
        let eta = spec.efficiency;
        let c = model.jump();
        let number_m = &c.adjoint() * c;

        let (propagator, half) = match scheme {
            Scheme::MeasurementOperator => {
                let g = model.generator(1.0 - eta);
                (rk4_propagator(&g, dt), rk4_propagator(&g, 0.5 * dt))
            }
            Scheme::EulerMaruyama => {
                let p = model.liouvillian().scaled(dt).plus_identity();
                (p.clone(), p)
            }
        };

        let largest_rate = hermitian_eigendecompose(&number_m.hermitian_part())?;
        let max_probability = eta * dt * largest_rate.eigenvalues[0];
        if max_probability >= 1.0 {
            return Err(StepError::StepTooLarge {
                probability: max_probability,
            });
        }
        let x = eta * dt;
        let no_click = largest_rate.reconstruct_with(|l| exp(-0.5 * x * l.max(0.0)));
        let click_effect = largest_rate.reconstruct_with(|l| -expm1(-x * l.max(0.0)));
        let click_root = largest_rate.reconstruct_with(|l| {
            let l = l.max(0.0);
            if l * x > 1e-300 {
                sqrt(-expm1(-x * l) / l)
            } else {
                sqrt(x)
            }
        });
        let click = c * &click_root;

        let channel_mats: Vec<ComplexMatrix> = match spec.kind {
            UnravellingKind::PhotoDetection => Vec::new(),
            UnravellingKind::Homodyne { phi } => {
                alloc::vec![c.scale(C64::new(cos(phi), sin(phi)))]
            }
            UnravellingKind::Heterodyne => {
                let s = core::f64::consts::FRAC_1_SQRT_2;
                alloc::vec![c.scale_real(s), c.scale(C64::new(0.0, s))]
            }
        };
        let mut channels = Vec::with_capacity(channel_mats.len());
        let mut quadratures = Vec::with_capacity(channel_mats.len());
        let mut products = Vec::with_capacity(channel_mats.len() * channel_mats.len());
        for l in &channel_mats {
            channels.push(cast(l)?);
            quadratures.push(cast(&(l + &l.adjoint()))?);
            for r in &channel_mats {
                products.push(cast(&(l * r))?);
            }
        }
        let kraus_base = &ComplexMatrix::identity(dim) - &number_m.scale_real(0.5 * eta * dt);

        Ok(Self {
            spec: *spec,
            scheme,
            dt,
            dim,
            propagator,
            half,
            jump: cast(c)?,
            number: cast(&number_m)?,
            no_click: cast(&no_click)?,
            click: cast(&click)?,
            click_effect: cast(&click_effect)?,
            channels,
            quadratures,
            products,
            kraus_base: cast(&kraus_base)?,
        })
    }

    pub fn spec(&self) -> &UnravellingSpec {
        &self.spec
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `rho` by one step of length `dt`.
    pub fn step<N: NoiseSource + ?Sized>(
        &self,
        rho: &O,
        noise: &mut N,
    ) -> Result<(O, Outcome), StepError> {
        match (self.spec.kind, self.scheme) {
            (UnravellingKind::PhotoDetection, Scheme::MeasurementOperator) => {
                self.photodetection_mo(rho, noise)
            }
            (UnravellingKind::PhotoDetection, Scheme::EulerMaruyama) => {
                self.photodetection_em(rho, noise)
            }
            (_, Scheme::MeasurementOperator) => self.diffusive_mo(rho, noise),
            (_, Scheme::EulerMaruyama) => self.diffusive_em(rho, noise),
        }
    }

    /// `η⟨c†c⟩dt`, or zero for a vanishing rate; fails at or above
    /// [`MAX_JUMP_PROBABILITY`].
    fn jump_probability(&self, rho: &O) -> Result<f64, StepError> {
        let rate = self.number.trace_product(rho).re;
        let p = if rate <= NULL_JUMP_RATE {
            0.0
        } else {
            self.spec.efficiency * rate * self.dt
        };
        if p >= MAX_JUMP_PROBABILITY {
            return Err(StepError::StepTooLarge { probability: p });
        }
        Ok(p)
    }

    fn photodetection_mo<N: NoiseSource + ?Sized>(
        &self,
        rho: &O,
        noise: &mut N,
    ) -> Result<(O, Outcome), StepError> {
        let u = noise.uniform();
        if self.spec.efficiency == 0.0 {
            return Ok((repair(&self.propagator.apply(rho))?, Outcome::Click(false)));
        }
        let rho1 = self.half.apply(rho);
        let p = if self.jump_probability(&rho1)? == 0.0 {
            0.0
        } else {
            self.click_effect.trace_product(&rho1).re
        };
        let (rho2, clicked) = if u < p {
            let unnormalised = self.click.sandwich(&rho1);
            if !(unnormalised.trace().re > 0.0) {
                return Err(StepError::NullJumpState);
            }
            (unnormalised, true)
        } else {
            (self.no_click.sandwich(&rho1), false)
        };
        let rho2 = repair(&rho2)?;
        Ok((repair(&self.half.apply(&rho2))?, Outcome::Click(clicked)))
    }

    fn photodetection_em<N: NoiseSource + ?Sized>(
        &self,
        rho: &O,
        noise: &mut N,
    ) -> Result<(O, Outcome), StepError> {
        let u = noise.uniform();
        let eta = self.spec.efficiency;
        let p = self.jump_probability(rho)?;
        // drift·dt = dt·L(ρ) - η dt (cρc† - ⟨c†c⟩ρ)
        let mut drift = self.propagator.apply(rho);
        drift.axpy(C64::new(-1.0, 0.0), rho);
        if eta != 0.0 {
            let rate = self.number.trace_product(rho).re;
            drift.axpy(C64::new(-eta * self.dt, 0.0), &self.jump.sandwich(rho));
            drift.axpy(C64::new(eta * self.dt * rate, 0.0), rho);
        }
        if u < p {
            let unnormalised = self.jump.sandwich(rho);
            let norm = unnormalised.trace().re;
            if !(norm > 0.0) {
                return Err(StepError::NullJumpState);
            }
            let mut next = unnormalised.scaled_real(1.0 / norm);
            next.axpy(C64::new(1.0, 0.0), &drift);
            Ok((repair(&next)?, Outcome::Click(true)))
        } else {
            Ok((repair(&rho.plus(&drift))?, Outcome::Click(false)))
        }
    }

    fn draw_increments<N: NoiseSource + ?Sized>(&self, noise: &mut N) -> [f64; 2] {
        let s = sqrt(self.dt);
        let mut dw = [0.0; 2];
        for w in dw.iter_mut().take(self.channels.len()) {
            *w = s * noise.standard_normal();
        }
        dw
    }

    fn outcome(&self, dy: [f64; 2]) -> Outcome {
        if self.channels.len() == 1 {
            Outcome::Current(dy[0])
        } else {
            Outcome::Currents(dy[0], dy[1])
        }
    }

    fn diffusive_mo<N: NoiseSource + ?Sized>(
        &self,
        rho: &O,
        noise: &mut N,
    ) -> Result<(O, Outcome), StepError> {
        let dw = self.draw_increments(noise);
        let eta = self.spec.efficiency;
        if eta == 0.0 {
            return Ok((repair(&self.propagator.apply(rho))?, self.outcome(dw)));
        }
        let rho1 = self.half.apply(rho);
        let se = sqrt(eta);
        let k = self.channels.len();
        let mut dy = [0.0; 2];
        for j in 0..k {
            dy[j] = se * self.quadratures[j].trace_product(&rho1).re * self.dt + dw[j];
        }
        let mut kraus = self.kraus_base.clone();
        for j in 0..k {
            kraus.axpy(C64::new(se * dy[j], 0.0), &self.channels[j]);
            for l in 0..k {
                let delta = if j == l { self.dt } else { 0.0 };
                let w = 0.5 * eta * (dy[j] * dy[l] - delta);
                kraus.axpy(C64::new(w, 0.0), &self.products[j * k + l]);
            }
        }
        let rho2 = repair(&kraus.sandwich(&rho1))?;
        Ok((repair(&self.half.apply(&rho2))?, self.outcome(dy)))
    }

    fn diffusive_em<N: NoiseSource + ?Sized>(
        &self,
        rho: &O,
        noise: &mut N,
    ) -> Result<(O, Outcome), StepError> {
        let dw = self.draw_increments(noise);
        let se = sqrt(self.spec.efficiency);
        let mut next = self.propagator.apply(rho);
        let mut dy = [0.0; 2];
        for j in 0..self.channels.len() {
            let mean = self.quadratures[j].trace_product(rho).re;
            dy[j] = se * mean * self.dt + dw[j];
            if se != 0.0 {
                // H[L]ρ = Lρ + ρL† - ⟨L + L†⟩ρ
                let l = &self.channels[j];
                let lr = l.matmul(rho);
                let mut h = lr.plus(&lr.adjoint());
                h.axpy(C64::new(-mean, 0.0), rho);
                next.axpy(C64::new(se * dw[j], 0.0), &h);
            }
        }
        Ok((repair(&next)?, self.outcome(dy)))
    }
}

#[inline]
fn repair<O: Operator>(m: &O) -> Result<O, StepError> {
    DensityMatrix::repair(m).map_err(|e| match e {
        QmatError::NotPositive { min_eigenvalue } => StepError::PositivityLost { min_eigenvalue },
        other => StepError::Matrix(other),
    })
}

fn single_step<N: NoiseSource + ?Sized>(
    model: &LindbladModel,
    spec: &UnravellingSpec,
    rho: &DensityMatrix,
    dt: f64,
    noise: &mut N,
) -> Result<(DensityMatrix, Outcome), StepError> {
    if rho.dim() != model.dim() {
        return Err(StepError::DimensionMismatch {
            expected: model.dim(),
            found: rho.dim(),
        });
    }
    let stepper = Stepper::<ComplexMatrix>::new(model, spec, dt, Scheme::MeasurementOperator)?;
    let (next, outcome) = stepper.step(rho.as_matrix(), noise)?;
    Ok((DensityMatrix::new_unchecked(next), outcome))
}

/// One photo-detection step with the measurement-operator scheme.
pub fn step_photodetection<N: NoiseSource + ?Sized>(
    model: &LindbladModel,
    spec: &UnravellingSpec,
    rho: &DensityMatrix,
    dt: f64,
    noise: &mut N,
) -> Result<(DensityMatrix, bool), StepError> {
    match single_step(model, spec, rho, dt, noise)? {
        (next, Outcome::Click(jump)) => Ok((next, jump)),
        _ => Err(StepError::UnravellingMismatch),
    }
}

/// One homodyne step; returns the photocurrent increment `dy`.
pub fn step_homodyne<N: NoiseSource + ?Sized>(
    model: &LindbladModel,
    spec: &UnravellingSpec,
    rho: &DensityMatrix,
    dt: f64,
    noise: &mut N,
) -> Result<(DensityMatrix, f64), StepError> {
    match single_step(model, spec, rho, dt, noise)? {
        (next, Outcome::Current(dy)) => Ok((next, dy)),
        _ => Err(StepError::UnravellingMismatch),
    }
}

/// One heterodyne step; returns both photocurrent increments.
pub fn step_heterodyne<N: NoiseSource + ?Sized>(
    model: &LindbladModel,
    spec: &UnravellingSpec,
    rho: &DensityMatrix,
    dt: f64,
    noise: &mut N,
) -> Result<(DensityMatrix, f64, f64), StepError> {
    match single_step(model, spec, rho, dt, noise)? {
        (next, Outcome::Currents(dy1, dy2)) => Ok((next, dy1, dy2)),
        _ => Err(StepError::UnravellingMismatch),
    }
}

// ---------------------------------------------------------------------------
// Whole trajectories

/// Runs `steps` steps from `rho0`, calling `observer(step, state, outcome)`
/// for the initial state (`step = 0`, no outcome) and after every step.
pub fn simulate<O, N, F>(
    stepper: &Stepper<O>,
    rho0: &O,
    steps: usize,
    noise: &mut N,
    mut observer: F,
) -> Result<O, TrajectoryError>
where
    O: Operator,
    N: NoiseSource + ?Sized,
    F: FnMut(usize, &O, Option<Outcome>),
{
    if rho0.dim() != stepper.dim {
        return Err(TrajectoryError::Setup(StepError::DimensionMismatch {
            expected: stepper.dim,
            found: rho0.dim(),
        }));
    }
    let mut rho = rho0.clone();
    observer(0, &rho, None);
    for step in 1..=steps {
        let (next, outcome) = stepper
            .step(&rho, noise)
            .map_err(|source| TrajectoryError::AtStep { step, source })?;
        rho = next;
        observer(step, &rho, Some(outcome));
    }
    Ok(rho)
}

/// Measurement record of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectionRecord {
    /// Click times, strictly increasing.
    Jumps(Vec<f64>),
    /// Homodyne increment per step.
    Homodyne(Vec<f64>),
    /// Heterodyne increment pair per step.
    Heterodyne(Vec<(f64, f64)>),
}

impl DetectionRecord {
    fn empty(kind: UnravellingKind, steps: usize) -> Self {
        match kind {
            UnravellingKind::PhotoDetection => DetectionRecord::Jumps(Vec::new()),
            UnravellingKind::Homodyne { .. } => DetectionRecord::Homodyne(Vec::with_capacity(steps)),
            UnravellingKind::Heterodyne => DetectionRecord::Heterodyne(Vec::with_capacity(steps)),
        }
    }

    fn push(&mut self, time: f64, outcome: Outcome) {
        match (self, outcome) {
            (DetectionRecord::Jumps(t), Outcome::Click(true)) => t.push(time),
            (DetectionRecord::Homodyne(v), Outcome::Current(dy)) => v.push(dy),
            (DetectionRecord::Heterodyne(v), Outcome::Currents(a, b)) => v.push((a, b)),
            _ => {}
        }
    }
}

/// Energy, ergotropy and purity of a stored state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSummary {
    pub energy: f64,
    pub ergotropy: f64,
    pub purity: f64,
}

impl StateSummary {
    pub fn of(rho: &DensityMatrix, h: &EnergySpec) -> Result<Self, TrajectoryError> {
        let energy = h.hamiltonian().trace_product(rho.as_matrix()).re;
        let ergotropy = ergotropy(rho, h).map_err(|e| match e {
            crate::ergotropy::ErgotropyError::Matrix(m) => {
                TrajectoryError::Setup(StepError::Matrix(m))
            }
            _ => TrajectoryError::Setup(StepError::DimensionMismatch {
                expected: h.dim(),
                found: rho.dim(),
            }),
        })?;
        Ok(Self {
            energy,
            ergotropy,
            purity: crate::qmat::purity(rho),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StoragePolicy {
    FullStates,
    /// Keep only [`StateSummary`] values, measured against the given
    /// Hamiltonian.
    Summaries(EnergySpec),
}

#[derive(Debug, Clone, PartialEq)]
pub enum StoredStates {
    Full(Vec<DensityMatrix>),
    Summaries(Vec<StateSummary>),
}

impl StoredStates {
    pub fn len(&self) -> usize {
        match self {
            StoredStates::Full(v) => v.len(),
            StoredStates::Summaries(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOptions {
    pub scheme: Scheme,
    pub storage: StoragePolicy,
    /// States are stored at steps `0, k, 2k, …`.
    pub record_every: usize,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::MeasurementOperator,
            storage: StoragePolicy::FullStates,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub grid: TimeGrid,
    pub record_every: usize,
    pub states: StoredStates,
    pub detection: DetectionRecord,
}

impl TrajectoryRecord {
    /// Times of the stored states.
    pub fn times(&self) -> Vec<f64> {
        (0..self.states.len())
            .map(|k| self.grid.time(k * self.record_every))
            .collect()
    }
}

/// Runs one trajectory storing every state; noise comes from
/// [`TrajectoryRng::new(seed, 0)`](TrajectoryRng::new).
pub fn run_trajectory(
    model: &LindbladModel,
    spec: &UnravellingSpec,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    seed: u64,
    scheme: Scheme,
) -> Result<TrajectoryRecord, TrajectoryError> {
    let options = TrajectoryOptions {
        scheme,
        ..TrajectoryOptions::default()
    };
    run_trajectory_with(model, spec, rho0, grid, seed, &options)
}

pub fn run_trajectory_with(
    model: &LindbladModel,
    spec: &UnravellingSpec,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    seed: u64,
    options: &TrajectoryOptions,
) -> Result<TrajectoryRecord, TrajectoryError> {
    if rho0.dim() != model.dim() {
        return Err(TrajectoryError::Setup(StepError::DimensionMismatch {
            expected: model.dim(),
            found: rho0.dim(),
        }));
    }
    if model.dim() == 2 {
        run_generic::<Mat2>(model, spec, rho0, grid, seed, options)
    } else {
        run_generic::<ComplexMatrix>(model, spec, rho0, grid, seed, options)
    }
}

fn run_generic<O: Operator>(
    model: &LindbladModel,
    spec: &UnravellingSpec,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    seed: u64,
    options: &TrajectoryOptions,
) -> Result<TrajectoryRecord, TrajectoryError> {
    let stepper = Stepper::<O>::new(model, spec, grid.dt, options.scheme)?;
    let record_every = options.record_every.max(1);
    let mut noise = TrajectoryRng::new(seed, 0);
    let start = O::from_matrix(rho0.as_matrix()).expect("dimension checked");
    let capacity = grid.steps / record_every + 1;
    let mut full = Vec::new();
    let mut summaries = Vec::new();
    let mut summary_error = None;
    let mut detection = DetectionRecord::empty(spec.kind, grid.steps);
    simulate(&stepper, &start, grid.steps, &mut noise, |step, rho, outcome| {
        if let Some(outcome) = outcome {
            detection.push(grid.time(step), outcome);
        }
        if step % record_every != 0 {
            return;
        }
        let state = DensityMatrix::new_unchecked(rho.to_matrix());
        match &options.storage {
            StoragePolicy::FullStates => {
                full.reserve(capacity.saturating_sub(full.len()));
                full.push(state);
            }
            StoragePolicy::Summaries(h) => match StateSummary::of(&state, h) {
                Ok(s) => summaries.push(s),
                Err(e) => {
                    summary_error.get_or_insert(e);
                }
            },
        }
    })?;
    if let Some(e) = summary_error {
        return Err(e);
    }
    let states = match options.storage {
        StoragePolicy::FullStates => StoredStates::Full(full),
        StoragePolicy::Summaries(_) => StoredStates::Summaries(summaries),
    };
    Ok(TrajectoryRecord {
        seed,
        grid: *grid,
        record_every,
        states,
        detection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::BatteryModel;
    use crate::lindblad::evolve_unconditional;
    use crate::qmat::{pauli, purity};
    use alloc::vec;

    fn battery(alpha: f64) -> LindbladModel {
        BatteryModel::new(1.0, alpha, 1.0).unwrap().to_lindblad()
    }

    fn all_specs(eta: f64) -> Vec<UnravellingSpec> {
        vec![
            UnravellingSpec::photodetection(eta).unwrap(),
            UnravellingSpec::homodyne(0.0, eta).unwrap(),
            UnravellingSpec::homodyne(core::f64::consts::FRAC_PI_2, eta).unwrap(),
            UnravellingSpec::heterodyne(eta).unwrap(),
        ]
    }

    fn full_states(record: &TrajectoryRecord) -> &[DensityMatrix] {
        match &record.states {
            StoredStates::Full(v) => v,
            StoredStates::Summaries(_) => panic!("expected full states"),
        }
    }

    /// Replays fixed values.
    struct Fixed {
        uniform: f64,
        normal: f64,
    }

    impl NoiseSource for Fixed {
        fn uniform(&mut self) -> f64 {
            self.uniform
        }
        fn standard_normal(&mut self) -> f64 {
            self.normal
        }
    }

    /// Negates every normal draw of the wrapped source.
    struct Mirrored(TrajectoryRng);

    impl NoiseSource for Mirrored {
        fn uniform(&mut self) -> f64 {
            self.0.uniform()
        }
        fn standard_normal(&mut self) -> f64 {
            -self.0.standard_normal()
        }
    }

    #[test]
    fn spec_validation() {
        assert!(UnravellingSpec::photodetection(1.2).is_err());
        assert!(UnravellingSpec::photodetection(-0.1).is_err());
        assert!(UnravellingSpec::homodyne(f64::NAN, 0.5).is_err());
        assert!(UnravellingSpec::heterodyne(1.0).is_ok());
        assert_eq!(UnravellingSpec::heterodyne(1.0).unwrap().kind().short_name(), "hed");
    }

    #[test]
    fn rng_streams_are_reproducible_and_distinct() {
        let mut a = TrajectoryRng::new(7, 3);
        let mut b = TrajectoryRng::new(7, 3);
        let mut c = TrajectoryRng::new(7, 4);
        let mut d = TrajectoryRng::new(8, 3);
        let xs: Vec<f64> = (0..16).map(|_| a.uniform()).collect();
        let ys: Vec<f64> = (0..16).map(|_| b.uniform()).collect();
        let zs: Vec<f64> = (0..16).map(|_| c.uniform()).collect();
        let ws: Vec<f64> = (0..16).map(|_| d.uniform()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
        assert_ne!(xs, ws);
        assert!(xs.iter().all(|u| (0.0..1.0).contains(u)));
    }

    #[test]
    fn normal_draws_have_unit_moments() {
        let mut rng = TrajectoryRng::new(1, 0);
        let n = 200_000;
        let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let z = rng.standard_normal();
            s1 += z;
            s2 += z * z;
            s4 += z * z * z * z;
        }
        let nf = n as f64;
        assert!((s1 / nf).abs() < 4.0 / nf.sqrt());
        assert!((s2 / nf - 1.0).abs() < 4.0 * 2f64.sqrt() / nf.sqrt());
        assert!((s4 / nf - 3.0).abs() < 4.0 * 96f64.sqrt() / nf.sqrt());
    }

    #[test]
    fn mixed_seeds_differ() {
        assert_ne!(mix_seed(1, 0), mix_seed(1, 1));
        assert_ne!(mix_seed(1, 0), mix_seed(2, 0));
        assert_eq!(mix_seed(5, 9), mix_seed(5, 9));
    }

    #[test]
    fn undriven_ground_state_is_stationary() {
        let model = battery(0.0);
        let spec = UnravellingSpec::photodetection(1.0).unwrap();
        let ground = DensityMatrix::ground(2);
        let mut noise = TrajectoryRng::new(3, 0);
        for _ in 0..100 {
            let (next, jump) =
                step_photodetection(&model, &spec, &ground, 1e-3, &mut noise).unwrap();
            assert!(!jump);
            assert_eq!(next, ground);
        }
    }

    #[test]
    fn jump_from_excited_state_lands_in_ground_state() {
        let model = battery(0.0);
        let spec = UnravellingSpec::photodetection(1.0).unwrap();
        let excited = DensityMatrix::basis(2, 1);
        let mut noise = Fixed {
            uniform: 0.0,
            normal: 0.0,
        };
        let (next, jump) = step_photodetection(&model, &spec, &excited, 1e-3, &mut noise).unwrap();
        assert!(jump);
        assert!(next.as_matrix().max_abs_diff(DensityMatrix::ground(2).as_matrix()) < 1e-15);
    }

    #[test]
    fn oversized_jump_probability_is_rejected() {
        let model = battery(0.0);
        let spec = UnravellingSpec::photodetection(1.0).unwrap();
        let excited = DensityMatrix::basis(2, 1);
        let mut noise = TrajectoryRng::new(0, 0);
        assert!(matches!(
            step_photodetection(&model, &spec, &excited, 0.2, &mut noise),
            Err(StepError::StepTooLarge { .. })
        ));
    }

    #[test]
    fn mismatched_step_function_is_reported() {
        let model = battery(1.0);
        let spec = UnravellingSpec::heterodyne(0.5).unwrap();
        let mut noise = TrajectoryRng::new(0, 0);
        assert_eq!(
            step_homodyne(&model, &spec, &DensityMatrix::ground(2), 1e-3, &mut noise),
            Err(StepError::UnravellingMismatch)
        );
    }

    #[test]
    fn zero_efficiency_reproduces_unconditional_evolution() {
        let model = battery(1.0);
        let rho0 = DensityMatrix::from_bloch(0.2, -0.1, 0.4).unwrap();
        let grid = TimeGrid::with_horizon(1e-3, 2.0).unwrap();
        let reference = evolve_unconditional(&model, &rho0, &grid).unwrap();
        for spec in all_specs(0.0) {
            let record =
                run_trajectory(&model, &spec, &rho0, &grid, 11, Scheme::MeasurementOperator)
                    .unwrap();
            assert_eq!(full_states(&record), &reference[..], "{:?}", spec.kind());

            // explicit Euler drift converges at first order
            let em = run_trajectory(&model, &spec, &rho0, &grid, 11, Scheme::EulerMaruyama)
                .unwrap();
            let last = full_states(&em).last().unwrap();
            assert!(last.trace_distance(reference.last().unwrap()).unwrap() < 2e-3);
        }
    }

    #[test]
    fn unit_efficiency_keeps_pure_states_pure() {
        let model = battery(1.0);
        let rho0 = DensityMatrix::ground(2);
        let grid = TimeGrid::with_horizon(1e-4, 10.0).unwrap();
        for spec in all_specs(1.0) {
            let options = TrajectoryOptions {
                storage: StoragePolicy::Summaries(EnergySpec::qubit(1.0)),
                record_every: 1,
                ..TrajectoryOptions::default()
            };
            let record = run_trajectory_with(&model, &spec, &rho0, &grid, 5, &options).unwrap();
            let StoredStates::Summaries(s) = &record.states else {
                panic!("expected summaries")
            };
            assert_eq!(s.len(), grid.steps + 1);
            let worst_step = s
                .windows(2)
                .map(|w| w[0].purity - w[1].purity)
                .fold(f64::MIN, f64::max);
            let min_purity = s.iter().map(|x| x.purity).fold(1.0, f64::min);
            assert!(min_purity >= 0.999, "{:?}: {min_purity}", spec.kind());
            assert!(worst_step <= 1e-6, "{:?}: {worst_step}", spec.kind());
        }
    }

    #[test]
    fn homodyne_current_mean_matches_quadrature() {
        let model = battery(1.0);
        let rho = DensityMatrix::from_bloch(0.5, 0.3, -0.2).unwrap();
        let (phi, eta, dt) = (0.7, 0.6, 1e-3);
        let spec = UnravellingSpec::homodyne(phi, eta).unwrap();
        let mut noise = TrajectoryRng::new(21, 0);
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += step_homodyne(&model, &spec, &rho, dt, &mut noise).unwrap().1;
        }
        let mean = sum / n as f64;
        let quad = &pauli::sigma_x().scale_real(cos(phi)) + &pauli::sigma_y().scale_real(sin(phi));
        // the current tracks the state after the unmonitored sub-step, which
        // moves the quadrature by O(dt)
        let expected = sqrt(eta) * quad.expectation(rho.as_matrix()).unwrap().re * dt;
        let se = sqrt(dt / n as f64);
        assert!((mean - expected).abs() < 4.0 * se + 1e-2 * dt);
    }

    #[test]
    fn heterodyne_current_means_and_noise_correlation() {
        let model = battery(1.0);
        let (eta, dt) = (0.8, 1e-3);
        let spec = UnravellingSpec::heterodyne(eta).unwrap();
        let mut noise = TrajectoryRng::new(4, 2);

        let rho = DensityMatrix::from_bloch(0.4, -0.5, 0.1).unwrap();
        let n = 10_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let (_, a, b) = step_heterodyne(&model, &spec, &rho, dt, &mut noise).unwrap();
            m1 += a;
            m2 += b;
        }
        let se = sqrt(dt / n as f64);
        let scale = sqrt(eta / 2.0) * dt;
        assert!((m1 / n as f64 - scale * 0.4).abs() < 4.0 * se + 1e-2 * dt);
        assert!((m2 / n as f64 + scale * 0.5).abs() < 4.0 * se + 1e-2 * dt);

        // the maximally mixed state has zero quadratures, so dy = dW
        let mixed = DensityMatrix::maximally_mixed(2);
        let stepper = Stepper::<Mat2>::new(&model, &spec, dt, Scheme::MeasurementOperator).unwrap();
        let rho = Mat2::from_matrix(mixed.as_matrix()).unwrap();
        let n = 100_000;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let (_, outcome) = stepper.step(&rho, &mut noise).unwrap();
            let Outcome::Currents(a, b) = outcome else {
                panic!("expected two currents")
            };
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
        let corr = sab / sqrt(saa * sbb);
        assert!(corr.abs() <= 0.02, "{corr}");
        assert!((saa / n as f64 / dt - 1.0).abs() < 0.03);
    }

    #[test]
    fn same_seed_same_record() {
        let model = battery(1.0);
        let rho0 = DensityMatrix::maximally_mixed(2);
        let grid = TimeGrid::with_horizon(1e-3, 1.0).unwrap();
        for spec in all_specs(0.4) {
            for scheme in [Scheme::MeasurementOperator, Scheme::EulerMaruyama] {
                let a = run_trajectory(&model, &spec, &rho0, &grid, 99, scheme).unwrap();
                let b = run_trajectory(&model, &spec, &rho0, &grid, 99, scheme).unwrap();
                let c = run_trajectory(&model, &spec, &rho0, &grid, 100, scheme).unwrap();
                assert_eq!(a, b);
                if !matches!(spec.kind(), UnravellingKind::PhotoDetection) {
                    assert_ne!(a.states, c.states);
                }
            }
        }
    }

    #[test]
    fn stored_states_are_valid() {
        let model = battery(1.0);
        let grid = TimeGrid::with_horizon(1e-3, 3.0).unwrap();
        let rho0 = DensityMatrix::maximally_mixed(2);
        for spec in all_specs(0.7) {
            let record =
                run_trajectory(&model, &spec, &rho0, &grid, 2, Scheme::EulerMaruyama).unwrap();
            for rho in full_states(&record) {
                assert!((rho.as_matrix().trace().re - 1.0).abs() <= 1e-9);
                assert!(rho.as_matrix().hermiticity_deviation() <= 1e-10);
                assert!(DensityMatrix::new(rho.as_matrix().clone()).is_ok());
            }
        }
    }

    #[test]
    fn schemes_agree_on_the_same_noise() {
        let model = battery(1.0);
        let grid = TimeGrid::with_horizon(1e-4, 2.0).unwrap();
        let rho0 = DensityMatrix::maximally_mixed(2);
        for eta in [0.1, 0.4] {
            for spec in all_specs(eta) {
                let mo = run_trajectory(&model, &spec, &rho0, &grid, 8, Scheme::MeasurementOperator)
                    .unwrap();
                let em =
                    run_trajectory(&model, &spec, &rho0, &grid, 8, Scheme::EulerMaruyama).unwrap();
                let a = full_states(&mo).last().unwrap();
                let b = full_states(&em).last().unwrap();
                let distance = a.trace_distance(b).unwrap();
                assert!(distance <= 5e-3, "{:?} eta={eta}: {distance}", spec.kind());
            }
        }
    }

    #[test]
    fn explicit_scheme_flags_positivity_loss_near_pure_states() {
        let model = battery(1.0);
        let grid = TimeGrid::with_horizon(1e-4, 2.0).unwrap();
        let spec = UnravellingSpec::homodyne(0.0, 1.0).unwrap();
        let err = run_trajectory(
            &model,
            &spec,
            &DensityMatrix::ground(2),
            &grid,
            8,
            Scheme::EulerMaruyama,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            TrajectoryError::AtStep {
                source: StepError::PositivityLost { .. },
                ..
            }
        ));
    }

    #[test]
    fn opposite_homodyne_phases_mirror_each_other() {
        let model = battery(1.0);
        let grid = TimeGrid::with_horizon(1e-3, 2.0).unwrap();
        let rho0 = DensityMatrix::from_bloch(0.3, 0.2, -0.4).unwrap();
        let phi = 0.4;
        let a = UnravellingSpec::homodyne(phi, 0.8).unwrap();
        let b = UnravellingSpec::homodyne(phi + core::f64::consts::PI, 0.8).unwrap();
        let sa = Stepper::<Mat2>::new(&model, &a, grid.dt, Scheme::MeasurementOperator).unwrap();
        let sb = Stepper::<Mat2>::new(&model, &b, grid.dt, Scheme::MeasurementOperator).unwrap();
        let start = Mat2::from_matrix(rho0.as_matrix()).unwrap();

        // zero noise: the current is its mean, which flips sign
        let mut zero = Fixed {
            uniform: 0.5,
            normal: 0.0,
        };
        let (_, Outcome::Current(ya)) = sa.step(&start, &mut zero).unwrap() else {
            panic!()
        };
        let (_, Outcome::Current(yb)) = sb.step(&start, &mut zero).unwrap() else {
            panic!()
        };
        assert!(ya.abs() > 1e-6);
        assert!((ya + yb).abs() < 1e-15);

        // with mirrored noise the two conditional paths coincide
        let mut states_a = Vec::new();
        let mut states_b = Vec::new();
        simulate(&sa, &start, grid.steps, &mut TrajectoryRng::new(6, 1), |_, r, _| {
            states_a.push(*r)
        })
        .unwrap();
        simulate(
            &sb,
            &start,
            grid.steps,
            &mut Mirrored(TrajectoryRng::new(6, 1)),
            |_, r, _| states_b.push(*r),
        )
        .unwrap();
        for (x, y) in states_a.iter().zip(&states_b) {
            assert!(x.to_matrix().max_abs_diff(&y.to_matrix()) < 1e-12);
        }
    }

    #[test]
    fn detection_record_matches_grid() {
        let model = battery(1.0);
        let grid = TimeGrid::with_horizon(1e-3, 5.0).unwrap();
        let rho0 = DensityMatrix::basis(2, 1);
        for spec in all_specs(1.0) {
            let r = run_trajectory(&model, &spec, &rho0, &grid, 17, Scheme::MeasurementOperator)
                .unwrap();
            match &r.detection {
                DetectionRecord::Jumps(t) => {
                    assert!(!t.is_empty());
                    assert!(t.windows(2).all(|w| w[0] < w[1]));
                }
                DetectionRecord::Homodyne(v) => assert_eq!(v.len(), grid.steps),
                DetectionRecord::Heterodyne(v) => assert_eq!(v.len(), grid.steps),
            }
            assert_eq!(r.times().len(), grid.steps + 1);
        }
    }

    /// Kolmogorov distribution tail `Q(λ) = 2 Σ (-1)^{k-1} e^{-2k²λ²}`.
    fn kolmogorov_p(n: usize, d: f64) -> f64 {
        let sn = sqrt(n as f64);
        let lambda = (sn + 0.12 + 0.11 / sn) * d;
        let mut p = 0.0;
        for k in 1..=100 {
            let k = k as f64;
            let sign = if k as usize % 2 == 1 { 1.0 } else { -1.0 };
            p += 2.0 * sign * libm::exp(-2.0 * k * k * lambda * lambda);
        }
        p.clamp(0.0, 1.0)
    }

    #[test]
    fn first_jump_times_are_exponential() {
        let kappa = 1.0;
        let model = battery(0.0);
        let spec = UnravellingSpec::photodetection(1.0).unwrap();
        let dt = 1e-3;
        let stepper = Stepper::<Mat2>::new(&model, &spec, dt, Scheme::MeasurementOperator).unwrap();
        let excited = Mat2::from_matrix(DensityMatrix::basis(2, 1).as_matrix()).unwrap();
        let n = 10_000;
        let mut times = Vec::with_capacity(n);
        for i in 0..n {
            let mut noise = TrajectoryRng::new(2024, i as u64);
            let mut rho = excited;
            let mut step = 0usize;
            loop {
                step += 1;
                let (next, outcome) = stepper.step(&rho, &mut noise).unwrap();
                rho = next;
                if outcome == Outcome::Click(true) {
                    break;
                }
            }
            times.push(step as f64 * dt);
        }
        times.sort_by(f64::total_cmp);
        let mut d: f64 = 0.0;
        for (i, &t) in times.iter().enumerate() {
            let cdf = 1.0 - libm::exp(-kappa * t);
            d = d
                .max((i + 1) as f64 / n as f64 - cdf)
                .max(cdf - i as f64 / n as f64);
        }
        let p = kolmogorov_p(n, d);
        assert!(p > 0.01, "KS statistic {d}, p = {p}");
    }

    #[test]
    fn ensemble_mean_tracks_master_equation() {
        let model = battery(1.0);
        let grid = TimeGrid::with_horizon(1e-3, 2.0).unwrap();
        let rho0 = DensityMatrix::ground(2);
        let reference = evolve_unconditional(&model, &rho0, &grid).unwrap();
        let target = reference.last().unwrap().bloch().unwrap();
        let n = 400;
        for spec in all_specs(0.7) {
            let stepper =
                Stepper::<Mat2>::new(&model, &spec, grid.dt, Scheme::MeasurementOperator).unwrap();
            let start = Mat2::from_matrix(rho0.as_matrix()).unwrap();
            let (mut s, mut s2) = ([0.0; 3], [0.0; 3]);
            for i in 0..n {
                let mut noise = TrajectoryRng::new(77, i);
                let end = simulate(&stepper, &start, grid.steps, &mut noise, |_, _, _| {}).unwrap();
                let b = DensityMatrix::new_unchecked(end.to_matrix()).bloch().unwrap();
                for k in 0..3 {
                    s[k] += b[k];
                    s2[k] += b[k] * b[k];
                }
            }
            let nf = n as f64;
            for k in 0..3 {
                let mean = s[k] / nf;
                let var = (s2[k] / nf - mean * mean) * nf / (nf - 1.0);
                let se = sqrt(var / nf);
                assert!(
                    (mean - target[k]).abs() <= 4.0 * se + 1e-3,
                    "{:?} component {k}: {mean} vs {}",
                    spec.kind(),
                    target[k]
                );
            }
        }
    }

    #[test]
    fn step_errors_carry_the_step_index() {
        let model = battery(0.0);
        let spec = UnravellingSpec::photodetection(1.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.15, 3).unwrap();
        let err = run_trajectory(
            &model,
            &spec,
            &DensityMatrix::basis(2, 1),
            &grid,
            0,
            Scheme::MeasurementOperator,
        )
        .unwrap_err();
        assert!(matches!(err, TrajectoryError::AtStep { step: 1, .. }), "{err:?}");
    }

    #[test]
    fn purity_helper_consistent() {
        let rho = DensityMatrix::from_bloch(0.6, 0.0, 0.0).unwrap();
        let s = StateSummary::of(&rho, &EnergySpec::qubit(1.0)).unwrap();
        assert!((s.purity - purity(&rho)).abs() < 1e-15);
        assert!((s.energy - 0.5).abs() < 1e-15);
    }
}
