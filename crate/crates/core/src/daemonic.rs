//! Monte Carlo estimation of the daemonic ergotropy of the monitored
//! battery: the average ergotropy of conditional states over the sampled
//! measurement records, with uniform weights over trajectories.
//!
//! Trajectories are grouped into at most [`MAX_BLOCKS`] contiguous chunks.
//! Each chunk is reduced sequentially and the chunks are merged in index
//! order, so results do not depend on how an [`Executor`] schedules them.
//! The chunks double as the blocks of the jackknife used for curves derived
//! from the mean state.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use thiserror::Error;

use crate::battery::BatteryModel;
use crate::ergotropy::qubit_closed_form;
use crate::lindblad::{evolve_unconditional_recorded, LindbladError, TimeGrid};
use crate::qmat::{DensityMatrix, Mat2, Operator};
use crate::trajectories::{
    mix_seed, simulate, Scheme, Stepper, TrajectoryError, TrajectoryRng, UnravellingSpec,
};
use crate::C64;

/// Upper bound on the number of chunks (and jackknife blocks).
pub const MAX_BLOCKS: usize = 64;

/// Chunks handed to the executor at once; bounds peak memory.
const CHUNKS_PER_WAVE: usize = 16;

/// Runs independent jobs `f(0), …, f(n - 1)` and returns their results in
/// index order.
pub trait Executor: Sync {
    fn map_indices<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indices<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error("invalid ensemble: {0}")]
    InvalidSpec(&'static str),
    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: u64,
        #[source]
        source: TrajectoryError,
    },
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(
        "steady state not reached: drift {drift:e} over the window exceeds tolerance {tolerance:e}"
    )]
    NotConverged { drift: f64, tolerance: f64 },
}

/// Closed time interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    pub fn new(start: f64, end: f64) -> Result<Self, EnsembleError> {
        if !(start.is_finite() && end.is_finite() && start <= end) {
            return Err(EnsembleError::InvalidSpec("window needs finite start <= end"));
        }
        Ok(Self { start, end })
    }

    /// The last `fraction` of `[0, horizon]`.
    pub fn tail(horizon: f64, fraction: f64) -> Self {
        Self {
            start: horizon * (1.0 - fraction),
            end: horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub n_trajectories: usize,
    pub master_seed: u64,
    pub unravelling: UnravellingSpec,
    pub scheme: Scheme,
    /// Statistics are kept at steps `0, k, 2k, …`. Trajectories are reduced
    /// on the fly, so this stride is what bounds memory.
    pub record_every: usize,
    /// Windows over which each trajectory's ergotropy is time-averaged
    /// before averaging over trajectories.
    pub windows: Vec<TimeWindow>,
}

impl EnsembleSpec {
    pub fn new(
        n_trajectories: usize,
        master_seed: u64,
        unravelling: UnravellingSpec,
    ) -> Result<Self, EnsembleError> {
        if n_trajectories == 0 {
            return Err(EnsembleError::InvalidSpec("n_trajectories must be at least 1"));
        }
        Ok(Self {
            n_trajectories,
            master_seed,
            unravelling,
            scheme: Scheme::MeasurementOperator,
            record_every: 1,
            windows: Vec::new(),
        })
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_record_every(mut self, record_every: usize) -> Self {
        self.record_every = record_every.max(1);
        self
    }

    pub fn with_window(mut self, window: TimeWindow) -> Self {
        self.windows.push(window);
        self
    }
}

/// Streaming mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combines two disjoint samples.
    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * (other.count as f64 / n as f64);
        self.m2 += other.m2 + delta * delta * (self.count as f64 * other.count as f64 / n as f64);
        self.count = n;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance; `None` below two samples.
    pub fn variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| (self.m2 / (self.count - 1) as f64).max(0.0))
    }

    /// `√(variance / n)`.
    pub fn std_error(&self) -> Option<f64> {
        self.variance().map(|v| sqrt(v / self.count as f64))
    }
}

/// Energy and ergotropy of a qubit state given as row-major entries.
/// Shared by the trajectory and reference paths so that equal states give
/// bitwise-equal values.
#[inline]
fn qubit_observables(m: &[C64], omega0: f64) -> (f64, f64) {
    let energy = omega0 * m[3].re;
    let purity: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    (energy, qubit_closed_form(energy, purity, omega0))
}

#[derive(Debug, Clone, Default)]
struct TimeAccumulator {
    ergotropy: Welford,
    energy: Welford,
    /// `ρ00`, `Re ρ01`, `Im ρ01`, `ρ11`.
    entries: [Welford; 4],
}

impl TimeAccumulator {
    fn merge(&mut self, other: &Self) {
        self.ergotropy.merge(&other.ergotropy);
        self.energy.merge(&other.energy);
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            a.merge(b);
        }
    }

    fn mean_state(&self) -> Mat2 {
        let e = &self.entries;
        let off = C64::new(e[1].mean(), e[2].mean());
        Mat2([
            C64::new(e[0].mean(), 0.0),
            off,
            off.conj(),
            C64::new(e[3].mean(), 0.0),
        ])
    }
}

#[derive(Debug, Clone, Default)]
struct WindowAccumulator {
    average: Welford,
    /// Second-half minus first-half average, per trajectory.
    trend: Welford,
}

#[derive(Debug, Clone)]
struct ChunkAccumulator {
    times: Vec<TimeAccumulator>,
    windows: Vec<WindowAccumulator>,
}

impl ChunkAccumulator {
    fn new(n_times: usize, n_windows: usize) -> Self {
        Self {
            times: vec![TimeAccumulator::default(); n_times],
            windows: vec![WindowAccumulator::default(); n_windows],
        }
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in self.times.iter_mut().zip(&other.times) {
            a.merge(b);
        }
        for (a, b) in self.windows.iter_mut().zip(&other.windows) {
            a.average.merge(&b.average);
            a.trend.merge(&b.trend);
        }
    }
}

/// Record-index range `[first, last]` of a window and its midpoint split.
#[derive(Debug, Clone, Copy)]
struct WindowIndices {
    first: usize,
    last: usize,
    /// Indices `< split` belong to the first half.
    split: usize,
}

fn window_indices(times: &[f64], w: &TimeWindow, dt: f64) -> Result<WindowIndices, EnsembleError> {
    let eps = 1e-9 * dt;
    let inside: Vec<usize> = (0..times.len())
        .filter(|&k| times[k] >= w.start - eps && times[k] <= w.end + eps)
        .collect();
    match (inside.first(), inside.last()) {
        (Some(&first), Some(&last)) if last > first => Ok(WindowIndices {
            first,
            last,
            split: first + (last - first + 1) / 2,
        }),
        _ => Err(EnsembleError::InvalidSpec(
            "window must contain at least two recorded times",
        )),
    }
}

/// Time-averaged daemonic ergotropy over a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub window: TimeWindow,
    pub mean: f64,
    /// Standard error from the spread of per-trajectory averages.
    pub std_error: Option<f64>,
    /// Second-half minus first-half average.
    pub trend: f64,
    pub trend_std_error: Option<f64>,
    /// Time average of the unconditional ergotropy over the same window.
    pub unconditional_ergotropy: f64,
    pub unconditional_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub n_trajectories: usize,
    pub omega0: f64,
    /// Sample mean of the conditional ergotropy.
    pub daemonic_ergotropy: Vec<f64>,
    /// `None` for a single trajectory.
    pub std_error: Option<Vec<f64>>,
    /// Sample mean of the conditional energy.
    pub mean_energy: Vec<f64>,
    pub mean_state: Vec<DensityMatrix>,
    /// Standard errors of the mean Bloch components.
    pub mean_bloch_std_error: Option<Vec<[f64; 3]>>,
    /// Ergotropy of the mean state, i.e. with the record discarded.
    pub mean_state_ergotropy: Vec<f64>,
    /// Block-jackknife standard error of `mean_state_ergotropy`.
    pub mean_state_ergotropy_std_error: Option<Vec<f64>>,
    pub unconditional_state: Vec<DensityMatrix>,
    pub unconditional_energy: Vec<f64>,
    pub unconditional_ergotropy: Vec<f64>,
    pub windows: Vec<WindowStats>,
}

impl EnsembleStats {
    /// Standard error at record `k`, zero when unavailable.
    pub fn std_error_at(&self, k: usize) -> f64 {
        self.std_error.as_ref().map_or(0.0, |s| s[k])
    }
}

fn chunk_layout(n: usize) -> (usize, usize) {
    let size = n.div_ceil(MAX_BLOCKS).max(1);
    (size, n.div_ceil(size))
}

/// Runs `spec.n_trajectories` trajectories of the battery from `rho0` and
/// reduces them to [`EnsembleStats`].
///
/// Trajectory `i` draws from `TrajectoryRng::new(master_seed, i)`. On
/// failure the error of the lowest-indexed failing trajectory is returned.
pub fn run_ensemble<E: Executor>(
    battery: &BatteryModel,
    spec: &EnsembleSpec,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    executor: &E,
) -> Result<EnsembleStats, EnsembleError> {
    if spec.n_trajectories == 0 {
        return Err(EnsembleError::InvalidSpec("n_trajectories must be at least 1"));
    }
    if rho0.dim() != 2 {
        return Err(EnsembleError::InvalidSpec("the battery is a qubit"));
    }
    let model = battery.to_lindblad();
    let omega0 = battery.omega0();
    let record_every = spec.record_every.max(1);
    let reference = evolve_unconditional_recorded(&model, rho0, grid, record_every)?;
    let n_times = reference.len();
    let times: Vec<f64> = (0..n_times).map(|k| grid.time(k * record_every)).collect();
    let windows = spec
        .windows
        .iter()
        .map(|w| window_indices(&times, w, grid.dt))
        .collect::<Result<Vec<_>, _>>()?;

    let stepper = Stepper::<Mat2>::new(&model, &spec.unravelling, grid.dt, spec.scheme)
        .map_err(|e| EnsembleError::Trajectory {
            index: 0,
            source: TrajectoryError::Setup(e),
        })?;
    let start = Mat2::from_matrix(rho0.as_matrix()).expect("qubit");
    let n = spec.n_trajectories;
    let (chunk_size, n_chunks) = chunk_layout(n);

    let run_chunk = |c: usize| -> Result<ChunkAccumulator, EnsembleError> {
        let mut acc = ChunkAccumulator::new(n_times, windows.len());
        let mut erg = vec![0.0; n_times];
        for index in (c * chunk_size)..((c + 1) * chunk_size).min(n) {
            let mut noise = TrajectoryRng::new(spec.master_seed, index as u64);
            simulate(&stepper, &start, grid.steps, &mut noise, |step, rho, _| {
                if step % record_every != 0 {
                    return;
                }
                let k = step / record_every;
                let m = rho.entries();
                let (energy, ergotropy) = qubit_observables(m, omega0);
                erg[k] = ergotropy;
                let t = &mut acc.times[k];
                t.ergotropy.push(ergotropy);
                t.energy.push(energy);
                t.entries[0].push(m[0].re);
                t.entries[1].push(m[1].re);
                t.entries[2].push(m[1].im);
                t.entries[3].push(m[3].re);
            })
            .map_err(|source| EnsembleError::Trajectory {
                index: index as u64,
                source,
            })?;
            for (w, idx) in acc.windows.iter_mut().zip(&windows) {
                let first: f64 = erg[idx.first..idx.split].iter().sum::<f64>()
                    / (idx.split - idx.first) as f64;
                let second: f64 =
                    erg[idx.split..=idx.last].iter().sum::<f64>() / (idx.last + 1 - idx.split) as f64;
                let all: f64 =
                    erg[idx.first..=idx.last].iter().sum::<f64>() / (idx.last + 1 - idx.first) as f64;
                w.average.push(all);
                w.trend.push(second - first);
            }
        }
        Ok(acc)
    };

    let mut total = ChunkAccumulator::new(n_times, windows.len());
    // per-block means of the state entries, for the jackknife
    let mut block_states: Vec<(u64, Vec<Mat2>)> = Vec::with_capacity(n_chunks);
    let mut wave_start = 0;
    while wave_start < n_chunks {
        let wave = CHUNKS_PER_WAVE.min(n_chunks - wave_start);
        let results = executor.map_indices(wave, |j| run_chunk(wave_start + j));
        for r in results {
            let acc = r?;
            let count = acc.times[0].ergotropy.count();
            block_states.push((count, acc.times.iter().map(|t| t.mean_state()).collect()));
            total.merge(&acc);
        }
        wave_start += wave;
    }

    let mut daemonic = Vec::with_capacity(n_times);
    let mut std_error = Vec::with_capacity(n_times);
    let mut mean_energy = Vec::with_capacity(n_times);
    let mut mean_state = Vec::with_capacity(n_times);
    let mut bloch_se = Vec::with_capacity(n_times);
    let mut mean_state_ergotropy = Vec::with_capacity(n_times);
    let mut unconditional_energy = Vec::with_capacity(n_times);
    let mut unconditional_ergotropy = Vec::with_capacity(n_times);
    for (k, t) in total.times.iter().enumerate() {
        daemonic.push(t.ergotropy.mean());
        std_error.push(t.ergotropy.std_error());
        mean_energy.push(t.energy.mean());
        let ms = t.mean_state();
        mean_state_ergotropy.push(qubit_observables(&ms.0, omega0).1);
        mean_state.push(DensityMatrix::new_unchecked(ms.to_matrix()));
        bloch_se.push(match (t.entries[1].std_error(), t.entries[2].std_error(), t.entries[3].std_error()) {
            (Some(x), Some(y), Some(z)) => Some([2.0 * x, 2.0 * y, 2.0 * z]),
            _ => None,
        });
        let (e, erg) = qubit_observables(reference[k].as_matrix().as_slice(), omega0);
        unconditional_energy.push(e);
        unconditional_ergotropy.push(erg);
    }

    let jackknife = (block_states.len() >= 2).then(|| {
        (0..n_times)
            .map(|k| {
                let total_sum = total.times[k].mean_state().scaled_real(n as f64);
                let pseudo: Vec<f64> = block_states
                    .iter()
                    .map(|(count, states)| {
                        let mut rest = total_sum;
                        rest.axpy(C64::new(-(*count as f64), 0.0), &states[k]);
                        let rest = rest.scaled_real(1.0 / (n as u64 - count) as f64);
                        qubit_observables(&rest.0, omega0).1
                    })
                    .collect();
                let b = pseudo.len() as f64;
                let mean = pseudo.iter().sum::<f64>() / b;
                let ss: f64 = pseudo.iter().map(|p| (p - mean) * (p - mean)).sum();
                sqrt((b - 1.0) / b * ss)
            })
            .collect()
    });

    let window_stats = spec
        .windows
        .iter()
        .zip(&windows)
        .zip(&total.windows)
        .map(|((w, idx), acc)| {
            let span = (idx.last + 1 - idx.first) as f64;
            WindowStats {
                window: *w,
                mean: acc.average.mean(),
                std_error: acc.average.std_error(),
                trend: acc.trend.mean(),
                trend_std_error: acc.trend.std_error(),
                unconditional_ergotropy: unconditional_ergotropy[idx.first..=idx.last]
                    .iter()
                    .sum::<f64>()
                    / span,
                unconditional_energy: unconditional_energy[idx.first..=idx.last]
                    .iter()
                    .sum::<f64>()
                    / span,
            }
        })
        .collect();

    let all_some = |v: Vec<Option<f64>>| v.into_iter().collect::<Option<Vec<f64>>>();
    Ok(EnsembleStats {
        times,
        n_trajectories: n,
        omega0,
        daemonic_ergotropy: daemonic,
        std_error: all_some(std_error),
        mean_energy,
        mean_state,
        mean_bloch_std_error: bloch_se.into_iter().collect(),
        mean_state_ergotropy,
        mean_state_ergotropy_std_error: jackknife,
        unconditional_state: reference,
        unconditional_energy,
        unconditional_ergotropy,
        windows: window_stats,
    })
}

/// Outcome of checking `𝓔(ρ_unc) ≤ 𝓔̄ ≤ E(ρ_unc)` up to three standard
/// errors.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub passed: bool,
    /// Largest excess over either bound after the `3·SE` allowance.
    pub worst_margin: f64,
    /// Record index of the worst margin.
    pub worst_index: usize,
    /// Record indices violating a bound.
    pub violations: Vec<usize>,
}

/// Excess below this (in units of `ω0`) is attributed to integrator
/// error rather than to a bound violation. It matters only at the first
/// few steps, where the trajectory spread and hence the standard error are
/// still of order `1e-12`.
pub const BOUNDS_NUMERICAL_FLOOR: f64 = 1e-9;

/// Flags record times where `𝓔̄ < 𝓔(ρ_unc) - 3·SE` or
/// `𝓔̄ > E(ρ_unc) + 3·SE`, beyond [`BOUNDS_NUMERICAL_FLOOR`].
pub fn check_bounds(stats: &EnsembleStats) -> BoundsReport {
    let floor = BOUNDS_NUMERICAL_FLOOR * stats.omega0;
    let mut worst_margin = f64::NEG_INFINITY;
    let mut worst_index = 0;
    let mut violations = Vec::new();
    for k in 0..stats.times.len() {
        let se3 = 3.0 * stats.std_error_at(k);
        let value = stats.daemonic_ergotropy[k];
        let below = (stats.unconditional_ergotropy[k] - se3) - value;
        let above = value - (stats.unconditional_energy[k] + se3);
        let margin = below.max(above);
        if margin > floor {
            violations.push(k);
        }
        if margin > worst_margin {
            worst_margin = margin;
            worst_index = k;
        }
    }
    BoundsReport {
        passed: violations.is_empty(),
        worst_margin,
        worst_index,
        violations,
    }
}

/// Steady-state value read off a tail window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyEstimate {
    pub value: f64,
    /// `√(SE² + (drift/2)²)`.
    pub error: f64,
    pub statistical_error: f64,
    /// Second-half minus first-half average over the window.
    pub drift: f64,
    pub tolerance: f64,
    pub converged: bool,
}

impl SteadyEstimate {
    pub fn require_converged(self) -> Result<Self, EnsembleError> {
        if self.converged {
            Ok(self)
        } else {
            Err(EnsembleError::NotConverged {
                drift: self.drift,
                tolerance: self.tolerance,
            })
        }
    }
}

/// Absolute drift tolerated on a noiseless window, in units of `ω0`.
pub const STEADY_DRIFT_FLOOR: f64 = 1e-4;

/// Reads the steady value from window statistics. The window counts as
/// converged when `|drift| ≤ max(3·SE_drift, 1e-4·ω0)`.
pub fn steady_estimate(window: &WindowStats, omega0: f64) -> SteadyEstimate {
    let se = window.std_error.unwrap_or(0.0);
    let trend_se = window.trend_std_error.unwrap_or(0.0);
    let tolerance = (3.0 * trend_se).max(STEADY_DRIFT_FLOOR * omega0);
    let drift = window.trend;
    SteadyEstimate {
        value: window.mean,
        error: sqrt(se * se + 0.25 * drift * drift),
        statistical_error: se,
        drift,
        tolerance,
        converged: drift.abs() <= tolerance,
    }
}

/// Fraction of the horizon used for steady-state estimates.
pub const STEADY_WINDOW_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyRow {
    pub alpha: f64,
    pub unravelling: UnravellingSpec,
    pub estimate: SteadyEstimate,
    pub analytic_ergotropy: f64,
    pub analytic_energy: f64,
}

/// Shared settings of a steady-state sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub n_trajectories: usize,
    pub master_seed: u64,
    pub scheme: Scheme,
    pub record_every: usize,
}

/// Steady daemonic ergotropy over the final 20% of `grid` for every
/// `(alpha, unravelling)` pair, in that nesting order. Point `j` uses the
/// seed `mix_seed(master_seed, j)`. Unconverged points are flagged in
/// their rows.
pub fn steady_state_sweep<E: Executor>(
    base: &BatteryModel,
    alphas: &[f64],
    unravellings: &[UnravellingSpec],
    sweep: &SweepSpec,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    executor: &E,
) -> Result<Vec<SteadyRow>, EnsembleError> {
    if grid.horizon() * base.kappa() < 10.0 - 1e-9 {
        return Err(EnsembleError::InvalidSpec("steady sweeps need a horizon of at least 10/κ"));
    }
    let window = TimeWindow::tail(grid.horizon(), STEADY_WINDOW_FRACTION);
    let mut rows = Vec::with_capacity(alphas.len() * unravellings.len());
    for &alpha in alphas {
        let model = base
            .with_alpha(alpha)
            .map_err(|_| EnsembleError::InvalidSpec("alpha must be non-negative and finite"))?;
        for u in unravellings {
            let seed = mix_seed(sweep.master_seed, rows.len() as u64);
            let spec = EnsembleSpec::new(sweep.n_trajectories, seed, *u)?
                .with_scheme(sweep.scheme)
                .with_record_every(sweep.record_every)
                .with_window(window);
            let stats = run_ensemble(&model, &spec, rho0, grid, executor)?;
            rows.push(SteadyRow {
                alpha,
                unravelling: *u,
                estimate: steady_estimate(&stats.windows[0], model.omega0()),
                analytic_ergotropy: model.steady_ergotropy_analytic(),
                analytic_energy: model.steady_energy_analytic(),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ergotropy::{energy, ergotropy, EnergySpec};
    use proptest::prelude::*;

    fn specs(eta: f64) -> Vec<UnravellingSpec> {
        vec![
            UnravellingSpec::photodetection(eta).unwrap(),
            UnravellingSpec::homodyne(0.0, eta).unwrap(),
            UnravellingSpec::homodyne(core::f64::consts::FRAC_PI_2, eta).unwrap(),
            UnravellingSpec::heterodyne(eta).unwrap(),
        ]
    }

    /// Runs jobs in reverse order to expose any order dependence.
    struct Reversed;

    impl Executor for Reversed {
        fn map_indices<T, F>(&self, n: usize, f: F) -> Vec<T>
        where
            T: Send,
            F: Fn(usize) -> T + Sync + Send,
        {
            let mut out: Vec<T> = (0..n).rev().map(f).collect();
            out.reverse();
            out
        }
    }

    proptest! {
        #[test]
        fn welford_matches_two_pass(xs in proptest::collection::vec(-10.0f64..10.0, 2..60), cut in 0usize..60) {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            let cut = cut.min(xs.len());
            let (mut a, mut b) = (Welford::default(), Welford::default());
            xs[..cut].iter().for_each(|&x| a.push(x));
            xs[cut..].iter().for_each(|&x| b.push(x));
            a.merge(&b);
            prop_assert!((a.mean() - mean).abs() < 1e-12);
            prop_assert!((a.variance().unwrap() - var).abs() < 1e-10 * (1.0 + var));
        }
    }

    #[test]
    fn welford_on_constant_input_is_exact() {
        let x = 0.1234567890123;
        let (mut a, mut b) = (Welford::default(), Welford::default());
        for _ in 0..37 {
            a.push(x);
        }
        for _ in 0..11 {
            b.push(x);
        }
        a.merge(&b);
        assert_eq!(a.mean(), x);
        assert_eq!(a.std_error(), Some(0.0));
        assert_eq!(Welford::default().std_error(), None);
    }

    #[test]
    fn observables_match_ergotropy_module() {
        let rho = DensityMatrix::from_bloch(0.3, -0.2, 0.5).unwrap();
        let h = EnergySpec::qubit(1.7);
        let (e, erg) = qubit_observables(rho.as_matrix().as_slice(), 1.7);
        assert!((e - energy(&rho, &h).unwrap()).abs() < 1e-15);
        assert!((erg - ergotropy(&rho, &h).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn unmonitored_ensemble_is_the_unconditional_solution() {
        let battery = BatteryModel::new(1.0, 1.0, 1.0).unwrap();
        let grid = TimeGrid::with_horizon(1e-3, 3.0).unwrap();
        let rho0 = DensityMatrix::ground(2);
        for u in specs(0.0) {
            let spec = EnsembleSpec::new(70, 3, u).unwrap().with_record_every(10);
            let stats = run_ensemble(&battery, &spec, &rho0, &grid, &Sequential).unwrap();
            assert_eq!(stats.daemonic_ergotropy, stats.unconditional_ergotropy);
            assert_eq!(stats.mean_state, stats.unconditional_state);
            assert!(stats.std_error.as_ref().unwrap().iter().all(|&s| s == 0.0));
            let report = check_bounds(&stats);
            assert!(report.passed);
            assert_eq!(report.worst_margin, 0.0);
        }
    }

    #[test]
    fn reduction_is_independent_of_scheduling() {
        let battery = BatteryModel::new(1.0, 1.0, 1.0).unwrap();
        let grid = TimeGrid::with_horizon(1e-3, 1.0).unwrap();
        let rho0 = DensityMatrix::ground(2);
        let spec = EnsembleSpec::new(300, 9, UnravellingSpec::heterodyne(0.5).unwrap())
            .unwrap()
            .with_record_every(20)
            .with_window(TimeWindow::new(0.5, 1.0).unwrap());
        let a = run_ensemble(&battery, &spec, &rho0, &grid, &Sequential).unwrap();
        let b = run_ensemble(&battery, &spec, &rho0, &grid, &Reversed).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_trajectory_has_no_error_bars() {
        let battery = BatteryModel::new(1.0, 1.0, 1.0).unwrap();
        let grid = TimeGrid::with_horizon(1e-3, 0.5).unwrap();
        let spec = EnsembleSpec::new(1, 1, UnravellingSpec::homodyne(0.0, 1.0).unwrap()).unwrap();
        let stats =
            run_ensemble(&battery, &spec, &DensityMatrix::ground(2), &grid, &Sequential).unwrap();
        assert!(stats.std_error.is_none());
        assert!(stats.mean_bloch_std_error.is_none());
        assert!(stats.mean_state_ergotropy_std_error.is_none());
        assert!(EnsembleSpec::new(0, 1, spec.unravelling).is_err());
    }

    #[test]
    fn corrupted_statistics_fail_the_bounds_check() {
        let battery = BatteryModel::new(1.0, 1.0, 1.0).unwrap();
        let grid = TimeGrid::with_horizon(1e-3, 2.0).unwrap();
        let spec = EnsembleSpec::new(200, 5, UnravellingSpec::homodyne(0.0, 0.4).unwrap())
            .unwrap()
            .with_record_every(10);
        let mut stats =
            run_ensemble(&battery, &spec, &DensityMatrix::ground(2), &grid, &Sequential).unwrap();
        assert!(check_bounds(&stats).passed);
        for v in stats.daemonic_ergotropy.iter_mut() {
            *v += 0.1;
        }
        let report = check_bounds(&stats);
        assert!(!report.passed);
        assert!(report.worst_margin > 0.0);
    }

    #[test]
    fn discarding_the_record_never_helps() {
        let battery = BatteryModel::new(1.0, 1.0, 1.0).unwrap();
        let grid = TimeGrid::with_horizon(1e-3, 3.0).unwrap();
        for u in specs(0.7) {
            let spec = EnsembleSpec::new(300, 12, u).unwrap().with_record_every(25);
            let stats =
                run_ensemble(&battery, &spec, &DensityMatrix::ground(2), &grid, &Sequential)
                    .unwrap();
            let jk = stats.mean_state_ergotropy_std_error.as_ref().unwrap();
            for k in 0..stats.times.len() {
                assert!(jk[k] >= 0.0);
                assert!(
                    stats.mean_state_ergotropy[k]
                        <= stats.daemonic_ergotropy[k] + 3.0 * stats.std_error_at(k) + 1e-12
                );
            }
        }
    }

    #[test]
    fn steady_estimate_flags_drift() {
        let window = WindowStats {
            window: TimeWindow::new(8.0, 10.0).unwrap(),
            mean: 0.3,
            std_error: Some(0.001),
            trend: 0.02,
            trend_std_error: Some(0.001),
            unconditional_ergotropy: 0.0,
            unconditional_energy: 0.0,
        };
        let e = steady_estimate(&window, 1.0);
        assert!(!e.converged);
        assert!(e.require_converged().is_err());
        let still = WindowStats {
            trend: 0.002,
            ..window
        };
        let e = steady_estimate(&still, 1.0);
        assert!(e.converged);
        assert!((e.error - sqrt(1e-6 + 1e-6)).abs() < 1e-15);
    }

    #[test]
    fn unmonitored_sweep_matches_analytic_steady_state() {
        let base = BatteryModel::new(1.0, 0.0, 1.0).unwrap();
        let grid = TimeGrid::with_horizon(1e-2, 30.0).unwrap();
        let sweep = SweepSpec {
            n_trajectories: 3,
            master_seed: 1,
            scheme: Scheme::MeasurementOperator,
            record_every: 10,
        };
        let rows = steady_state_sweep(
            &base,
            &[0.0, 0.3, 1.0],
            &[UnravellingSpec::photodetection(0.0).unwrap()],
            &sweep,
            &DensityMatrix::ground(2),
            &grid,
            &Sequential,
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].estimate.value, 0.0);
        for row in &rows {
            assert!(row.estimate.converged, "{row:?}");
            assert!((row.estimate.value - row.analytic_ergotropy).abs() < 1e-4, "{row:?}");
        }
        let short = TimeGrid::with_horizon(1e-2, 5.0).unwrap();
        assert!(steady_state_sweep(
            &base,
            &[0.3],
            &[UnravellingSpec::photodetection(0.0).unwrap()],
            &sweep,
            &DensityMatrix::ground(2),
            &short,
            &Sequential
        )
        .is_err());
    }

    #[test]
    fn window_needs_two_records() {
        let battery = BatteryModel::new(1.0, 1.0, 1.0).unwrap();
        let grid = TimeGrid::with_horizon(1e-2, 1.0).unwrap();
        let spec = EnsembleSpec::new(2, 1, UnravellingSpec::heterodyne(0.5).unwrap())
            .unwrap()
            .with_window(TimeWindow::new(2.0, 3.0).unwrap());
        assert!(matches!(
            run_ensemble(&battery, &spec, &DensityMatrix::ground(2), &grid, &Sequential),
            Err(EnsembleError::InvalidSpec(_))
        ));
    }

    #[test]
    fn trajectory_failures_carry_the_index() {
        let battery = BatteryModel::new(1.0, 0.0, 1.0).unwrap();
        let grid = TimeGrid::new(0.0, 0.2, 2).unwrap();
        let spec = EnsembleSpec::new(4, 1, UnravellingSpec::photodetection(1.0).unwrap()).unwrap();
        let err = run_ensemble(&battery, &spec, &DensityMatrix::basis(2, 1), &grid, &Sequential)
            .unwrap_err();
        assert!(matches!(err, EnsembleError::Trajectory { index: 0, .. }), "{err:?}");
    }
}
