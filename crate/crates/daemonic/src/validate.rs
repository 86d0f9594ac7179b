//! Fast invariant suite behind `daemonic validate`.

use std::fmt;
use std::time::Instant;

use daemonic_core::battery::{peak_ergotropy, peak_ergotropy_ratio, BatteryModel};
use daemonic_core::daemonic::{check_bounds, run_ensemble, EnsembleSpec, Sequential};
use daemonic_core::ergotropy::{
    daemonic_ergotropy_bipartite, energy, ergotropy_qubit_closed_form, ergotropy_spectral,
    projective_povm, EnergySpec,
};
use daemonic_core::lindblad::TimeGrid;
use daemonic_core::qmat::{purity, ComplexMatrix, DensityMatrix};
use daemonic_core::trajectories::{
    run_trajectory, NoiseSource, Scheme, StoredStates, TrajectoryRng, UnravellingSpec,
};

use crate::commands::numeric_steady;
use crate::random;

/// Closed-form steady-state results under test. The suite compares them
/// with the numerical pipeline, so a corrupted entry must fail.
#[derive(Clone, Copy)]
pub struct Analytic {
    pub steady_energy: fn(&BatteryModel) -> f64,
    pub steady_ergotropy: fn(&BatteryModel) -> f64,
    pub peak_ratio: fn() -> f64,
    pub peak_value: fn(f64) -> f64,
}

impl Default for Analytic {
    fn default() -> Self {
        Self {
            steady_energy: BatteryModel::steady_energy_analytic,
            steady_ergotropy: BatteryModel::steady_ergotropy_analytic,
            peak_ratio: peak_ergotropy_ratio,
            peak_value: peak_ergotropy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_names(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {} ({:.2}s): {}", c.name, c.seconds, c.detail)?;
        }
        Ok(())
    }
}

type Outcome = Result<String, String>;

fn timed(name: &'static str, f: impl FnOnce() -> Outcome) -> Check {
    let start = Instant::now();
    let result = f();
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Check {
        name,
        passed,
        detail,
        seconds,
    }
}

fn err<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn run_suite(analytic: &Analytic) -> Report {
    let checks = vec![
        timed("steady_state_analytic", || steady_state_analytic(analytic)),
        timed("peak_ergotropy", || peak(analytic)),
        timed("ergotropy_closed_form", closed_form),
        timed("daemonic_pure_state_saturation", pure_saturation),
        timed("daemonic_static_bounds", static_bounds),
        timed("eta_zero_reduction", eta_zero),
        timed("trajectory_bounds", trajectory_bounds),
        timed("pure_state_purity", purity_preserved),
    ];
    Report { checks }
}

fn steady_state_analytic(a: &Analytic) -> Outcome {
    let mut worst = 0.0f64;
    for &kappa in &[1.0, 0.5, 2.0] {
        for &alpha in &[0.0, 0.1, 0.3, 1.0, 2.5, 10.0] {
            let m = BatteryModel::new(1.3, alpha, kappa).map_err(err)?;
            let (e, erg) = numeric_steady(&m).map_err(err)?;
            let dev = (e - (a.steady_energy)(&m))
                .abs()
                .max((erg - (a.steady_ergotropy)(&m)).abs());
            if dev > 1e-9 {
                return Err(format!(
                    "alpha={alpha} kappa={kappa}: closed form deviates from the stationary state by {dev:e}"
                ));
            }
            worst = worst.max(dev);
        }
    }
    Ok(format!("18 drives, worst deviation {worst:e}"))
}

fn peak(a: &Analytic) -> Outcome {
    let omega0 = 1.0;
    let ratio = (a.peak_ratio)();
    let (_, at_peak) =
        numeric_steady(&BatteryModel::new(omega0, ratio, 1.0).map_err(err)?).map_err(err)?;
    if (at_peak - (a.peak_value)(omega0)).abs() > 1e-9 {
        return Err(format!(
            "ergotropy at the peak drive is {at_peak}, closed form gives {}",
            (a.peak_value)(omega0)
        ));
    }
    for side in [ratio - 1e-3, ratio + 1e-3] {
        let (_, v) =
            numeric_steady(&BatteryModel::new(omega0, side, 1.0).map_err(err)?).map_err(err)?;
        if v >= at_peak {
            return Err(format!("ergotropy at alpha={side} is not below the peak"));
        }
    }
    Ok(format!("peak {at_peak} at alpha/kappa={ratio}"))
}

fn closed_form() -> Outcome {
    let mut rng = TrajectoryRng::new(0x5eed, 1);
    let h = EnergySpec::qubit(0.7);
    let mut worst = 0.0f64;
    for _ in 0..2000 {
        let rho = random::mixed_state(&mut rng, 2);
        let a = ergotropy_spectral(&rho, &h).map_err(err)?.value;
        let b = ergotropy_qubit_closed_form(&rho, &h).map_err(err)?;
        worst = worst.max((a - b).abs());
    }
    if worst > 1e-10 {
        return Err(format!(
            "closed form and spectral ergotropy differ by {worst:e}"
        ));
    }
    Ok(format!("2000 states, worst {worst:e}"))
}

/// Random non-degenerate Hamiltonian in a random eigenbasis.
fn bipartite_spec(dim_s: usize, rng: &mut TrajectoryRng) -> Result<EnergySpec, String> {
    let levels: Vec<f64> = (0..dim_s).map(|k| k as f64 + 0.3 * rng.uniform()).collect();
    let u = random::unitary(rng, dim_s);
    let h = &(&u * &ComplexMatrix::from_real_diagonal(&levels)) * &u.adjoint();
    EnergySpec::shifted(h.hermitian_part()).map_err(err)
}

fn pure_saturation() -> Outcome {
    let mut rng = TrajectoryRng::new(0x5eed, 2);
    let mut worst = 0.0f64;
    for &(ds, da) in &[(2, 2), (2, 3), (3, 2)] {
        for _ in 0..20 {
            let h = bipartite_spec(ds, &mut rng)?;
            let psi = random::pure_state(&mut rng, ds * da);
            let rho = DensityMatrix::pure(&psi).map_err(err)?;
            let rho_s =
                DensityMatrix::new(rho.as_matrix().partial_trace_second(ds, da).map_err(err)?)
                    .map_err(err)?;
            let povm = projective_povm(&random::unitary(&mut rng, da)).map_err(err)?;
            let d = daemonic_ergotropy_bipartite(&rho, &povm, &h)
                .map_err(err)?
                .value;
            worst = worst.max((d - energy(&rho_s, &h).map_err(err)?).abs());
        }
    }
    if worst > 1e-8 {
        return Err(format!(
            "pure-state daemonic ergotropy misses the energy by {worst:e}"
        ));
    }
    Ok(format!("60 states, worst {worst:e}"))
}

fn static_bounds() -> Outcome {
    let mut rng = TrajectoryRng::new(0x5eed, 3);
    for _ in 0..60 {
        let h = bipartite_spec(2, &mut rng)?;
        let rho = random::mixed_state(&mut rng, 6);
        let rho_s = DensityMatrix::new(rho.as_matrix().partial_trace_second(2, 3).map_err(err)?)
            .map_err(err)?;
        let povm = projective_povm(&random::unitary(&mut rng, 3)).map_err(err)?;
        let d = daemonic_ergotropy_bipartite(&rho, &povm, &h)
            .map_err(err)?
            .value;
        let lower = ergotropy_spectral(&rho_s, &h).map_err(err)?.value;
        let upper = energy(&rho_s, &h).map_err(err)?;
        if d < lower - 1e-10 || d > upper + 1e-10 {
            return Err(format!("daemonic ergotropy {d} outside [{lower}, {upper}]"));
        }
    }
    Ok("60 mixed bipartite states".into())
}

fn specs(eta: f64) -> Result<Vec<UnravellingSpec>, String> {
    Ok(vec![
        UnravellingSpec::photodetection(eta).map_err(err)?,
        UnravellingSpec::homodyne(0.0, eta).map_err(err)?,
        UnravellingSpec::homodyne(std::f64::consts::FRAC_PI_2, eta).map_err(err)?,
        UnravellingSpec::heterodyne(eta).map_err(err)?,
    ])
}

fn eta_zero() -> Outcome {
    let battery = BatteryModel::new(1.0, 1.0, 1.0).map_err(err)?;
    let grid = TimeGrid::with_horizon(1e-3, 1.0).map_err(err)?;
    for u in specs(0.0)? {
        let spec = EnsembleSpec::new(8, 11, u)
            .map_err(err)?
            .with_record_every(50);
        let stats = run_ensemble(
            &battery,
            &spec,
            &DensityMatrix::ground(2),
            &grid,
            &Sequential,
        )
        .map_err(err)?;
        if stats.daemonic_ergotropy != stats.unconditional_ergotropy
            || stats
                .std_error
                .as_ref()
                .is_some_and(|s| s.iter().any(|&x| x != 0.0))
        {
            return Err(format!(
                "{}: unmonitored ensemble differs from the master equation",
                u.kind().short_name()
            ));
        }
    }
    Ok("all unravellings reproduce the unconditional ergotropy exactly".into())
}

fn trajectory_bounds() -> Outcome {
    let battery = BatteryModel::new(1.0, 1.0, 1.0).map_err(err)?;
    let grid = TimeGrid::with_horizon(1e-3, 2.0).map_err(err)?;
    let mut worst = f64::NEG_INFINITY;
    for u in specs(0.4)? {
        let spec = EnsembleSpec::new(200, 12, u)
            .map_err(err)?
            .with_record_every(20);
        // From the ground state the first clicks are too rare for n = 200
        // to sample.
        let stats = run_ensemble(
            &battery,
            &spec,
            &DensityMatrix::maximally_mixed(2),
            &grid,
            &Sequential,
        )
        .map_err(err)?;
        let report = check_bounds(&stats);
        if !report.passed {
            return Err(format!(
                "{}: bounds violated at t={} by {:e}",
                u.kind().short_name(),
                stats.times[report.worst_index],
                report.worst_margin
            ));
        }
        worst = worst.max(report.worst_margin);
    }
    Ok(format!(
        "mixed start, eta=0.4, n=200, worst margin {worst:e}"
    ))
}

fn purity_preserved() -> Outcome {
    let battery = BatteryModel::new(1.0, 1.0, 1.0).map_err(err)?;
    let grid = TimeGrid::with_horizon(1e-3, 4.0).map_err(err)?;
    let mut worst = 1.0f64;
    for u in specs(1.0)? {
        let record = run_trajectory(
            &battery.to_lindblad(),
            &u,
            &DensityMatrix::ground(2),
            &grid,
            13,
            Scheme::MeasurementOperator,
        )
        .map_err(err)?;
        if let StoredStates::Full(states) = &record.states {
            for s in states {
                worst = worst.min(purity(s));
            }
        }
    }
    if worst < 0.999 {
        return Err(format!("conditional purity dropped to {worst}"));
    }
    Ok(format!("minimum purity {worst}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let report = run_suite(&Analytic::default());
        assert!(report.passed(), "{report}");
    }

    fn tampered_ergotropy(m: &BatteryModel) -> f64 {
        // κ instead of κ² in the denominator
        let (a2, k) = (m.alpha() * m.alpha(), m.kappa());
        m.omega0() * 0.5 * k * ((16.0 * a2 + k * k).sqrt() - k) / (8.0 * a2 + k)
    }

    #[test]
    fn tampered_closed_form_fails_by_name() {
        let analytic = Analytic {
            steady_ergotropy: tampered_ergotropy,
            ..Analytic::default()
        };
        let report = run_suite(&analytic);
        assert_eq!(report.failed_names(), vec!["steady_state_analytic"]);
        assert!(report.to_string().contains("FAIL steady_state_analytic"));
    }
}
