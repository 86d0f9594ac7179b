//! The experiment commands. Each returns its tables and diagnostics;
//! writing happens once, afterwards, in [`crate::output::write_run`].

use daemonic_core::battery::{peak_ergotropy, peak_ergotropy_ratio, BatteryModel};
use daemonic_core::daemonic::{
    check_bounds, run_ensemble, steady_state_sweep, EnsembleSpec, EnsembleStats, Executor,
    SweepSpec,
};
use daemonic_core::ergotropy::{energy, ergotropy, ergotropy_spectral};
use daemonic_core::lindblad::{evolve_unconditional_recorded, steady_state};
use daemonic_core::trajectories::{mix_seed, UnravellingKind};
use serde_json::{json, Map, Value};

use crate::config::{ConfigError, ExperimentConfig, Resolved};
use crate::error::CliError;
use crate::output::{col, Cell, Column, ColumnType::*, RunOutput, SeedEntry, Table};

pub const TIME_SERIES_COLUMNS: &[Column] = &[
    col("time", Float),
    col("daemonic_ergotropy", Float),
    col("std_error", OptionalFloat),
    col("unconditional_ergotropy", Float),
    col("unconditional_energy", Float),
];

pub const REFERENCE_TIME_SERIES_COLUMNS: &[Column] = &[
    col("time", Float),
    col("daemonic_ergotropy", Float),
    col("std_error", OptionalFloat),
    col("unconditional_ergotropy", Float),
    col("unconditional_energy", Float),
    col("reference_unconditional_ergotropy", Float),
    col("reference_unconditional_energy", Float),
];

pub const SWEEP_COLUMNS: &[Column] = &[
    col("alpha", Float),
    col("unravelling", Text),
    col("phi", OptionalFloat),
    col("eta", Float),
    col("daemonic_ergotropy", Float),
    col("error", Float),
    col("statistical_error", Float),
    col("drift", Float),
    col("converged", Bool),
    col("analytic_unconditional_ergotropy", Float),
    col("analytic_unconditional_energy", Float),
];

pub const STEADY_COLUMNS: &[Column] = &[
    col("alpha", Float),
    col("kappa", Float),
    col("analytic_energy", Float),
    col("analytic_ergotropy", Float),
    col("numeric_energy", Float),
    col("numeric_ergotropy", Float),
];

fn phi_of(kind: UnravellingKind) -> Option<f64> {
    match kind {
        UnravellingKind::Homodyne { phi } => Some(phi),
        _ => None,
    }
}

fn require_unravellings(r: &Resolved) -> Result<(), ConfigError> {
    if r.unravellings.is_empty() {
        return Err(ConfigError::new(
            "unravelling",
            "at least one [[unravelling]] is required",
        ));
    }
    Ok(())
}

/// Runs one ensemble per configured unravelling; unravelling `j` uses the
/// seed `mix_seed(master_seed, j)`.
fn ensembles<E: Executor>(
    cfg: &ExperimentConfig,
    r: &Resolved,
    exec: &E,
) -> Result<Vec<(String, u64, EnsembleStats)>, CliError> {
    require_unravellings(r)?;
    let mut out = Vec::with_capacity(r.unravellings.len());
    for (j, (label, spec)) in r.unravellings.iter().enumerate() {
        let seed = mix_seed(cfg.ensemble.master_seed, j as u64);
        let ens = EnsembleSpec::new(cfg.ensemble.n, seed, *spec)?
            .with_scheme(cfg.ensemble.scheme.into())
            .with_record_every(r.record_every);
        let stats = run_ensemble(&r.battery, &ens, &r.rho0, &r.grid, exec)?;
        out.push((label.clone(), seed, stats));
    }
    Ok(out)
}

fn series_row(stats: &EnsembleStats, k: usize) -> Vec<Cell> {
    vec![
        Cell::Float(stats.times[k]),
        Cell::Float(stats.daemonic_ergotropy[k]),
        Cell::opt(stats.std_error.as_ref().map(|s| s[k])),
        Cell::Float(stats.unconditional_ergotropy[k]),
        Cell::Float(stats.unconditional_energy[k]),
    ]
}

fn seeds(runs: &[(String, u64, EnsembleStats)]) -> Vec<SeedEntry> {
    runs.iter()
        .map(|(label, seed, _)| SeedEntry {
            label: label.clone(),
            seed: *seed,
        })
        .collect()
}

/// Daemonic ergotropy against the unconditional bounds, one CSV per
/// unravelling. Diagnostics carry the bounds check.
pub fn figure2<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Result<RunOutput, CliError> {
    let r = cfg.resolve()?;
    let runs = ensembles(cfg, &r, exec)?;
    let mut tables = Vec::new();
    let mut diagnostics = Map::new();
    for (label, _, stats) in &runs {
        let mut table = Table::new(format!("figure2_{label}"), TIME_SERIES_COLUMNS);
        for k in 0..stats.times.len() {
            table.push(series_row(stats, k));
        }
        tables.push(table);
        let bounds = check_bounds(stats);
        diagnostics.insert(
            label.clone(),
            json!({
                "bounds_passed": bounds.passed,
                "worst_margin": bounds.worst_margin,
                "worst_time": stats.times[bounds.worst_index],
                "violations": bounds.violations.len(),
            }),
        );
    }
    Ok(RunOutput {
        tables,
        seeds: seeds(&runs),
        diagnostics: Value::Object(diagnostics),
    })
}

/// Time series as in [`figure2`] plus the unconditional curves from the
/// reference initial state (the ground state unless configured).
pub fn figure4<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Result<RunOutput, CliError> {
    let r = cfg.resolve()?;
    let reference = r
        .reference
        .clone()
        .unwrap_or_else(|| daemonic_core::qmat::DensityMatrix::ground(2));
    let lindblad = r.battery.to_lindblad();
    let h = r.battery.energy_spec();
    let ref_states = evolve_unconditional_recorded(&lindblad, &reference, &r.grid, r.record_every)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let ref_curves = ref_states
        .iter()
        .map(|s| Ok((ergotropy(s, &h)?, energy(s, &h)?)))
        .collect::<Result<Vec<_>, daemonic_core::ergotropy::ErgotropyError>>()
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    let runs = ensembles(cfg, &r, exec)?;
    let steady_energy = r.battery.steady_energy_analytic();
    let mut tables = Vec::new();
    let mut diagnostics = Map::new();
    for (label, _, stats) in &runs {
        let mut table = Table::new(format!("figure4_{label}"), REFERENCE_TIME_SERIES_COLUMNS);
        for k in 0..stats.times.len() {
            let mut row = series_row(stats, k);
            row.push(Cell::Float(ref_curves[k].0));
            row.push(Cell::Float(ref_curves[k].1));
            table.push(row);
        }
        tables.push(table);
        let last = stats.times.len() - 1;
        let excess = (0..stats.times.len())
            .map(|k| stats.daemonic_ergotropy[k] - ref_curves[k].1)
            .fold(f64::NEG_INFINITY, f64::max);
        diagnostics.insert(
            label.clone(),
            json!({
                "final_daemonic_ergotropy": stats.daemonic_ergotropy[last],
                "final_std_error": stats.std_error.as_ref().map(|s| s[last]),
                "steady_energy_analytic": steady_energy,
                "max_excess_over_reference_energy": excess,
            }),
        );
    }
    Ok(RunOutput {
        tables,
        seeds: seeds(&runs),
        diagnostics: Value::Object(diagnostics),
    })
}

/// Steady daemonic ergotropy over the configured drive sweep, one row per
/// `(alpha, unravelling)`. Unconverged points stay in the table with
/// `converged = false`.
pub fn figure3<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> Result<RunOutput, CliError> {
    let r = cfg.resolve()?;
    require_unravellings(&r)?;
    if r.alphas.is_empty() {
        return Err(ConfigError::new("sweep.alphas", "figure3 needs a [sweep] with drives").into());
    }
    if r.grid.horizon() * r.battery.kappa() < 10.0 - 1e-9 {
        return Err(ConfigError::new(
            "grid.horizon",
            "steady sweeps need a horizon of at least 10/kappa",
        )
        .into());
    }
    let specs: Vec<_> = r.unravellings.iter().map(|(_, s)| *s).collect();
    let sweep = SweepSpec {
        n_trajectories: cfg.ensemble.n,
        master_seed: cfg.ensemble.master_seed,
        scheme: cfg.ensemble.scheme.into(),
        record_every: r.record_every,
    };
    let rows = steady_state_sweep(
        &r.battery, &r.alphas, &specs, &sweep, &r.rho0, &r.grid, exec,
    )?;

    let mut table = Table::new("figure3_sweep", SWEEP_COLUMNS);
    let mut seed_entries = Vec::new();
    let mut unconverged = 0usize;
    for (j, row) in rows.iter().enumerate() {
        let label = &r.unravellings[j % specs.len()].0;
        seed_entries.push(SeedEntry {
            label: format!("alpha={}/{label}", row.alpha),
            seed: mix_seed(cfg.ensemble.master_seed, j as u64),
        });
        unconverged += usize::from(!row.estimate.converged);
        table.push(vec![
            Cell::Float(row.alpha),
            Cell::Text(label.clone()),
            Cell::opt(phi_of(row.unravelling.kind())),
            Cell::Float(row.unravelling.efficiency()),
            Cell::Float(row.estimate.value),
            Cell::Float(row.estimate.error),
            Cell::Float(row.estimate.statistical_error),
            Cell::Float(row.estimate.drift),
            Cell::Bool(row.estimate.converged),
            Cell::Float(row.analytic_ergotropy),
            Cell::Float(row.analytic_energy),
        ]);
    }
    let kappa = r.battery.kappa();
    Ok(RunOutput {
        tables: vec![table],
        seeds: seed_entries,
        diagnostics: json!({
            "unconverged_rows": unconverged,
            "peak_alpha": peak_ergotropy_ratio() * kappa,
            "peak_unconditional_ergotropy": peak_ergotropy(r.battery.omega0()),
        }),
    })
}

/// Closed-form steady energy and ergotropy next to the numerical
/// stationary state of the master equation, over the sweep drives (or the
/// model's single drive).
pub fn steady(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let r = cfg.resolve()?;
    let alphas = if r.alphas.is_empty() {
        vec![r.battery.alpha()]
    } else {
        r.alphas.clone()
    };
    let mut table = Table::new("steady_state", STEADY_COLUMNS);
    let mut worst = 0.0f64;
    for &alpha in &alphas {
        let model = r
            .battery
            .with_alpha(alpha)
            .map_err(|e| ConfigError::new("sweep.alphas", e.to_string()))?;
        let (e, erg) = numeric_steady(&model)?;
        let (ae, aerg) = (
            model.steady_energy_analytic(),
            model.steady_ergotropy_analytic(),
        );
        worst = worst.max((e - ae).abs()).max((erg - aerg).abs());
        table.push(vec![
            Cell::Float(alpha),
            Cell::Float(model.kappa()),
            Cell::Float(ae),
            Cell::Float(aerg),
            Cell::Float(e),
            Cell::Float(erg),
        ]);
    }
    Ok(RunOutput {
        tables: vec![table],
        seeds: Vec::new(),
        diagnostics: json!({
            "max_analytic_numeric_deviation": worst,
            "peak_alpha": peak_ergotropy_ratio() * r.battery.kappa(),
            "peak_unconditional_ergotropy": peak_ergotropy(r.battery.omega0()),
        }),
    })
}

/// Energy and ergotropy of the numerical stationary state.
pub fn numeric_steady(model: &BatteryModel) -> Result<(f64, f64), CliError> {
    let ss = steady_state(&model.to_lindblad()).map_err(|e| CliError::Numerical(e.to_string()))?;
    let h = model.energy_spec();
    let e = energy(&ss, &h).map_err(|e| CliError::Numerical(e.to_string()))?;
    let erg = ergotropy_spectral(&ss, &h)
        .map_err(|e| CliError::Numerical(e.to_string()))?
        .value;
    Ok((e, erg))
}
