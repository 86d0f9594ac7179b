//! Experiment configuration: a TOML document with `[model]`,
//! `[initial_state]`, `[grid]`, `[ensemble]`, `[[unravelling]]`, `[sweep]`,
//! `[reference]` and `[output]` tables.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use daemonic_core::battery::{peak_ergotropy_ratio, BatteryModel};
use daemonic_core::lindblad::TimeGrid;
use daemonic_core::qmat::DensityMatrix;
use daemonic_core::trajectories::{Scheme, UnravellingKind, UnravellingSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A validation failure pinned to a config field, e.g. `grid.dt`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub initial_state: StateConfig,
    pub grid: GridConfig,
    pub ensemble: EnsembleConfig,
    #[serde(default, rename = "unravelling", skip_serializing_if = "Vec::is_empty")]
    pub unravellings: Vec<UnravellingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<StateConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "one")]
    pub omega0: f64,
    pub alpha: f64,
    #[serde(default = "one")]
    pub kappa: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    #[default]
    Ground,
    Excited,
    MaximallyMixed,
    Bloch,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub kind: StateKind,
    /// Required when `kind = "bloch"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloch: Option<[f64; 3]>,
}

impl StateConfig {
    pub fn named(kind: StateKind) -> Self {
        Self { kind, bloch: None }
    }

    fn build(&self, field: &str) -> Result<DensityMatrix, ConfigError> {
        match (self.kind, self.bloch) {
            (StateKind::Ground, None) => Ok(DensityMatrix::ground(2)),
            (StateKind::Excited, None) => Ok(DensityMatrix::basis(2, 1)),
            (StateKind::MaximallyMixed, None) => Ok(DensityMatrix::maximally_mixed(2)),
            (StateKind::Bloch, Some([x, y, z])) => DensityMatrix::from_bloch(x, y, z)
                .map_err(|e| ConfigError::new(format!("{field}.bloch"), e.to_string())),
            (StateKind::Bloch, None) => Err(ConfigError::new(
                format!("{field}.bloch"),
                "required when kind = \"bloch\"",
            )),
            (_, Some(_)) => Err(ConfigError::new(
                format!("{field}.bloch"),
                "only allowed when kind = \"bloch\"",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Output keeps every `record_every`-th step.
    #[serde(default = "one_usize")]
    pub record_every: usize,
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Em,
    #[default]
    Mo,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Em => Scheme::EulerMaruyama,
            SchemeName::Mo => Scheme::MeasurementOperator,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub scheme: SchemeName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum UnravellingName {
    Pd,
    Hod,
    Hed,
}

impl UnravellingName {
    pub fn as_str(&self) -> &'static str {
        match self {
            UnravellingName::Pd => "pd",
            UnravellingName::Hod => "hod",
            UnravellingName::Hed => "hed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnravellingConfig {
    pub kind: UnravellingName,
    pub eta: f64,
    /// Homodyne phase in radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    /// Name used in file names and tables; defaults to the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl UnravellingConfig {
    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.kind.as_str())
    }

    fn build(&self, field: &str) -> Result<UnravellingSpec, ConfigError> {
        let kind = match (self.kind, self.phi) {
            (UnravellingName::Pd, None) => UnravellingKind::PhotoDetection,
            (UnravellingName::Hed, None) => UnravellingKind::Heterodyne,
            (UnravellingName::Hod, phi) => UnravellingKind::Homodyne {
                phi: phi.unwrap_or(0.0),
            },
            (_, Some(_)) => {
                return Err(ConfigError::new(
                    format!("{field}.phi"),
                    "only homodyne unravellings take a phase",
                ))
            }
        };
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(ConfigError::new(
                format!("{field}.eta"),
                format!("efficiency must lie in [0, 1], got {}", self.eta),
            ));
        }
        UnravellingSpec::new(kind, self.eta)
            .map_err(|e| ConfigError::new(format!("{field}.phi"), e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Drive strengths, in the same units as `kappa`.
    pub alphas: Vec<f64>,
    /// Also evaluate the drive `α = κ·√((1 + √2)/8)` of peak ergotropy.
    #[serde(default)]
    pub include_peak: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub unravelling: Option<UnravellingName>,
    pub phi: Option<f64>,
    pub scheme: Option<SchemeName>,
    pub out: Option<PathBuf>,
}

/// A validated configuration turned into core types.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub battery: BatteryModel,
    pub rho0: DensityMatrix,
    pub reference: Option<DensityMatrix>,
    pub grid: TimeGrid,
    pub record_every: usize,
    pub unravellings: Vec<(String, UnravellingSpec)>,
    /// Sweep drives in ascending order, peak included when requested.
    pub alphas: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| locate_field(text, s.start))
                .unwrap_or_else(|| "config".to_string());
            ConfigError::new(field, e.message().to_string())
        })
    }

    /// Reads a TOML config, or the `config` object of a run manifest when
    /// the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| ConfigError::new("--config", e.to_string()))?;
            let config = value
                .get("config")
                .ok_or_else(|| ConfigError::new("config", "manifest has no config object"))?;
            return serde_json::from_value(config.clone())
                .map_err(|e| ConfigError::new("config", e.to_string()));
        }
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.n {
            self.ensemble.n = n;
        }
        if let Some(seed) = o.seed {
            self.ensemble.master_seed = seed;
        }
        if let Some(dt) = o.dt {
            self.grid.dt = dt;
        }
        if let Some(horizon) = o.horizon {
            self.grid.horizon = horizon;
        }
        if let Some(scheme) = o.scheme {
            self.ensemble.scheme = scheme;
        }
        if let Some(alpha) = o.alpha {
            self.model.alpha = alpha;
            if let Some(sweep) = &mut self.sweep {
                sweep.alphas = vec![alpha];
                sweep.include_peak = false;
            }
        }
        if let Some(kind) = o.unravelling {
            let fallback_eta = self.unravellings.first().map_or(1.0, |u| u.eta);
            self.unravellings.retain(|u| u.kind == kind);
            if self.unravellings.is_empty() {
                self.unravellings.push(UnravellingConfig {
                    kind,
                    eta: fallback_eta,
                    phi: None,
                    label: None,
                });
            }
        }
        if let Some(eta) = o.eta {
            for u in &mut self.unravellings {
                u.eta = eta;
            }
        }
        if let Some(phi) = o.phi {
            for u in &mut self.unravellings {
                if u.kind == UnravellingName::Hod {
                    u.phi = Some(phi);
                }
            }
        }
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        // Overrides can merge formerly distinct entries.
        let mut seen = BTreeSet::new();
        self.unravellings.retain(|u| {
            seen.insert((
                u.label().to_string(),
                u.eta.to_bits(),
                u.phi.map(f64::to_bits),
            ))
        });
    }

    /// Checks every field and builds the core objects.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let m = &self.model;
        let battery = BatteryModel::new(m.omega0, m.alpha, m.kappa).map_err(|e| {
            let field = match e {
                daemonic_core::battery::BatteryError::InvalidOmega0(_) => "model.omega0",
                daemonic_core::battery::BatteryError::InvalidAlpha(_) => "model.alpha",
                daemonic_core::battery::BatteryError::InvalidKappa(_) => "model.kappa",
            };
            ConfigError::new(field, e.to_string())
        })?;
        let rho0 = self.initial_state.build("initial_state")?;
        let reference = self.reference.map(|r| r.build("reference")).transpose()?;

        let g = &self.grid;
        if !(g.dt > 0.0 && g.dt.is_finite()) {
            return Err(ConfigError::new(
                "grid.dt",
                format!("must be positive, got {}", g.dt),
            ));
        }
        if !(g.horizon >= g.dt && g.horizon.is_finite()) {
            return Err(ConfigError::new(
                "grid.horizon",
                format!("must be finite and at least dt, got {}", g.horizon),
            ));
        }
        if g.record_every == 0 {
            return Err(ConfigError::new("grid.record_every", "must be at least 1"));
        }
        let grid = TimeGrid::with_horizon(g.dt, g.horizon)
            .map_err(|e| ConfigError::new("grid", e.to_string()))?;

        if self.ensemble.n == 0 {
            return Err(ConfigError::new("ensemble.n", "must be at least 1"));
        }

        let mut labels = BTreeSet::new();
        let mut unravellings = Vec::with_capacity(self.unravellings.len());
        for (j, u) in self.unravellings.iter().enumerate() {
            let field = format!("unravelling[{j}]");
            let label = u.label();
            if label.is_empty()
                || !label
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
            {
                return Err(ConfigError::new(
                    format!("{field}.label"),
                    "labels use ASCII letters, digits, '_', '-' and '.' only",
                ));
            }
            if !labels.insert(label.to_string()) {
                return Err(ConfigError::new(
                    format!("{field}.label"),
                    format!("duplicate label {label:?}"),
                ));
            }
            unravellings.push((label.to_string(), u.build(&field)?));
        }

        let mut alphas = Vec::new();
        if let Some(sweep) = &self.sweep {
            for (j, &a) in sweep.alphas.iter().enumerate() {
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(ConfigError::new(
                        format!("sweep.alphas[{j}]"),
                        format!("must be non-negative and finite, got {a}"),
                    ));
                }
                alphas.push(a);
            }
            if sweep.include_peak {
                alphas.push(peak_ergotropy_ratio() * m.kappa);
            }
            alphas.sort_by(f64::total_cmp);
            alphas.dedup();
        }

        if self.output.formats.is_empty() {
            return Err(ConfigError::new(
                "output.formats",
                "at least one format is required",
            ));
        }

        Ok(Resolved {
            battery,
            rho0,
            reference,
            grid,
            record_every: g.record_every,
            unravellings,
            alphas,
        })
    }
}

/// Dotted path of the table enclosing byte `offset`, for error messages.
fn locate_field(text: &str, offset: usize) -> String {
    let head = &text[..offset.min(text.len())];
    let table = head
        .lines()
        .rev()
        .find_map(|l| {
            let l = l.trim();
            l.starts_with('[')
                .then(|| l.trim_matches(|c| c == '[' || c == ']').to_string())
        })
        .unwrap_or_default();
    let key = text[head.rfind('\n').map_or(0, |i| i + 1)..]
        .split(['=', '\n'])
        .next()
        .unwrap_or("")
        .trim()
        .to_string();
    match (table.is_empty(), key.is_empty() || key.starts_with('[')) {
        (true, true) => "config".to_string(),
        (true, false) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
alpha = 1.0

[grid]
dt = 0.001
horizon = 2.0

[ensemble]
n = 10
master_seed = 7

[[unravelling]]
kind = "hod"
eta = 0.4
phi = 1.5
"#;

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let r = cfg.resolve().unwrap();
        assert_eq!(r.battery.kappa(), 1.0);
        assert_eq!(r.grid.steps, 2000);
        assert_eq!(r.unravellings[0].0, "hod");
        assert_eq!(cfg.ensemble.scheme, SchemeName::Mo);
        assert_eq!(cfg.output.formats, vec![Format::Csv, Format::Json]);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace("dt = 0.001", "dt = -1.0");
        let e = ExperimentConfig::from_toml(&bad)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert_eq!(e.field, "grid.dt");

        let bad = MINIMAL.replace("eta = 0.4", "eta = 1.5");
        let e = ExperimentConfig::from_toml(&bad)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert_eq!(e.field, "unravelling[0].eta");

        let bad = MINIMAL.replace("n = 10", "n = \"ten\"");
        let e = ExperimentConfig::from_toml(&bad).unwrap_err();
        assert_eq!(e.field, "ensemble.n");

        let bad = MINIMAL.replace("master_seed = 7", "master_seed = 7\nworkers = 3");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn overrides_rewrite_fields() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        cfg.apply(&Overrides {
            unravelling: Some(UnravellingName::Pd),
            eta: Some(0.9),
            n: Some(3),
            ..Default::default()
        });
        assert_eq!(cfg.unravellings.len(), 1);
        assert_eq!(cfg.unravellings[0].kind, UnravellingName::Pd);
        assert_eq!(cfg.unravellings[0].eta, 0.9);
        assert_eq!(cfg.ensemble.n, 3);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn sweep_adds_peak_in_order() {
        let text = format!("{MINIMAL}\n[sweep]\nalphas = [1.0, 0.0]\ninclude_peak = true\n");
        let r = ExperimentConfig::from_toml(&text)
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(r.alphas.len(), 3);
        assert!((r.alphas[1] - peak_ergotropy_ratio()).abs() < 1e-15);
    }
}
