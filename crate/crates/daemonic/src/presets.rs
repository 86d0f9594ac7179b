//! Preset configurations shipped with the crate, one per command.

use crate::config::{ConfigError, ExperimentConfig};

pub const FIGURE2: &str = include_str!("../presets/figure2.toml");
pub const FIGURE3: &str = include_str!("../presets/figure3.toml");
pub const FIGURE4: &str = include_str!("../presets/figure4.toml");
pub const STEADY: &str = include_str!("../presets/steady.toml");

pub fn preset(command: &str) -> Option<&'static str> {
    match command {
        "figure2" => Some(FIGURE2),
        "figure3" => Some(FIGURE3),
        "figure4" => Some(FIGURE4),
        "steady" => Some(STEADY),
        _ => None,
    }
}

pub fn load(command: &str) -> Result<ExperimentConfig, ConfigError> {
    let text = preset(command)
        .ok_or_else(|| ConfigError::new("command", format!("no preset for {command}")))?;
    ExperimentConfig::from_toml(text)
}
