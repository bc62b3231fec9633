//! Command-line front end: scenario files, run modes and reports.

pub mod config;
pub mod report;
pub mod run;

use std::path::Path;

use config::{ConfigError, ScenarioConfig};

/// Reads a scenario from a JSON file, or from a built-in preset when
/// `source` is `preset:<name>`.
pub fn load(source: &str) -> Result<ScenarioConfig, ConfigError> {
    if let Some(name) = source.strip_prefix("preset:") {
        let preset = qpathnet::scenarios::preset(name).map_err(|e| ConfigError {
            field: String::new(),
            message: e.to_string(),
        })?;
        return Ok(ScenarioConfig::from_preset(&preset));
    }
    let text = std::fs::read_to_string(Path::new(source)).map_err(|e| ConfigError {
        field: String::new(),
        message: format!("cannot read {source}: {e}"),
    })?;
    ScenarioConfig::from_json(&text)
}
