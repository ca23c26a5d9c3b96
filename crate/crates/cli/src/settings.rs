use std::path::Path;

use clap::ValueEnum;
use privspi_core::CaptureConfig;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// L=64, B=8, mono: a full capture and attack takes well under a second.
    Desk,
    /// L=256, B=32, RGB: about three minutes per capture plus attack on one core.
    Paper,
}

impl Scale {
    pub fn preset(self) -> CaptureConfig {
        match self {
            Scale::Desk => CaptureConfig::desk(),
            Scale::Paper => CaptureConfig::paper(),
        }
    }
}

/// The scale preset with the keys of an optional TOML file laid over it.
pub fn resolve_config(scale: Scale, overrides: Option<&Path>) -> CliResult<CaptureConfig> {
    let base = scale.preset();
    let Some(path) = overrides else {
        return Ok(base);
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let user: toml::Table = text
        .parse()
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut merged: toml::Table = base.to_toml_string().parse().expect("preset serializes to TOML");
    merged.extend(user);
    let merged = toml::to_string(&merged).expect("table serializes");
    CaptureConfig::from_toml_str(&merged).map_err(|e| CliError::from(e).context(path.display()))
}
