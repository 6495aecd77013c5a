//! `odflow.toml`: defaults for every command. Command-line flags win.

use std::path::{Path, PathBuf};

use odflow::layouts::{Canvas, LayoutParams};
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_CONFIG: &str = "odflow.toml";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub canvas: CanvasConfig,
    pub layout: LayoutParams,
    pub export3d: Export3dConfig,
    pub serve: ServeConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CanvasConfig {
    pub width: f64,
    pub height: f64,
}

impl Default for CanvasConfig {
    fn default() -> Self {
        let c = Canvas::default();
        Self {
            width: c.width,
            height: c.height,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Export3dConfig {
    pub samples: Option<usize>,
    pub height_range: Option<[f64; 2]>,
    pub radius_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub host: Option<String>,
    pub port: Option<u16>,
    pub fixtures_dir: Option<PathBuf>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        toml::from_str(text).map_err(|e| CliError::validation("ConfigError", e.to_string()))
    }

    /// Reads `path`, or `odflow.toml` in the working directory when present.
    pub fn load(path: Option<&Path>) -> Result<Config, CliError> {
        let path = match path {
            Some(p) => p.to_path_buf(),
            None if Path::new(DEFAULT_CONFIG).is_file() => PathBuf::from(DEFAULT_CONFIG),
            None => return Ok(Config::default()),
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::validation("ConfigError", format!("{}: {e}", path.display())))?;
        Config::parse(&text)
    }
}
