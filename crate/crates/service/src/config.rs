//! Listen port, data directory and session defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::session::ConflictOrder;

pub const PORT_VAR: &str = "ONTOREPAIR_PORT";
pub const DATA_DIR_VAR: &str = "ONTOREPAIR_DATA_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid {var}: {value}")]
    Env { var: &'static str, value: String },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub port: u16,
    pub data_dir: PathBuf,
    /// Used for sessions that do not choose an order themselves.
    pub conflict_order: ConflictOrder,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { port: 8787, data_dir: PathBuf::from("ontorepair-data"), conflict_order: ConflictOrder::default() }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads an optional file, then applies the environment overrides.
    pub fn load(file: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.to_path_buf(), source })?;
                Self::from_toml(&text)?
            }
            None => ServiceConfig::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = get(PORT_VAR) {
            self.port = v.parse().map_err(|_| ConfigError::Env { var: PORT_VAR, value: v })?;
        }
        if let Some(v) = get(DATA_DIR_VAR) {
            self.data_dir = PathBuf::from(v);
        }
        Ok(())
    }
}
