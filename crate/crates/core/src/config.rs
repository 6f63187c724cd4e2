use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CONFIG_ENV: &str = "TMEV_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Analysis and search knobs. Every field has a default so a config file
/// only needs to name the values it overrides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Maximum number of functions a tPath may span.
    pub depth: usize,
    /// Loop unroll bound used before dependency computation.
    pub unroll: usize,
    pub fee_bps: u32,
    /// Searcher's X budget in base units.
    pub budget: u64,
    pub value_residual_y: bool,
    /// Seed for fixture and corpus generation only.
    pub seed: u64,
    pub track_control_origins: bool,
    /// Mempool window for multi-call watch keys.
    pub window: usize,
    /// Interpreter steps allowed per transaction.
    pub step_budget: u64,
    pub solver_iterations: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            depth: 3,
            unroll: 1,
            fee_bps: 0,
            budget: 100_000,
            value_residual_y: false,
            seed: 0,
            track_control_origins: true,
            window: 16,
            step_budget: 10_000,
            solver_iterations: 20,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.depth < 1 {
            return Err(ConfigError::Invalid("depth must be at least 1".into()));
        }
        if self.unroll < 1 {
            return Err(ConfigError::Invalid("unroll must be at least 1".into()));
        }
        if self.fee_bps >= 10_000 {
            return Err(ConfigError::Invalid("fee_bps must be below 10000".into()));
        }
        if self.window < 1 {
            return Err(ConfigError::Invalid("window must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Config, ConfigError> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: "<inline>".into(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Config::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.display().to_string(), message },
            other => other,
        })
    }

    /// Defaults, overridden by the file named in `TMEV_CONFIG` when set.
    pub fn from_env() -> Result<Config, ConfigError> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Config::load(Path::new(&p)),
            _ => Ok(Config::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_override() {
        let c = Config::from_toml("depth = 4\nvalue_residual_y = true\n").unwrap();
        assert_eq!(c.depth, 4);
        assert!(c.value_residual_y);
        assert_eq!(c.unroll, 1);
        assert!(c.track_control_origins);
    }

    #[test]
    fn rejects_zero_depth_and_unknown_keys() {
        assert!(matches!(Config::from_toml("depth = 0"), Err(ConfigError::Invalid(_))));
        assert!(matches!(Config::from_toml("dpeth = 3"), Err(ConfigError::Parse { .. })));
    }
}
