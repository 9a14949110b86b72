//! Flat `key=value` configuration files mirroring every command-line flag.
//!
//! A flag given on the command line wins over the config file; the config
//! file wins over the built-in default. Keys use the flag spelling without
//! the leading dashes, e.g. `max-init-deg=90`.

use std::collections::HashMap;
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Default, Clone)]
pub struct ConfigMap(HashMap<String, String>);

impl ConfigMap {
    pub fn empty() -> Self {
        ConfigMap(HashMap::new())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
        let mut map = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::schema(format!(
                    "{} line {}: expected key=value, got `{raw}`",
                    path.display(),
                    i + 1
                )));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigMap(map))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|s| s.as_str())
    }

    /// CLI value, else config value, else default.
    pub fn resolve<T: std::str::FromStr>(
        &self,
        cli: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        match cli {
            Some(v) => Ok(v),
            None => self.parse_key(key)?.map_or(Ok(default), Ok),
        }
    }

    /// CLI value, else config value, else `None`.
    pub fn resolve_opt<T: std::str::FromStr>(
        &self,
        cli: Option<T>,
        key: &str,
    ) -> Result<Option<T>, CliError> {
        match cli {
            Some(v) => Ok(Some(v)),
            None => self.parse_key(key),
        }
    }

    /// CLI value, else config value, else a schema error naming the flag.
    pub fn resolve_required<T: std::str::FromStr>(
        &self,
        cli: Option<T>,
        key: &str,
    ) -> Result<T, CliError> {
        self.resolve_opt(cli, key)?
            .ok_or_else(|| CliError::schema(format!("missing required option --{key}")))
    }

    fn parse_key<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::schema(format!("config key {key}: cannot parse `{raw}`"))
            }),
        }
    }
}
