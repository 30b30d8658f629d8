//! Resolved run settings: an optional `key = value` file overlaid by flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Caps the worker count of path-parallel jobs.
pub const THREADS_ENV: &str = "ORBITFLOW_THREADS";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl Settings {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("config line {}: expected `key = value`, got `{line}`", i + 1)))?;
            let key = normalize(k);
            if key.is_empty() {
                return Err(CliError::config(format!("config line {}: empty key", i + 1)));
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::config(format!("config line {}: `{key}` set twice", i + 1)));
            }
        }
        Ok(Settings { values })
    }

    /// Reads a config file, returning its bytes for hashing.
    pub fn load(path: &Path) -> CliResult<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| CliError::config(format!("cannot read config file {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| CliError::config(format!("config file {} is not UTF-8", path.display())))?;
        Ok((Settings::parse(text)?, bytes))
    }

    /// A flag value; flags win over the file.
    pub fn set<T: ToString>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    pub fn set_flag(&mut self, key: &str, on: bool) {
        if on {
            self.values.insert(key.to_string(), "true".into());
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| CliError::config(format!("--{key}: cannot parse `{v}`"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> CliResult<T> {
        self.get(key)?.ok_or_else(|| CliError::config(format!("missing --{key} (flag or config key)")))
    }

    pub fn flag(&self, key: &str) -> CliResult<bool> {
        self.get_or(key, false)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Rejects keys outside `allowed`.
    pub fn allow_only(&self, allowed: &[&str], context: &str) -> CliResult<()> {
        match self.values.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::config(format!("{context} does not take `{k}`; accepted: {}", allowed.join(", ")))),
            None => Ok(()),
        }
    }

    pub fn into_map(self) -> BTreeMap<String, String> {
        self.values
    }

    pub fn map(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}

/// Worker cap from the environment, `None` when unset.
pub fn threads_from_env() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}
