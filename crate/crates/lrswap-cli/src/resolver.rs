//! Flag / config-file resolution.
//!
//! Config files are flat `key=value` lines (`#` comments allowed). Flags
//! override file entries, which override defaults. Every resolved value is
//! recorded so reports can embed the exact configuration of a run.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

pub struct Resolver {
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let mut file = BTreeMap::new();
        if let Some(path) = path {
            let content = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {path:?}: {e}"))?;
            for (lineno, line) in content.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| format!("{path:?}:{} expected key=value", lineno + 1))?;
                file.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Resolver {
            file,
            resolved: BTreeMap::new(),
        })
    }

    pub fn file_value(&self, key: &str) -> Option<String> {
        self.file.get(key).cloned()
    }

    fn record(&mut self, key: &str, value: impl Display) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    /// Flag > config file > default.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, String>
    where
        T: FromStr + Display,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(raw) => raw
                    .parse::<T>()
                    .map_err(|_| format!("config key {key}: cannot parse {raw:?}"))?,
                None => default,
            },
        };
        self.record(key, &value);
        Ok(value)
    }

    /// Flag > config file, with no default; absent stays absent.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, String>
    where
        T: FromStr + Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(
                    raw.parse::<T>()
                        .map_err(|_| format!("config key {key}: cannot parse {raw:?}"))?,
                ),
                None => None,
            },
        };
        if let Some(ref v) = value {
            self.record(key, v);
        }
        Ok(value)
    }

    /// Flag > config file; missing is an input error.
    pub fn require<T>(&mut self, key: &str, flag: Option<T>) -> Result<T, String>
    where
        T: FromStr + Display,
    {
        self.optional(key, flag)?
            .ok_or_else(|| format!("missing required parameter --{key}"))
    }

    /// The resolved configuration of this run, for embedding in outputs.
    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }
}
