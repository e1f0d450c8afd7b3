//! Minimal key=value configuration files.
//!
//! Format: one `key = value` pair per line, `#` starts a comment, blank
//! lines ignored. Keys are case-insensitive and `-` is folded to `_`, so
//! `degree-max`, `Degree-Max`, and `degree_max` name the same entry.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("expected key = value, got {line:?}"),
            })?;
            let key = normalize(key);
            if key.is_empty() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "empty key".into(),
                });
            }
            // Later assignments win, same as repeated command-line flags.
            entries.insert(key, value.trim().to_string());
        }
        Ok(ConfigMap { entries })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalize(key)).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Parses the value under `key`, or returns `fallback` when absent.
    pub fn get_or<T>(&self, key: &str, fallback: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(fallback),
            Some(value) => value.parse().map_err(|e| {
                Error::InvalidParam(format!("config key {}: {e}", normalize(key)))
            }),
        }
    }

    /// Parses the value under `key`; `None` when the key is absent.
    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(value) => value.parse().map(Some).map_err(|e| {
                Error::InvalidParam(format!("config key {}: {e}", normalize(key)))
            }),
        }
    }
}
