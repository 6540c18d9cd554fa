//! Line-oriented `key = value` text files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may not repeat.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvFile {
    entries: BTreeMap<String, String>,
    order: Vec<String>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut file = KvFile::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::MalformedInput(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::MalformedInput(format!("line {}: empty key", lineno + 1)));
            }
            if file.entries.contains_key(key) {
                return Err(Error::MalformedInput(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
            file.insert(key, value);
        }
        Ok(file)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::MalformedInput(msg) => Error::MalformedInput(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        if self.entries.insert(key.clone(), value.into()).is_none() {
            self.order.push(key);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::MalformedInput(format!("`{key}`: `{v}` is not a number")))
            })
            .transpose()
    }

    /// Keys in insertion order.
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(String::as_str)
    }

    /// Reject any key not accepted by `known`.
    pub fn check_keys(&self, known: impl Fn(&str) -> bool) -> Result<()> {
        match self.keys().find(|k| !known(k)) {
            Some(k) => Err(Error::Configuration(format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }

    /// Render in insertion order.
    pub fn to_text(&self) -> String {
        self.order
            .iter()
            .map(|k| format!("{k} = {}\n", self.entries[k]))
            .collect()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}
