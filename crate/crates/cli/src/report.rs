//! Report envelope and artifact output.

use crate::error::CliError;
use cqc_core::injection::GEOMETRY_VERSION;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: String,
    pub geometry_version: &'static str,
    pub seed: u64,
    pub config_hash: String,
    pub config: Value,
    pub result: Value,
}

/// SHA-256 of the compact JSON of the effective config.
pub fn config_hash(command: &str, config: &Value) -> String {
    let canonical = serde_json::json!({ "command": command, "config": config }).to_string();
    format!("{:x}", Sha256::digest(canonical.as_bytes()))
}

impl Report {
    pub fn new(command: &str, config: &impl Serialize, seed: u64, result: impl Serialize) -> Result<Self, CliError> {
        let config = to_value(config)?;
        Ok(Report {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            geometry_version: GEOMETRY_VERSION,
            seed,
            config_hash: config_hash(command, &config),
            config,
            result: to_value(&result)?,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn to_value(v: &impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::config(e.to_string()))
}

/// Write `text` to `path`, or to standard output when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::config(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::config(format!("stdout: {e}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash("census", &json!({"max_len": 12}));
        assert_eq!(a, config_hash("census", &json!({"max_len": 12})));
        assert_ne!(a, config_hash("census", &json!({"max_len": 13})));
        assert_ne!(a, config_hash("landscape", &json!({"max_len": 12})));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn envelope_fields() {
        let r = Report::new("verify", &json!({"seed": 3}), 3, json!({"ok": true})).unwrap();
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["geometry_version"], GEOMETRY_VERSION);
        assert_eq!(v["seed"], 3);
        assert_eq!(v["config"]["seed"], 3);
    }
}
