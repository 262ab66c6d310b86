//! Run summaries written next to command outputs.

use std::collections::BTreeMap;
use std::path::Path;

use battbee_core::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Summary of one command run. Everything except `generated_unix` is a
/// function of the inputs, so two runs on the same files differ only there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub generated_unix: u64,
    /// SHA-256 of each input file, keyed by role.
    pub inputs: BTreeMap<String, String>,
    pub config: serde_json::Value,
    pub results: serde_json::Value,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            generated_unix: now_unix(),
            inputs: BTreeMap::new(),
            config: serde_json::Value::Null,
            results: serde_json::Value::Null,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.inputs.insert(role.to_string(), digest(&bytes));
        Ok(())
    }

    pub fn with_config(mut self, config: &impl Serialize) -> Self {
        self.config = to_value(config);
        self
    }

    pub fn with_results(mut self, results: &impl Serialize) -> Self {
        self.results = to_value(results);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are plain data");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

/// Non-finite numbers become `null` in JSON.
fn to_value(v: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
